#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "foliograd/dates.hpp"
#include "foliograd/errors.hpp"

namespace foliograd {

// Round-trippable decimal rendering: the shortest %g form that reads back
// exactly. All precisions are scanned because a higher precision can yield a
// shorter string (one significant digit prints 60 as 6e+01, two print it as
// plain 60); ties keep the lowest precision.
inline std::string format_double(double v) {
    std::string best;
    for (int prec = 1; prec <= 17; ++prec) {
        char probe[64];
        int len = std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        bool exact = back == v || (back != back && v != v);
        if (exact && (best.empty() || static_cast<std::size_t>(len) < best.size()))
            best.assign(probe, static_cast<std::size_t>(len));
    }
    return best;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Flat key = value configuration text. One pair per line, '#' starts a
// comment, lists use [a, b, c]. Values stay strings until a typed getter
// asks for them; getters mark keys as touched so callers can flag typos.
class KvMap {
public:
    KvMap() = default;

    static KvMap from_text(const std::string& text, const std::string& origin = "<text>") {
        KvMap kv;
        kv.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = detail::trim(line);
            if (t.empty()) continue;
            std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            std::string key = detail::trim(t.substr(0, eq));
            std::string val = detail::trim(t.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": empty key");
            if (kv.values_.count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
            kv.values_[key] = val;
        }
        return kv;
    }

    static KvMap from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    bool empty() const { return values_.empty(); }

    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
    }

    // ---- typed getters -------------------------------------------------

    std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(miss(key));
        touched_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& dflt) const {
        return has(key) ? get_string(key) : dflt;
    }

    long long get_int(const std::string& key) const {
        return parse_int(key, get_string(key));
    }
    long long get_int(const std::string& key, long long dflt) const {
        return has(key) ? get_int(key) : dflt;
    }

    double get_double(const std::string& key) const {
        return parse_double(key, get_string(key));
    }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }

    bool get_bool(const std::string& key) const {
        std::string v = get_string(key);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError(where(key) + ": not a boolean: '" + v + "'");
    }
    bool get_bool(const std::string& key, bool dflt) const {
        return has(key) ? get_bool(key) : dflt;
    }

    Date get_date(const std::string& key) const {
        return parse_date(get_string(key));
    }

    std::vector<std::string> get_string_list(const std::string& key) const {
        std::string v = get_string(key);
        if (v.size() < 2 || v.front() != '[' || v.back() != ']')
            throw ConfigError(where(key) + ": expected [a, b, ...], got '" + v + "'");
        std::string body = v.substr(1, v.size() - 2);
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(body);
        while (std::getline(in, item, ',')) out.push_back(detail::trim(item));
        if (out.size() == 1 && out[0].empty()) out.clear();
        return out;
    }

    std::vector<long long> get_int_list(const std::string& key) const {
        std::vector<long long> out;
        for (const auto& s : get_string_list(key)) out.push_back(parse_int(key, s));
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_string_list(key)) out.push_back(parse_double(key, s));
        return out;
    }

    // ---- bookkeeping -----------------------------------------------------

    const std::map<std::string, std::string>& entries() const { return values_; }

    // Keys present but never read through a getter (likely typos).
    std::vector<std::string> untouched() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!touched_.count(k)) out.push_back(k);
        return out;
    }

    // Canonical sorted "key = value" rendering for echoing into outputs.
    std::string render() const {
        std::string out;
        for (const auto& [k, v] : values_) {
            out += k;
            out += " = ";
            out += v;
            out += '\n';
        }
        return out;
    }

private:
    std::string miss(const std::string& key) const {
        return origin_ + ": missing required key '" + key + "'";
    }
    std::string where(const std::string& key) const {
        return origin_ + ": key '" + key + "'";
    }
    long long parse_int(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            long long x = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(where(key) + ": not an integer: '" + v + "'");
        }
    }
    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(where(key) + ": not a number: '" + v + "'");
        }
    }

    std::string origin_ = "<empty>";
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> touched_;
};

}  // namespace foliograd
