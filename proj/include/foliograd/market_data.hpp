#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "foliograd/dates.hpp"
#include "foliograd/errors.hpp"
#include "foliograd/kv.hpp"
#include "foliograd/linalg.hpp"
#include "foliograd/rng.hpp"

namespace foliograd {

constexpr std::size_t kNoCash = static_cast<std::size_t>(-1);

// Aligned panel of daily simple returns plus per-day context features.
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> asset_names;   // m
    std::vector<std::string> context_names; // k
    Matrix asset_returns;                   // [T x m]
    Matrix context;                         // [T x k]
    std::size_t cash_index = kNoCash;       // column with identically zero returns
    std::size_t dropped_rows = 0;           // rows removed during alignment

    std::size_t days() const { return dates.size(); }
    std::size_t assets() const { return asset_names.size(); }
    std::size_t context_features() const { return context_names.size(); }

    void validate() const {
        std::size_t t = dates.size();
        if (asset_returns.rows != t || context.rows != t)
            throw DataError("panel: row count mismatch");
        if (asset_returns.cols != asset_names.size())
            throw DataError("panel: asset column mismatch");
        if (context.cols != context_names.size())
            throw DataError("panel: context column mismatch");
        for (std::size_t i = 1; i < t; ++i)
            if (!(dates[i - 1] < dates[i]))
                throw DataError("panel: dates not strictly increasing at row " +
                                std::to_string(i));
        for (double r : asset_returns.data) {
            if (!std::isfinite(r))
                throw DataError("panel: non-finite return");
            if (std::fabs(r) >= 1.0)
                throw DataError("panel: daily return at or beyond -100%");
        }
        for (double c : context.data)
            if (!std::isfinite(c)) throw DataError("panel: non-finite context value");
        if (cash_index != kNoCash) {
            if (cash_index >= asset_names.size())
                throw DataError("panel: cash index out of range");
            for (std::size_t i = 0; i < t; ++i)
                if (asset_returns.at(i, cash_index) != 0.0)
                    throw DataError("panel: cash column has nonzero return");
        }
    }
};

// Contiguous date ranges, inclusive on both ends.
struct DateRange {
    Date start;
    Date end;
};

struct SplitSpec {
    DateRange train;
    DateRange validation;
    DateRange test;

    void validate() const {
        auto ordered = [](const DateRange& r) { return !(r.end < r.start); };
        if (!ordered(train) || !ordered(validation) || !ordered(test))
            throw ConfigError("split: range end before start");
        if (!(train.end < validation.start))
            throw ConfigError("split: validation must start after train ends");
        if (!(validation.end < test.start))
            throw ConfigError("split: test must start after validation ends");
    }
};

// One regime of the switching generator.
struct RegimeSpec {
    std::vector<double> mean;        // per risky asset, daily
    std::vector<double> vol;         // per risky asset, daily
    Matrix correlation;              // [m_risky x m_risky]
    double expected_duration = 1.0;  // days
};

struct SynthSpec {
    std::size_t m_risky = 0;
    std::size_t days = 0;
    std::vector<RegimeSpec> regimes;
    double context_predictivity = 1.0;  // P(flag == true regime)
    std::uint64_t seed = 0;
    Date start_date{2010, 1, 4};
    std::size_t corr_window = 20;  // trailing window of the correlation proxy

    void validate() const {
        if (m_risky < 1) throw ConfigError("synth: need at least one risky asset");
        if (days < 1) throw ConfigError("synth: need at least one day");
        if (regimes.empty()) throw ConfigError("synth: need at least one regime");
        if (context_predictivity < 0.0 || context_predictivity > 1.0)
            throw ConfigError("synth: context_predictivity outside [0,1]");
        for (const auto& rg : regimes) {
            if (rg.mean.size() != m_risky || rg.vol.size() != m_risky)
                throw ConfigError("synth: regime mean/vol size mismatch");
            if (rg.correlation.rows != m_risky || rg.correlation.cols != m_risky)
                throw ConfigError("synth: correlation matrix size mismatch");
            if (rg.expected_duration < 1.0)
                throw ConfigError("synth: expected duration below one day");
            for (double v : rg.vol)
                if (v < 0.0) throw ConfigError("synth: negative volatility");
            for (std::size_t i = 0; i < m_risky; ++i) {
                if (std::fabs(rg.correlation.at(i, i) - 1.0) > 1e-12)
                    throw ConfigError("synth: correlation diagonal must be 1");
                for (std::size_t j = 0; j < i; ++j) {
                    double c = rg.correlation.at(i, j);
                    if (std::fabs(c - rg.correlation.at(j, i)) > 1e-12)
                        throw ConfigError("synth: correlation not symmetric");
                    if (std::fabs(c) > 1.0)
                        throw ConfigError("synth: correlation entry beyond [-1,1]");
                }
            }
        }
    }
};

// ---- CSV loading --------------------------------------------------------

enum class ColumnRole { Date, AssetPrice, AssetReturn, AssetCash, Context, Ignore };

inline ColumnRole parse_column_role(const std::string& s) {
    if (s == "date") return ColumnRole::Date;
    if (s == "asset_price") return ColumnRole::AssetPrice;
    if (s == "asset_return") return ColumnRole::AssetReturn;
    if (s == "asset_cash") return ColumnRole::AssetCash;
    if (s == "context") return ColumnRole::Context;
    if (s == "ignore") return ColumnRole::Ignore;
    throw ConfigError("unknown column role '" + s + "'");
}

// column name -> role; unmapped columns are ignored
using CsvSchema = std::map<std::string, ColumnRole>;

inline CsvSchema load_csv_schema(const std::string& path) {
    KvMap kv = KvMap::from_file(path);
    CsvSchema schema;
    for (const auto& [col, role] : kv.entries())
        schema[col] = parse_column_role(role);
    return schema;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline bool is_missing_cell(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

inline double parse_cell(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": non-numeric cell '" + s + "'");
    }
}

}  // namespace detail

// Reads one CSV (header row, ISO dates) and assembles an aligned panel.
// Price columns are converted to simple returns across consecutive kept
// rows; rows with any missing cell are dropped first and counted.
inline ReturnPanel load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file: " + path);

    // leading '#' lines carry provenance notes (config echoes); skip them
    std::string header;
    std::size_t header_line = 0;
    while (true) {
        if (!std::getline(in, header)) throw DataError(path + ": empty file");
        ++header_line;
        std::string t = detail::trim(header);
        if (!t.empty() && t[0] != '#') break;
    }
    std::vector<std::string> cols = detail::split_csv_line(header);

    std::size_t date_col = static_cast<std::size_t>(-1);
    struct Pick {
        std::size_t col;
        std::string name;
        ColumnRole role;
    };
    std::vector<Pick> asset_cols, context_cols;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        auto it = schema.find(cols[i]);
        ColumnRole role;
        if (it != schema.end())
            role = it->second;
        else if (cols[i] == "date")
            role = ColumnRole::Date;
        else
            continue;
        switch (role) {
            case ColumnRole::Date:
                if (date_col != static_cast<std::size_t>(-1))
                    throw DataError(path + ": multiple date columns");
                date_col = i;
                break;
            case ColumnRole::AssetPrice:
            case ColumnRole::AssetReturn:
            case ColumnRole::AssetCash:
                asset_cols.push_back({i, cols[i], role});
                break;
            case ColumnRole::Context:
                context_cols.push_back({i, cols[i], ColumnRole::Context});
                break;
            case ColumnRole::Ignore:
                break;
        }
    }
    if (date_col == static_cast<std::size_t>(-1))
        throw DataError(path + ": no date column");
    if (asset_cols.size() < 2)
        throw DataError(path + ": fewer than 2 asset columns");
    std::size_t cash_count = 0, cash_index = kNoCash;
    for (std::size_t a = 0; a < asset_cols.size(); ++a)
        if (asset_cols[a].role == ColumnRole::AssetCash) {
            ++cash_count;
            cash_index = a;
        }
    if (cash_count > 1) throw DataError(path + ": multiple cash columns");

    // Pass 1: parse, dropping incomplete rows.
    std::vector<Date> dates;
    std::vector<std::vector<double>> raw_assets;  // per kept row
    std::vector<std::vector<double>> raw_context;
    std::size_t dropped = 0;
    std::string line;
    std::size_t lineno = header_line;
    while (std::getline(in, line)) {
        ++lineno;
        std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != cols.size())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected " + std::to_string(cols.size()) +
                            " cells, got " + std::to_string(cells.size()));
        bool missing = detail::is_missing_cell(cells[date_col]);
        for (const auto& p : asset_cols) missing = missing || detail::is_missing_cell(cells[p.col]);
        for (const auto& p : context_cols) missing = missing || detail::is_missing_cell(cells[p.col]);
        if (missing) {
            ++dropped;
            continue;
        }
        std::string where = path + ":" + std::to_string(lineno);
        dates.push_back(parse_date(cells[date_col]));
        std::vector<double> arow, crow;
        arow.reserve(asset_cols.size());
        crow.reserve(context_cols.size());
        for (const auto& p : asset_cols) arow.push_back(detail::parse_cell(cells[p.col], where));
        for (const auto& p : context_cols) crow.push_back(detail::parse_cell(cells[p.col], where));
        raw_assets.push_back(std::move(arow));
        raw_context.push_back(std::move(crow));
    }
    if (dates.empty())
        throw DataError(path + ": empty intersection of complete rows");
    for (std::size_t i = 1; i < dates.size(); ++i)
        if (!(dates[i - 1] < dates[i]))
            throw DataError(path + ": dates not strictly increasing");

    // Pass 2: convert prices to returns across consecutive kept rows. The
    // first kept row is consumed when any price column is present.
    bool any_price = false;
    for (const auto& p : asset_cols) any_price = any_price || p.role == ColumnRole::AssetPrice;
    std::size_t first = any_price ? 1 : 0;
    if (dates.size() <= first)
        throw DataError(path + ": not enough rows to form returns");

    ReturnPanel panel;
    std::size_t t = dates.size() - first;
    panel.dates.assign(dates.begin() + static_cast<long>(first), dates.end());
    for (const auto& p : asset_cols) panel.asset_names.push_back(p.name);
    for (const auto& p : context_cols) panel.context_names.push_back(p.name);
    panel.asset_returns = Matrix(t, asset_cols.size());
    panel.context = Matrix(t, context_cols.size());
    panel.cash_index = cash_index;
    panel.dropped_rows = dropped;
    for (std::size_t r = 0; r < t; ++r) {
        std::size_t src = r + first;
        for (std::size_t a = 0; a < asset_cols.size(); ++a) {
            double v;
            if (asset_cols[a].role == ColumnRole::AssetPrice) {
                double p0 = raw_assets[src - 1][a];
                double p1 = raw_assets[src][a];
                if (p0 <= 0.0)
                    throw DataError(path + ": non-positive price in column '" +
                                    asset_cols[a].name + "'");
                v = p1 / p0 - 1.0;
            } else {
                v = raw_assets[src][a];
            }
            panel.asset_returns.at(r, a) = v;
        }
        for (std::size_t c = 0; c < context_cols.size(); ++c)
            panel.context.at(r, c) = raw_context[src][c];
    }
    panel.validate();
    return panel;
}

// Appends a zero-return cash asset as the last column.
inline ReturnPanel append_cash_asset(const ReturnPanel& panel,
                                     const std::string& name = "cash") {
    if (panel.cash_index != kNoCash)
        throw DataError("panel already has a cash asset");
    ReturnPanel out = panel;
    std::size_t t = panel.days(), m = panel.assets();
    out.asset_names.push_back(name);
    out.asset_returns = Matrix(t, m + 1);
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t a = 0; a < m; ++a)
            out.asset_returns.at(r, a) = panel.asset_returns.at(r, a);
    out.cash_index = m;
    out.validate();
    return out;
}

// ---- synthetic generator -------------------------------------------------

// Markov-switching multivariate Gaussian daily returns over weekdays, plus a
// cash column and three context features: a (possibly corrupted) regime
// flag, a trailing correlation proxy between the first two risky assets,
// and pure noise. Fully determined by the spec.
inline ReturnPanel synthesize(const SynthSpec& spec) {
    spec.validate();
    std::size_t m = spec.m_risky, t = spec.days, nreg = spec.regimes.size();

    // Per-regime scaled Cholesky factors: cov = D C D => L = D chol(C).
    std::vector<Matrix> lower;
    lower.reserve(nreg);
    for (const auto& rg : spec.regimes) {
        Matrix l = cholesky_psd(rg.correlation);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) l.at(i, j) *= rg.vol[i];
        lower.push_back(std::move(l));
    }

    Rng rng(derive_seed(spec.seed, {0x73796e7468ull}));  // "synth"
    ReturnPanel panel;
    panel.dates = weekday_sequence(spec.start_date, t);
    for (std::size_t a = 0; a < m; ++a)
        panel.asset_names.push_back("risky_" + std::to_string(a + 1));
    panel.asset_names.push_back("cash");
    panel.cash_index = m;
    panel.context_names = {"regime_flag", "corr_proxy", "noise"};
    panel.asset_returns = Matrix(t, m + 1);
    panel.context = Matrix(t, 3);

    std::size_t regime = 0;
    std::vector<std::size_t> path(t);
    for (std::size_t d = 0; d < t; ++d) {
        if (d > 0 && nreg > 1) {
            double p_leave = 1.0 / spec.regimes[regime].expected_duration;
            if (rng.uniform() < p_leave) {
                std::size_t pick = rng.uniform_index(nreg - 1);
                regime = pick >= regime ? pick + 1 : pick;
            }
        }
        path[d] = regime;
        const auto& rg = spec.regimes[regime];
        std::vector<double> z = rng.normal_vector(m);
        for (std::size_t i = 0; i < m; ++i) {
            double r = rg.mean[i];
            for (std::size_t j = 0; j <= i; ++j) r += lower[regime].at(i, j) * z[j];
            if (!std::isfinite(r) || std::fabs(r) >= 1.0)
                throw DataError("synth: generated return out of (-1, 1); "
                                "moderate the regime parameters");
            panel.asset_returns.at(d, i) = r;
        }
        panel.asset_returns.at(d, m) = 0.0;

        // context 0: regime flag, wrong with rate 1 - predictivity
        double flag = static_cast<double>(regime);
        if (nreg > 1 && rng.uniform() >= spec.context_predictivity) {
            std::size_t pick = rng.uniform_index(nreg - 1);
            flag = static_cast<double>(pick >= regime ? pick + 1 : pick);
        }
        panel.context.at(d, 0) = flag;
        // context 2: plain noise
        panel.context.at(d, 2) = rng.normal();
    }

    // context 1: trailing correlation between the first two risky assets
    // (zero while the window has fewer than two points or no dispersion)
    for (std::size_t d = 0; d < t; ++d) {
        double corr = 0.0;
        if (m >= 2) {
            std::size_t begin = d + 1 >= spec.corr_window ? d + 1 - spec.corr_window : 0;
            std::size_t n = d - begin + 1;
            if (n >= 2) {
                double ma = 0.0, mb = 0.0;
                for (std::size_t i = begin; i <= d; ++i) {
                    ma += panel.asset_returns.at(i, 0);
                    mb += panel.asset_returns.at(i, 1);
                }
                ma /= static_cast<double>(n);
                mb /= static_cast<double>(n);
                double sab = 0.0, saa = 0.0, sbb = 0.0;
                for (std::size_t i = begin; i <= d; ++i) {
                    double da = panel.asset_returns.at(i, 0) - ma;
                    double db = panel.asset_returns.at(i, 1) - mb;
                    sab += da * db;
                    saa += da * da;
                    sbb += db * db;
                }
                if (saa > 0.0 && sbb > 0.0) corr = sab / std::sqrt(saa * sbb);
            }
        }
        panel.context.at(d, 1) = corr;
    }

    panel.validate();
    return panel;
}

// ---- rolling statistics ----------------------------------------------------

// Trailing sample standard deviation over `window` days inclusive of day t.
// Rows before window-1 are NaN (insufficient history).
inline Matrix rolling_std(const ReturnPanel& panel, std::size_t window) {
    if (window < 2) throw DataError("rolling_std: window must be >= 2");
    if (window > panel.days())
        throw DataError("rolling_std: window exceeds panel length");
    std::size_t t = panel.days(), m = panel.assets();
    Matrix out(t, m, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> buf(window);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t d = window - 1; d < t; ++d) {
            for (std::size_t i = 0; i < window; ++i)
                buf[i] = panel.asset_returns.at(d - window + 1 + i, a);
            out.at(d, a) = sample_std(buf);
        }
    return out;
}

// ---- splitting ---------------------------------------------------------------

// One split with `eval_begin` leading history-only rows: rows before it exist
// purely so day-one states have enough lagged history.
struct SplitPanel {
    ReturnPanel panel;
    std::size_t eval_begin = 0;

    std::size_t eval_days() const { return panel.days() - eval_begin; }
};

struct SplitResult {
    SplitPanel train;
    SplitPanel validation;
    SplitPanel test;
};

namespace detail {

inline ReturnPanel slice_rows(const ReturnPanel& p, std::size_t begin,
                              std::size_t end) {
    ReturnPanel out;
    out.asset_names = p.asset_names;
    out.context_names = p.context_names;
    out.cash_index = p.cash_index;
    out.dropped_rows = 0;
    out.dates.assign(p.dates.begin() + static_cast<long>(begin),
                     p.dates.begin() + static_cast<long>(end));
    std::size_t t = end - begin, m = p.assets(), k = p.context_features();
    out.asset_returns = Matrix(t, m);
    out.context = Matrix(t, k);
    for (std::size_t r = 0; r < t; ++r) {
        for (std::size_t a = 0; a < m; ++a)
            out.asset_returns.at(r, a) = p.asset_returns.at(begin + r, a);
        for (std::size_t c = 0; c < k; ++c)
            out.context.at(r, c) = p.context.at(begin + r, c);
    }
    return out;
}

inline std::size_t lower_bound_date(const std::vector<Date>& dates, Date d) {
    return static_cast<std::size_t>(
        std::lower_bound(dates.begin(), dates.end(), d) - dates.begin());
}

inline std::size_t upper_bound_date(const std::vector<Date>& dates, Date d) {
    return static_cast<std::size_t>(
        std::upper_bound(dates.begin(), dates.end(), d) - dates.begin());
}

inline SplitPanel take_range(const ReturnPanel& p, const DateRange& r,
                             std::size_t warmup, const char* label) {
    if (!(p.dates.front() <= r.start) || !(r.end <= p.dates.back()))
        throw DataError(std::string("split: ") + label +
                        " range not covered by panel dates");
    std::size_t begin = lower_bound_date(p.dates, r.start);
    std::size_t end = upper_bound_date(p.dates, r.end);
    if (begin >= end)
        throw DataError(std::string("split: ") + label +
                        " range holds no panel rows");
    std::size_t hist = std::min(warmup, begin);
    SplitPanel out;
    out.panel = slice_rows(p, begin - hist, end);
    out.eval_begin = hist;
    return out;
}

}  // namespace detail

// Cuts the panel into train/validation/test. Each split carries up to
// `warmup` rows of preceding history (eval_begin marks where evaluation
// starts) so states on its first evaluation day are computable.
inline SplitResult split(const ReturnPanel& panel, const SplitSpec& spec,
                         std::size_t warmup) {
    spec.validate();
    if (panel.days() == 0) throw DataError("split: empty panel");
    SplitResult out;
    out.train = detail::take_range(panel, spec.train, warmup, "train");
    out.validation = detail::take_range(panel, spec.validation, warmup, "validation");
    out.test = detail::take_range(panel, spec.test, warmup, "test");
    return out;
}

}  // namespace foliograd
