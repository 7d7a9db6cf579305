#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foliograd/errors.hpp"
#include "foliograd/kv.hpp"
#include "foliograd/market_data.hpp"
#include "foliograd/policy_net.hpp"
#include "foliograd/state_builder.hpp"
#include "foliograd/trainer.hpp"

namespace foliograd {

// Fully resolved run configuration. Every knob has a default, so an empty
// config file is a valid (synthetic-data) run; the echo map records the
// resolved value of every key and is embedded in all outputs.
struct RunConfig {
    // data source
    bool synthetic = true;
    std::string csv_path;
    std::string schema_path;
    bool append_cash = true;  // csv source only
    SynthSpec synth;

    SplitSpec split;
    std::vector<std::size_t> return_lags;   // delta-1
    std::vector<std::size_t> context_lags;  // delta-2
    std::size_t std_window = 20;

    // policy shape; data-dependent fields (m, context_rows, l1, l2) are
    // stamped in by complete_policy once the panel is known
    PolicySpec policy;

    TrainConfig train;
    std::string eval_split = "test";
    std::size_t grid_parallelism = 1;
    std::uint64_t seed = 0;

    KvMap echo;
};

namespace detail {

inline std::string render_int_list(const std::vector<std::size_t>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(v[i]);
    }
    return out + "]";
}

inline std::string render_double_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out + "]";
}

inline std::vector<std::size_t> to_size_list(const std::vector<long long>& v,
                                             const std::string& key) {
    std::vector<std::size_t> out;
    for (long long x : v) {
        if (x < 0) throw ConfigError("key '" + key + "': negative entry");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

// Uniform off-diagonal correlation, or a full row-major matrix.
inline Matrix read_correlation(const KvMap& kv, const std::string& prefix,
                               std::size_t m) {
    std::string mat_key = prefix + ".corr_matrix";
    if (kv.has(mat_key)) {
        std::vector<double> vals = kv.get_double_list(mat_key);
        if (vals.size() != m * m)
            throw ConfigError("key '" + mat_key + "': expected " +
                              std::to_string(m * m) + " entries");
        Matrix c(m, m);
        c.data = vals;
        return c;
    }
    double rho = kv.get_double(prefix + ".corr", 0.0);
    Matrix c(m, m, rho);
    for (std::size_t i = 0; i < m; ++i) c.at(i, i) = 1.0;
    return c;
}

}  // namespace detail

// Parses and defaults every key, then rejects unrecognized leftovers. The
// returned config's echo holds the complete resolved key set.
inline RunConfig resolve_config(const KvMap& kv) {
    RunConfig rc;

    std::string source = kv.get_string("data.source", "synth");
    if (source != "synth" && source != "csv")
        throw ConfigError("data.source must be 'synth' or 'csv'");
    rc.synthetic = source == "synth";

    rc.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

    if (rc.synthetic) {
        rc.synth.m_risky =
            static_cast<std::size_t>(kv.get_int("synth.assets", 3));
        rc.synth.days = static_cast<std::size_t>(kv.get_int("synth.days", 2700));
        rc.synth.seed = kv.has("synth.seed")
                            ? static_cast<std::uint64_t>(kv.get_int("synth.seed"))
                            : rc.seed;
        rc.synth.context_predictivity =
            kv.get_double("synth.context_predictivity", 0.9);
        // default aligned with the default split.train_start so a bare
        // config satisfies the split coverage precondition out of the box
        rc.synth.start_date = kv.has("synth.start_date")
                                  ? kv.get_date("synth.start_date")
                                  : Date{2010, 1, 1};
        rc.synth.corr_window =
            static_cast<std::size_t>(kv.get_int("synth.corr_window", 20));
        std::size_t nreg =
            static_cast<std::size_t>(kv.get_int("synth.regimes", 2));
        for (std::size_t g = 1; g <= nreg; ++g) {
            std::string p = "synth.regime" + std::to_string(g);
            RegimeSpec rg;
            std::size_t m = rc.synth.m_risky;
            // defaults paint a calm first regime and a crisis second
            std::vector<double> dmean(m, g == 1 ? 0.0004 : -0.004);
            std::vector<double> dvol(m, g == 1 ? 0.006 : 0.02);
            rg.mean = kv.has(p + ".mean") ? kv.get_double_list(p + ".mean") : dmean;
            rg.vol = kv.has(p + ".vol") ? kv.get_double_list(p + ".vol") : dvol;
            rg.expected_duration =
                kv.get_double(p + ".duration", g == 1 ? 60.0 : 15.0);
            rg.correlation = detail::read_correlation(kv, p, m);
            rc.synth.regimes.push_back(std::move(rg));
        }
        rc.synth.validate();
    } else {
        rc.csv_path = kv.get_string("data.csv");
        rc.schema_path = kv.get_string("data.schema");
        rc.append_cash = kv.get_bool("data.append_cash", false);
    }

    auto range = [&](const std::string& name, const char* dstart,
                     const char* dend) {
        DateRange r;
        r.start = kv.has("split." + name + "_start")
                      ? kv.get_date("split." + name + "_start")
                      : parse_date(dstart);
        r.end = kv.has("split." + name + "_end")
                    ? kv.get_date("split." + name + "_end")
                    : parse_date(dend);
        return r;
    };
    rc.split.train = range("train", "2010-01-01", "2015-12-31");
    rc.split.validation = range("validation", "2016-01-01", "2017-12-31");
    rc.split.test = range("test", "2018-01-01", "2020-03-31");
    rc.split.validate();

    // documented default, most distant lag first; LagSpec sorts internally
    std::vector<std::size_t> default_lags{60, 20, 4, 3, 2, 1, 0};
    rc.return_lags =
        kv.has("lags.returns")
            ? detail::to_size_list(kv.get_int_list("lags.returns"), "lags.returns")
            : default_lags;
    rc.context_lags =
        kv.has("lags.context")
            ? detail::to_size_list(kv.get_int_list("lags.context"), "lags.context")
            : default_lags;
    rc.std_window = static_cast<std::size_t>(kv.get_int("std_window", 20));
    if (rc.std_window < 2) throw ConfigError("std_window must be >= 2");

    rc.policy.arch = parse_arch(kv.get_string("network.arch", "conv"));
    rc.policy.use_context = kv.get_bool("network.context", true);
    rc.policy.use_prev_weights = kv.get_bool("network.prev_weights", false);
    auto filters = kv.has("network.conv1_filters")
                       ? detail::to_size_list(kv.get_int_list("network.conv1_filters"),
                                              "network.conv1_filters")
                       : std::vector<std::size_t>{5, 10};
    if (filters.size() != 2)
        throw ConfigError("network.conv1_filters needs exactly 2 entries");
    rc.policy.conv1_filters = {filters[0], filters[1]};
    auto strides = kv.has("network.conv1_strides")
                       ? detail::to_size_list(kv.get_int_list("network.conv1_strides"),
                                              "network.conv1_strides")
                       : std::vector<std::size_t>{2, 1};
    if (strides.size() != 2)
        throw ConfigError("network.conv1_strides needs exactly 2 entries");
    rc.policy.conv1_strides = {strides[0], strides[1]};
    rc.policy.conv1_kernel =
        static_cast<std::size_t>(kv.get_int("network.conv1_kernel", 3));
    rc.policy.conv2_filters =
        static_cast<std::size_t>(kv.get_int("network.conv2_filters", 2));
    rc.policy.conv2_stride =
        static_cast<std::size_t>(kv.get_int("network.conv2_stride", 1));
    rc.policy.conv2_kernel =
        static_cast<std::size_t>(kv.get_int("network.conv2_kernel", 3));
    rc.policy.lstm_hidden =
        static_cast<std::size_t>(kv.get_int("network.lstm_hidden", 16));
    auto dense = kv.has("network.dense")
                     ? detail::to_size_list(kv.get_int_list("network.dense"),
                                            "network.dense")
                     : std::vector<std::size_t>{32, 16};
    if (dense.size() != 2)
        throw ConfigError("network.dense needs exactly 2 entries");
    rc.policy.dense_sizes = {dense[0], dense[1]};

    rc.train.reward = parse_reward(kv.get_string("train.reward", "net_profit"));
    rc.train.adversarial = kv.get_bool("train.adversarial", false);
    rc.train.noise_std = kv.get_double("train.noise_std", 0.002);
    rc.train.batch_size =
        static_cast<std::size_t>(kv.get_int("train.batch_size", 50));
    rc.train.episode_length =
        static_cast<std::size_t>(kv.get_int("train.episode_length", 120));
    rc.train.epochs = static_cast<std::size_t>(kv.get_int("train.epochs", 100));
    rc.train.learning_rate = kv.get_double("train.learning_rate", 0.01);
    rc.train.l2 = kv.get_double("train.l2", 1e-8);
    rc.train.commission = kv.get_double("commission", 0.001);
    rc.train.seed = rc.seed;
    rc.train.validate();

    rc.eval_split = kv.get_string("eval.split", "test");
    if (rc.eval_split != "train" && rc.eval_split != "validation" &&
        rc.eval_split != "test")
        throw ConfigError("eval.split must be train, validation, or test");
    long long par = kv.get_int("grid.parallelism", 1);
    if (par < 1) throw ConfigError("grid.parallelism must be >= 1");
    rc.grid_parallelism = static_cast<std::size_t>(par);

    std::vector<std::string> unknown = kv.untouched();
    if (!unknown.empty()) {
        std::string msg = "unrecognized config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    // ---- resolved echo ----------------------------------------------------
    KvMap& e = rc.echo;
    e.set("data.source", source);
    e.set("seed", std::to_string(rc.seed));
    if (rc.synthetic) {
        e.set("synth.assets", std::to_string(rc.synth.m_risky));
        e.set("synth.days", std::to_string(rc.synth.days));
        e.set("synth.seed", std::to_string(rc.synth.seed));
        e.set("synth.context_predictivity",
              format_double(rc.synth.context_predictivity));
        e.set("synth.start_date", rc.synth.start_date.to_string());
        e.set("synth.corr_window", std::to_string(rc.synth.corr_window));
        e.set("synth.regimes", std::to_string(rc.synth.regimes.size()));
        for (std::size_t g = 0; g < rc.synth.regimes.size(); ++g) {
            const auto& rg = rc.synth.regimes[g];
            std::string p = "synth.regime" + std::to_string(g + 1);
            e.set(p + ".mean", detail::render_double_list(rg.mean));
            e.set(p + ".vol", detail::render_double_list(rg.vol));
            e.set(p + ".duration", format_double(rg.expected_duration));
            e.set(p + ".corr_matrix",
                  detail::render_double_list(rg.correlation.data));
        }
    } else {
        e.set("data.csv", rc.csv_path);
        e.set("data.schema", rc.schema_path);
        e.set("data.append_cash", rc.append_cash ? "true" : "false");
    }
    e.set("split.train_start", rc.split.train.start.to_string());
    e.set("split.train_end", rc.split.train.end.to_string());
    e.set("split.validation_start", rc.split.validation.start.to_string());
    e.set("split.validation_end", rc.split.validation.end.to_string());
    e.set("split.test_start", rc.split.test.start.to_string());
    e.set("split.test_end", rc.split.test.end.to_string());
    e.set("lags.returns", detail::render_int_list(rc.return_lags));
    e.set("lags.context", detail::render_int_list(rc.context_lags));
    e.set("std_window", std::to_string(rc.std_window));
    e.set("network.arch", arch_name(rc.policy.arch));
    e.set("network.context", rc.policy.use_context ? "true" : "false");
    e.set("network.prev_weights",
          rc.policy.use_prev_weights ? "true" : "false");
    e.set("network.conv1_filters",
          detail::render_int_list({rc.policy.conv1_filters[0],
                                   rc.policy.conv1_filters[1]}));
    e.set("network.conv1_strides",
          detail::render_int_list({rc.policy.conv1_strides[0],
                                   rc.policy.conv1_strides[1]}));
    e.set("network.conv1_kernel", std::to_string(rc.policy.conv1_kernel));
    e.set("network.conv2_filters", std::to_string(rc.policy.conv2_filters));
    e.set("network.conv2_stride", std::to_string(rc.policy.conv2_stride));
    e.set("network.conv2_kernel", std::to_string(rc.policy.conv2_kernel));
    e.set("network.lstm_hidden", std::to_string(rc.policy.lstm_hidden));
    e.set("network.dense",
          detail::render_int_list({rc.policy.dense_sizes[0],
                                   rc.policy.dense_sizes[1]}));
    e.set("train.reward", reward_name(rc.train.reward));
    e.set("train.adversarial", rc.train.adversarial ? "true" : "false");
    e.set("train.noise_std", format_double(rc.train.noise_std));
    e.set("train.batch_size", std::to_string(rc.train.batch_size));
    e.set("train.episode_length", std::to_string(rc.train.episode_length));
    e.set("train.epochs", std::to_string(rc.train.epochs));
    e.set("train.learning_rate", format_double(rc.train.learning_rate));
    e.set("train.l2", format_double(rc.train.l2));
    e.set("commission", format_double(rc.train.commission));
    e.set("eval.split", rc.eval_split);
    e.set("grid.parallelism", std::to_string(rc.grid_parallelism));
    return rc;
}

// Stamps the data-dependent dimensions into the policy spec.
inline PolicySpec complete_policy(PolicySpec base, const ReturnPanel& panel,
                                  const std::vector<std::size_t>& return_lags,
                                  const std::vector<std::size_t>& context_lags) {
    base.m = panel.assets();
    base.context_rows = panel.context_features() + 3;
    base.l1 = return_lags.size();
    base.l2 = context_lags.size();
    base.validate();
    return base;
}

}  // namespace foliograd
