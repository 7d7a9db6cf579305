#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "foliograd/errors.hpp"
#include "foliograd/kv.hpp"
#include "foliograd/linalg.hpp"
#include "foliograd/market_data.hpp"
#include "foliograd/policy_net.hpp"
#include "foliograd/state_builder.hpp"

namespace foliograd {

constexpr double kTradingDaysPerYear = 252.0;

// (1 + total)^(252/n) - 1
inline double annualize(double total_return, std::size_t n_days) {
    if (n_days < 1) throw DataError("annualize: need at least one day");
    if (total_return <= -1.0)
        throw DataError("annualize: total return at or below -100%");
    return std::pow(1.0 + total_return,
                    kTradingDaysPerYear / static_cast<double>(n_days)) -
           1.0;
}

// Annualized mean-over-std of daily returns. `raw` is NaN when the returns
// have no dispersion. `available` applies the reporting convention: a ratio
// is only quoted when the dispersion exists and the compounded annual return
// is positive; otherwise tables show "na" (while raw stays logged).
struct SharpeResult {
    double raw = std::numeric_limits<double>::quiet_NaN();
    bool available = false;
};

inline SharpeResult sharpe(const std::vector<double>& daily_returns) {
    if (daily_returns.size() < 2)
        throw DataError("sharpe: need at least 2 observations");
    SharpeResult out;
    double sd = sample_std(daily_returns);
    if (sd < 1e-12) return out;  // raw NaN, unavailable
    out.raw = mean(daily_returns) / sd * std::sqrt(kTradingDaysPerYear);
    double total = 1.0;
    for (double r : daily_returns) total *= 1.0 + r;
    double annual = annualize(total - 1.0, daily_returns.size());
    out.available = annual > 0.0;
    return out;
}

// Largest peak-to-trough drop of a value path, as a positive fraction.
inline double max_drawdown(const std::vector<double>& values) {
    double peak = -std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (double v : values) {
        peak = std::max(peak, v);
        if (peak > 0.0) worst = std::max(worst, (peak - v) / peak);
    }
    return worst;
}

// Shared daily accounting: weights chosen at t earn the returns realized
// over (t, t+1], minus a linear cost on the rebalancing turnover. The
// trainer replicates this expression on-tape; the two are held to agree to
// 1e-10 by test.
inline double portfolio_day_return(const std::vector<double>& w,
                                   const std::vector<double>& w_prev,
                                   const double* next_returns,
                                   double commission) {
    double gain = 0.0, turnover = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        gain += w[i] * next_returns[i];
        turnover += std::fabs(w[i] - w_prev[i]);
    }
    return gain - commission * turnover;
}

// All cash when the panel has a cash column, else uniform.
inline std::vector<double> initial_weights(const ReturnPanel& panel) {
    std::vector<double> w(panel.assets(), 0.0);
    if (panel.cash_index != kNoCash)
        w[panel.cash_index] = 1.0;
    else
        w.assign(panel.assets(),
                 1.0 / static_cast<double>(panel.assets()));
    return w;
}

struct BacktestSummary {
    double total_return = 0.0;
    double annual_return = 0.0;
    double annual_std = 0.0;
    SharpeResult sharpe;
    double max_drawdown = 0.0;
};

struct BacktestReport {
    std::string model_label;
    std::vector<Date> dates;            // decision days
    Matrix weights;                     // [T x m], row t = weights chosen that day
    std::vector<double> daily_returns;  // realized over (t, t+1]
    std::vector<double> turnover;
    std::vector<double> values;         // [T+1], values[0] = 1
    std::vector<std::string> asset_names;
    double commission = 0.0;
    BacktestSummary summary;
    std::map<std::string, std::string> meta;  // config echo, input hashes

    void recompute_summary() {
        double v = 1.0;
        for (double r : daily_returns) v *= 1.0 + r;
        summary.total_return = v - 1.0;
        summary.annual_return =
            annualize(summary.total_return, daily_returns.size());
        summary.annual_std =
            sample_std(daily_returns) * std::sqrt(kTradingDaysPerYear);
        summary.sharpe = daily_returns.size() >= 2 ? foliograd::sharpe(daily_returns)
                                                   : SharpeResult{};
        summary.max_drawdown = foliograd::max_drawdown(values);
    }
};

// Evaluation window: decisions at days [begin, end] inclusive, each
// consuming the next day's returns; hence end + 1 must still be a panel row.
struct BacktestWindow {
    std::size_t begin = 0;
    std::size_t end = 0;
    double commission = 0.0;
};

// Picks the widest valid decision window for a split: evaluation rows only,
// leaving the final row as the last return source.
inline BacktestWindow eval_window(const SplitPanel& sp,
                                  const StateBuilder& builder,
                                  double commission) {
    BacktestWindow w;
    w.begin = std::max(sp.eval_begin, builder.first_valid());
    if (sp.panel.days() < 2 || w.begin + 1 >= sp.panel.days())
        throw DataError("backtest: split leaves no decision days");
    w.end = sp.panel.days() - 2;
    w.commission = commission;
    return w;
}

// Rolls an agent through the window day by day. The agent maps a normalized
// state to allocation weights; evaluation is noise-free and consumes no
// randomness.
template <typename Agent>
BacktestReport run_backtest(Agent&& agent, const StateBuilder& builder,
                            const Normalizer& normalizer,
                            const BacktestWindow& window) {
    const ReturnPanel& panel = builder.panel();
    if (window.end < window.begin)
        throw DataError("backtest: empty evaluation range");
    if (window.begin < builder.first_valid())
        throw DataError("backtest: window starts before warm-up completes");
    if (window.end + 1 >= panel.days())
        throw DataError("backtest: window needs one day of returns beyond its end");
    if (window.commission < 0.0)
        throw ConfigError("backtest: negative commission");

    std::size_t t_days = window.end - window.begin + 1;
    std::size_t m = panel.assets();
    BacktestReport rep;
    rep.asset_names = panel.asset_names;
    rep.commission = window.commission;
    rep.weights = Matrix(t_days, m);
    rep.daily_returns.resize(t_days);
    rep.turnover.resize(t_days);
    rep.values.assign(1, 1.0);
    rep.dates.reserve(t_days);

    std::vector<double> w_prev = initial_weights(panel);
    for (std::size_t t = window.begin; t <= window.end; ++t) {
        StateTensor state = normalizer.apply(builder.build(t, w_prev));
        std::vector<double> w = agent(state);
        if (w.size() != m)
            throw NumericError("backtest: agent weight count mismatch");
        try {
            check_simplex(w, 1e-6);
        } catch (const NumericError& e) {
            throw NumericError("backtest: agent produced off-simplex weights at " +
                               panel.dates[t].to_string() + ": " + e.what());
        }
        std::size_t row = t - window.begin;
        double turn = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            rep.weights.at(row, i) = w[i];
            turn += std::fabs(w[i] - w_prev[i]);
        }
        rep.dates.push_back(panel.dates[t]);
        rep.turnover[row] = turn;
        rep.daily_returns[row] = portfolio_day_return(
            w, w_prev, panel.asset_returns.data.data() + (t + 1) * m,
            window.commission);
        rep.values.push_back(rep.values.back() *
                             (1.0 + rep.daily_returns[row]));
        w_prev = std::move(w);
    }
    rep.recompute_summary();
    return rep;
}

// Per-day paths as CSV: date, value, daily return, turnover, weights.
inline std::string report_csv(const BacktestReport& rep) {
    std::string out = "date,value,daily_return,turnover";
    for (const auto& n : rep.asset_names) out += ",w_" + n;
    out += '\n';
    for (std::size_t t = 0; t < rep.dates.size(); ++t) {
        out += rep.dates[t].to_string();
        out += ',';
        out += format_double(rep.values[t + 1]);
        out += ',';
        out += format_double(rep.daily_returns[t]);
        out += ',';
        out += format_double(rep.turnover[t]);
        for (std::size_t i = 0; i < rep.asset_names.size(); ++i) {
            out += ',';
            out += format_double(rep.weights.at(t, i));
        }
        out += '\n';
    }
    return out;
}

// ---- model comparison -------------------------------------------------------

struct ComparisonRow {
    std::string label;
    double total_return = 0.0;
    double annual_return = 0.0;
    double annual_std = 0.0;
    SharpeResult sharpe;
};

// Effect of turning the context branch on, holding everything else fixed.
struct AblationDelta {
    std::string base_label;  // variant label without the context suffix
    double d_annual_return = 0.0;
    double d_sharpe_raw = std::numeric_limits<double>::quiet_NaN();
};

struct Comparison {
    std::vector<ComparisonRow> rows;   // sorted by annual return, best first
    std::vector<AblationDelta> deltas;
    // trimmed means: the two largest-|delta| entries per criterion dropped
    double mean_d_annual_return = std::numeric_limits<double>::quiet_NaN();
    double mean_d_sharpe_raw = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double trimmed_mean_drop2(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t drop = v.size() > 2 ? 2 : 0;
    std::sort(v.begin(), v.end(),
              [](double a, double b) { return std::fabs(a) < std::fabs(b); });
    v.resize(v.size() - drop);
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return mean(v);
}

}  // namespace detail

// Builds the ranking table plus per-pair context ablation deltas. All
// reports must cover the same decision dates.
inline Comparison compare(
    const std::vector<std::pair<ModelVariant, BacktestReport>>& reports) {
    if (reports.empty()) throw DataError("compare: no reports");
    const auto& ref_dates = reports.front().second.dates;
    for (const auto& [var, rep] : reports)
        if (rep.dates != ref_dates)
            throw DataError("compare: report '" + var.label() +
                            "' covers a different evaluation range");

    Comparison out;
    for (const auto& [var, rep] : reports)
        out.rows.push_back({var.label(), rep.summary.total_return,
                            rep.summary.annual_return, rep.summary.annual_std,
                            rep.summary.sharpe});
    std::sort(out.rows.begin(), out.rows.end(),
              [](const ComparisonRow& a, const ComparisonRow& b) {
                  if (a.annual_return != b.annual_return)
                      return a.annual_return > b.annual_return;
                  return a.label < b.label;
              });

    // pair up context/no-context twins
    auto base_label = [](ModelVariant v) {
        v.use_context = true;
        std::string l = v.label();
        return l.substr(0, l.size() - 4);  // strip "_ctx"
    };
    std::map<std::string, std::pair<const BacktestReport*, const BacktestReport*>>
        pairs;
    for (const auto& [var, rep] : reports) {
        auto& slot = pairs[base_label(var)];
        (var.use_context ? slot.first : slot.second) = &rep;
    }
    std::vector<double> d_ret, d_sharpe;
    for (const auto& [base, pr] : pairs) {
        if (!pr.first || !pr.second) continue;
        AblationDelta d;
        d.base_label = base;
        d.d_annual_return =
            pr.first->summary.annual_return - pr.second->summary.annual_return;
        d.d_sharpe_raw =
            pr.first->summary.sharpe.raw - pr.second->summary.sharpe.raw;
        d_ret.push_back(d.d_annual_return);
        if (std::isfinite(d.d_sharpe_raw)) d_sharpe.push_back(d.d_sharpe_raw);
        out.deltas.push_back(std::move(d));
    }
    out.mean_d_annual_return = detail::trimmed_mean_drop2(std::move(d_ret));
    out.mean_d_sharpe_raw = detail::trimmed_mean_drop2(std::move(d_sharpe));
    return out;
}

inline std::string comparison_csv(const Comparison& cmp) {
    std::string out =
        "model,total_return,annual_return,annual_std,sharpe,sharpe_raw\n";
    for (const auto& r : cmp.rows) {
        out += r.label;
        out += ',';
        out += format_double(r.total_return);
        out += ',';
        out += format_double(r.annual_return);
        out += ',';
        out += format_double(r.annual_std);
        out += ',';
        out += r.sharpe.available ? format_double(r.sharpe.raw) : "na";
        out += ',';
        out += format_double(r.sharpe.raw);
        out += '\n';
    }
    return out;
}

inline std::string ablation_csv(const Comparison& cmp) {
    std::string out = "config,d_annual_return,d_sharpe_raw\n";
    for (const auto& d : cmp.deltas) {
        out += d.base_label;
        out += ',';
        out += format_double(d.d_annual_return);
        out += ',';
        out += format_double(d.d_sharpe_raw);
        out += '\n';
    }
    out += "trimmed_mean,";
    out += format_double(cmp.mean_d_annual_return);
    out += ',';
    out += format_double(cmp.mean_d_sharpe_raw);
    out += '\n';
    return out;
}

}  // namespace foliograd
