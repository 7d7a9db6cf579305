#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "foliograd/errors.hpp"
#include "foliograd/market_data.hpp"
#include "foliograd/tensor.hpp"

namespace foliograd {

// Ordered set of day offsets (0 = today, 1 = yesterday, ...).
struct LagSpec {
    std::vector<std::size_t> lags;

    explicit LagSpec(std::vector<std::size_t> l = {0}) : lags(std::move(l)) {
        if (lags.empty()) throw ConfigError("lag spec: needs at least one lag");
        std::sort(lags.begin(), lags.end());
        for (std::size_t i = 1; i < lags.size(); ++i)
            if (lags[i] == lags[i - 1])
                throw ConfigError("lag spec: duplicate lag " +
                                  std::to_string(lags[i]));
    }

    std::size_t count() const { return lags.size(); }
    std::size_t max_lag() const { return lags.back(); }
};

// Everything the policy sees for one day: lagged per-asset returns and
// volatilities, lagged context features plus cross-asset aggregates, and
// yesterday's allocation.
struct StateTensor {
    Tensor asset_block;                // [2 x m x L1]: returns, rolling stds
    Tensor context_block;              // [(k+3) x L2]
    std::vector<double> prev_weights;  // [m], on the simplex
    Date date;

    std::size_t assets() const { return asset_block.shape[1]; }
};

inline void check_simplex(const std::vector<double>& w, double tol = 1e-9) {
    double sum = 0.0;
    for (double v : w) {
        if (!std::isfinite(v)) throw NumericError("weights: non-finite entry");
        if (v < -tol || v > 1.0 + tol)
            throw NumericError("weights: entry outside [0,1]");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > tol)
        throw NumericError("weights: sum " + std::to_string(sum) + " != 1");
}

// (max risky return, max risky vol, min risky vol) at day t - lag; the cash
// column is skipped so its permanent zero never pins the aggregates.
inline std::array<double, 3> derived_context(const ReturnPanel& panel,
                                             std::size_t t, std::size_t lag,
                                             std::size_t std_window) {
    if (t < lag || t - lag + 1 < std_window)
        throw DataError("derived context: insufficient history");
    std::size_t day = t - lag;
    double best_r = 0.0, best_v = 0.0, worst_v = 0.0;
    bool first = true;
    std::vector<double> buf(std_window);
    for (std::size_t a = 0; a < panel.assets(); ++a) {
        if (a == panel.cash_index) continue;
        double r = panel.asset_returns.at(day, a);
        for (std::size_t i = 0; i < std_window; ++i)
            buf[i] = panel.asset_returns.at(day - std_window + 1 + i, a);
        double v = sample_std(buf);
        if (first) {
            best_r = r;
            best_v = worst_v = v;
            first = false;
        } else {
            best_r = std::max(best_r, r);
            best_v = std::max(best_v, v);
            worst_v = std::min(worst_v, v);
        }
    }
    if (first) throw DataError("derived context: no risky assets");
    return {best_r, best_v, worst_v};
}

// Assembles S_t from the panel, a precomputed rolling-std matrix, and the
// previous day's weights.
inline StateTensor build_state(const ReturnPanel& panel, const Matrix& stds,
                               std::size_t t, const LagSpec& d1,
                               const LagSpec& d2, std::size_t std_window,
                               const std::vector<double>& prev_w) {
    std::size_t m = panel.assets(), k = panel.context_features();
    std::size_t need = std::max(d1.max_lag(), d2.max_lag()) + std_window - 1;
    if (t < need || t >= panel.days())
        throw DataError("build_state: day " + std::to_string(t) +
                        " lacks history (first valid is " +
                        std::to_string(need) + ")");
    if (prev_w.size() != m)
        throw NumericError("build_state: weight count != asset count");
    check_simplex(prev_w);

    StateTensor s;
    s.date = panel.dates[t];
    s.prev_weights = prev_w;
    s.asset_block = Tensor::zeros({2, m, d1.count()});
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t j = 0; j < d1.count(); ++j) {
            std::size_t day = t - d1.lags[j];
            double sd = stds.at(day, a);
            if (std::isnan(sd))
                throw DataError("build_state: rolling std unavailable at lag " +
                                std::to_string(d1.lags[j]));
            s.asset_block.at(0, a, j) = panel.asset_returns.at(day, a);
            s.asset_block.at(1, a, j) = sd;
        }
    s.context_block = Tensor::zeros({k + 3, d2.count()});
    for (std::size_t j = 0; j < d2.count(); ++j) {
        std::size_t day = t - d2.lags[j];
        for (std::size_t f = 0; f < k; ++f)
            s.context_block.at2(f, j) = panel.context.at(day, f);
        auto agg = derived_context(panel, t, d2.lags[j], std_window);
        s.context_block.at2(k + 0, j) = agg[0];
        s.context_block.at2(k + 1, j) = agg[1];
        s.context_block.at2(k + 2, j) = agg[2];
    }
    return s;
}

// Train-fit z-scoring. One (center, scale) pair per asset-block channel and
// per context row; prev_weights pass through untouched. Rows with no
// dispersion keep identity statistics so constant features survive intact.
struct Normalizer {
    std::vector<double> asset_center;  // [2]
    std::vector<double> asset_scale;   // [2]
    std::vector<double> ctx_center;    // [k+3]
    std::vector<double> ctx_scale;     // [k+3]

    static Normalizer identity(std::size_t ctx_rows) {
        Normalizer n;
        n.asset_center.assign(2, 0.0);
        n.asset_scale.assign(2, 1.0);
        n.ctx_center.assign(ctx_rows, 0.0);
        n.ctx_scale.assign(ctx_rows, 1.0);
        return n;
    }

    static Normalizer fit(const std::vector<StateTensor>& states) {
        if (states.empty()) throw DataError("normalizer: empty fit set");
        std::size_t ctx_rows = states[0].context_block.shape[0];
        Normalizer n = identity(ctx_rows);
        std::vector<std::vector<double>> asset_vals(2), ctx_vals(ctx_rows);
        for (const auto& s : states) {
            std::size_t per = s.asset_block.numel() / 2;
            for (std::size_t ch = 0; ch < 2; ++ch)
                for (std::size_t i = 0; i < per; ++i)
                    asset_vals[ch].push_back(s.asset_block.data[ch * per + i]);
            std::size_t l2 = s.context_block.shape[1];
            for (std::size_t r = 0; r < ctx_rows; ++r)
                for (std::size_t j = 0; j < l2; ++j)
                    ctx_vals[r].push_back(s.context_block.at2(r, j));
        }
        auto fit_row = [](const std::vector<double>& v, double& center,
                          double& scale) {
            double mu = mean(v);
            double sd = v.size() > 1 ? sample_std(v) : 0.0;
            if (sd > 1e-12) {
                center = mu;
                scale = sd;
            }  // else keep identity
        };
        for (std::size_t ch = 0; ch < 2; ++ch)
            fit_row(asset_vals[ch], n.asset_center[ch], n.asset_scale[ch]);
        for (std::size_t r = 0; r < ctx_rows; ++r)
            fit_row(ctx_vals[r], n.ctx_center[r], n.ctx_scale[r]);
        return n;
    }

    StateTensor apply(const StateTensor& s) const {
        if (s.context_block.shape[0] != ctx_center.size())
            throw NumericError("normalizer: context row count changed");
        StateTensor out = s;
        std::size_t per = s.asset_block.numel() / 2;
        for (std::size_t ch = 0; ch < 2; ++ch)
            for (std::size_t i = 0; i < per; ++i)
                out.asset_block.data[ch * per + i] =
                    (s.asset_block.data[ch * per + i] - asset_center[ch]) /
                    asset_scale[ch];
        std::size_t l2 = s.context_block.shape[1];
        for (std::size_t r = 0; r < ctx_center.size(); ++r)
            for (std::size_t j = 0; j < l2; ++j)
                out.context_block.at2(r, j) =
                    (s.context_block.at2(r, j) - ctx_center[r]) / ctx_scale[r];
        return out;
    }
};

// Binds a panel to lag specs and caches the rolling stds so per-day states
// are one call.
class StateBuilder {
public:
    StateBuilder(const ReturnPanel& panel, LagSpec d1, LagSpec d2,
                 std::size_t std_window)
        : panel_(&panel),
          d1_(std::move(d1)),
          d2_(std::move(d2)),
          std_window_(std_window),
          stds_(rolling_std(panel, std_window)) {}

    // earliest day with full lag + std history
    std::size_t first_valid() const {
        return std::max(d1_.max_lag(), d2_.max_lag()) + std_window_ - 1;
    }

    StateTensor build(std::size_t t, const std::vector<double>& prev_w) const {
        return build_state(*panel_, stds_, t, d1_, d2_, std_window_, prev_w);
    }

    const ReturnPanel& panel() const { return *panel_; }
    const LagSpec& return_lags() const { return d1_; }
    const LagSpec& context_lags() const { return d2_; }
    std::size_t std_window() const { return std_window_; }

private:
    const ReturnPanel* panel_;
    LagSpec d1_;
    LagSpec d2_;
    std::size_t std_window_;
    Matrix stds_;
};

}  // namespace foliograd
