#pragma once

#include <cmath>
#include <vector>

#include "foliograd/errors.hpp"

namespace foliograd {

// Adam with optional decoupled-from-nothing plain L2: the penalty gradient is
// folded into the step direction before the moment update. The maximize flag
// flips the descent direction, so callers hand in d(objective)/d(theta)
// directly when climbing.
struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double l2 = 0.0;
    bool maximize = false;
};

class Adam {
public:
    Adam(std::size_t dim, AdamConfig cfg = {})
        : cfg_(cfg), m_(dim, 0.0), v_(dim, 0.0) {}

    const AdamConfig& config() const { return cfg_; }
    std::size_t step_count() const { return t_; }

    // Applies one update in place. `grad` is the raw objective gradient.
    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw NumericError("adam: dimension mismatch");
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            // effective ascent/descent direction including the L2 pull to zero
            double g = cfg_.maximize ? grad[i] - cfg_.l2 * params[i]
                                     : grad[i] + cfg_.l2 * params[i];
            if (!std::isfinite(g))
                throw NumericError("adam: non-finite gradient");
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = m_[i] / bc1;
            double vhat = v_[i] / bc2;
            double delta = cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            params[i] += cfg_.maximize ? delta : -delta;
            if (!std::isfinite(params[i]))
                throw NumericError("adam: parameters diverged");
        }
    }

private:
    AdamConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

// Central finite differences around the current point. `f` must evaluate the
// scalar objective at the supplied parameter vector without side effects.
template <typename F>
std::vector<double> finite_difference_gradient(F&& f, std::vector<double> params,
                                               double h = 1e-5) {
    std::vector<double> g(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double keep = params[i];
        params[i] = keep + h;
        double up = f(params);
        params[i] = keep - h;
        double dn = f(params);
        params[i] = keep;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
inline double max_relative_error(const std::vector<double>& a,
                                 const std::vector<double>& b) {
    if (a.size() != b.size()) throw NumericError("relative error: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace foliograd
