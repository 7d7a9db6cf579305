#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "foliograd/errors.hpp"
#include "foliograd/linalg.hpp"
#include "foliograd/market_data.hpp"

namespace foliograd {

enum class MarkovitzTarget { MinVarianceAtReturn, MaxSharpe };

// min wT S w over the long-only fully-invested simplex, optionally with a
// floor on expected return; or the max-Sharpe point found by sweeping that
// floor.
struct MarkovitzProblem {
    std::vector<double> mu;  // expected daily returns [m]
    Matrix sigma;            // covariance [m x m]
    MarkovitzTarget target = MarkovitzTarget::MinVarianceAtReturn;
    double target_return = 0.0;  // used by MinVarianceAtReturn
};

struct MarkovitzSolution {
    std::vector<double> weights;
    double variance = 0.0;       // wT S w under the (repaired) covariance
    double expected_return = 0.0;
    bool target_clamped = false; // r* was infeasible and pulled down to max mu
    std::size_t iterations = 0;
};

namespace detail {

// Euclidean projection onto {w >= 0, sum w = 1}.
inline std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    for (auto& x : v) x = std::max(0.0, x - theta);
    return v;
}

// Euclidean projection onto {mu . w >= r}.
inline std::vector<double> project_halfspace(std::vector<double> v,
                                             const std::vector<double>& mu,
                                             double r) {
    double mm = dot(mu, mu);
    if (mm <= 0.0) return v;  // constraint is vacuous or infeasible by clamp
    double gap = r - dot(mu, v);
    if (gap <= 0.0) return v;
    double c = gap / mm;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += c * mu[i];
    return v;
}

// Dykstra's alternating projection onto simplex + return halfspace.
inline std::vector<double> project_feasible(std::vector<double> v,
                                            const std::vector<double>& mu,
                                            double r) {
    std::size_t m = v.size();
    std::vector<double> p(m, 0.0), q(m, 0.0), x = std::move(v);
    for (int it = 0; it < 200; ++it) {
        std::vector<double> y = project_simplex([&] {
            std::vector<double> t(m);
            for (std::size_t i = 0; i < m; ++i) t[i] = x[i] + p[i];
            return t;
        }());
        for (std::size_t i = 0; i < m; ++i) p[i] = x[i] + p[i] - y[i];
        std::vector<double> z = project_halfspace(
            [&] {
                std::vector<double> t(m);
                for (std::size_t i = 0; i < m; ++i) t[i] = y[i] + q[i];
                return t;
            }(),
            mu, r);
        double drift = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double qn = y[i] + q[i] - z[i];
            drift = std::max(drift, std::fabs(z[i] - x[i]));
            q[i] = qn;
        }
        x = std::move(z);
        if (drift < 1e-14) break;
    }
    // final snap onto the simplex so iterates always satisfy it exactly
    return project_simplex(std::move(x));
}

}  // namespace detail

// Projected gradient descent with a decreasing step, followed by a polish
// that drains weight toward later assets along objective-flat directions so
// equal-objective ties resolve to one canonical (lexicographically smallest)
// vector.
inline MarkovitzSolution solve_markovitz(const MarkovitzProblem& problem,
                                         double tol = 1e-9) {
    std::size_t m = problem.mu.size();
    if (m < 1) throw ConfigError("markovitz: empty problem");
    if (problem.sigma.rows != m || problem.sigma.cols != m)
        throw ConfigError("markovitz: covariance size mismatch");
    for (double v : problem.mu)
        if (!std::isfinite(v)) throw NumericError("markovitz: non-finite mean");

    // symmetrize, then repair indefiniteness from numerical noise
    Matrix sigma = problem.sigma;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (std::fabs(sigma.at(i, j) - sigma.at(j, i)) > 1e-9)
                throw NumericError("markovitz: covariance not symmetric");
            double v = 0.5 * (sigma.at(i, j) + sigma.at(j, i));
            sigma.at(i, j) = sigma.at(j, i) = v;
        }
    try {
        cholesky_psd(sigma);
    } catch (const DataError&) {
        for (std::size_t i = 0; i < m; ++i) sigma.at(i, i) += 1e-8;
        cholesky_psd(sigma);  // beyond-noise failure propagates
    }

    MarkovitzSolution sol;
    if (problem.target == MarkovitzTarget::MaxSharpe) {
        // sweep the return floor and keep the best ratio
        double lo = *std::min_element(problem.mu.begin(), problem.mu.end());
        double hi = *std::max_element(problem.mu.begin(), problem.mu.end());
        MarkovitzProblem sub = problem;
        sub.target = MarkovitzTarget::MinVarianceAtReturn;
        bool have = false;
        double best = 0.0;
        for (int i = 0; i <= 100; ++i) {
            sub.target_return = lo + (hi - lo) * i / 100.0;
            MarkovitzSolution s = solve_markovitz(sub, tol);
            double sd = std::sqrt(std::max(0.0, s.variance));
            double ratio = sd > 1e-12 ? s.expected_return / sd
                                      : (s.expected_return > 0.0
                                             ? std::numeric_limits<double>::infinity()
                                             : -std::numeric_limits<double>::infinity());
            if (!have || ratio > best + 1e-12) {
                have = true;
                best = ratio;
                sol = s;
            }
        }
        return sol;
    }

    double r_star = problem.target_return;
    double mu_max = *std::max_element(problem.mu.begin(), problem.mu.end());
    if (r_star > mu_max) {
        r_star = mu_max;
        sol.target_clamped = true;
    }

    // normalize the objective scale so step sizes are dimensionless
    double scale = 0.0;
    for (double v : sigma.data) scale = std::max(scale, std::fabs(v));
    if (scale <= 0.0) scale = 1.0;
    Matrix s = sigma;
    for (auto& v : s.data) v /= scale;

    auto objective = [&](const std::vector<double>& w) {
        return dot(w, matvec(s, w));
    };

    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    w = detail::project_feasible(std::move(w), problem.mu, r_star);
    const std::size_t max_iter = 50000;
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        double alpha = 0.5 / (1.0 + static_cast<double>(it) * 0.01);
        std::vector<double> g = matvec(s, w);
        std::vector<double> trial(m);
        for (std::size_t i = 0; i < m; ++i) trial[i] = w[i] - 2.0 * alpha * g[i];
        trial = detail::project_feasible(std::move(trial), problem.mu, r_star);
        double move = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            move = std::max(move, std::fabs(trial[i] - w[i]));
        w = std::move(trial);
        if (move / alpha < tol) break;
    }

    // drain mass toward later indices wherever the objective is flat
    double f_star = objective(w);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = m; j-- > i + 1;) {
            double lo = 0.0, hi = w[i];
            auto ok = [&](double d) {
                std::vector<double> t = w;
                t[i] -= d;
                t[j] += d;
                if (dot(problem.mu, t) < r_star - 1e-12) return false;
                return objective(t) <= f_star + tol;
            };
            if (hi <= 0.0 || !ok(hi * 1e-12)) continue;
            if (ok(hi)) {
                lo = hi;
            } else {
                for (int step = 0; step < 60; ++step) {
                    double mid = 0.5 * (lo + hi);
                    (ok(mid) ? lo : hi) = mid;
                }
            }
            if (lo > 0.0) {
                w[i] -= lo;
                w[j] += lo;
            }
        }
    }
    w = detail::project_feasible(std::move(w), problem.mu, r_star);

    sol.weights = w;
    sol.variance = dot(w, matvec(sigma, w));
    sol.expected_return = dot(problem.mu, w);
    sol.iterations = it;
    return sol;
}

// Exhaustive search over the simplex at a fixed resolution; the reference
// implementation the solver is checked against. Cost is combinatorial, so
// keep m small.
inline MarkovitzSolution grid_markovitz(const MarkovitzProblem& problem,
                                        std::size_t steps = 100) {
    std::size_t m = problem.mu.size();
    double r_star = problem.target_return;
    double mu_max = *std::max_element(problem.mu.begin(), problem.mu.end());
    bool clamped = false;
    if (problem.target == MarkovitzTarget::MinVarianceAtReturn && r_star > mu_max) {
        r_star = mu_max;
        clamped = true;
    }
    MarkovitzSolution best;
    bool have = false;
    std::vector<std::size_t> counts(m, 0);
    // enumerate compositions of `steps` into m parts
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t idx,
                                                            std::size_t left) {
        if (idx + 1 == m) {
            counts[idx] = left;
            std::vector<double> w(m);
            for (std::size_t i = 0; i < m; ++i)
                w[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
            double ret = dot(problem.mu, w);
            if (problem.target == MarkovitzTarget::MinVarianceAtReturn &&
                ret < r_star - 1e-12)
                return;
            double var = dot(w, matvec(problem.sigma, w));
            double score;
            if (problem.target == MarkovitzTarget::MinVarianceAtReturn) {
                score = var;
            } else {
                double sd = std::sqrt(std::max(0.0, var));
                score = sd > 1e-12
                            ? -(ret / sd)
                            : (ret > 0.0 ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity());
            }
            if (!have || score < best.variance - 1e-15 ||
                (std::fabs(score - best.variance) <= 1e-15 &&
                 std::lexicographical_compare(w.begin(), w.end(),
                                              best.weights.begin(),
                                              best.weights.end()))) {
                have = true;
                best.weights = w;
                best.variance = score;
                best.expected_return = ret;
            }
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            counts[idx] = c;
            rec(idx + 1, left - c);
        }
    };
    rec(0, steps);
    if (!have) throw NumericError("grid markovitz: no feasible point");
    best.target_clamped = clamped;
    // variance field carried the search score; restore the real variance
    best.variance = dot(best.weights, matvec(problem.sigma, best.weights));
    return best;
}

// ---- historical baselines ---------------------------------------------------

// mu and sigma estimated from panel rows [begin, end).
inline MarkovitzProblem estimate_problem(const ReturnPanel& panel,
                                         std::size_t begin, std::size_t end) {
    if (end > panel.days() || begin >= end)
        throw DataError("markovitz: bad estimation range");
    if (end - begin < 2)
        throw DataError("markovitz: estimation window needs >= 2 rows");
    MarkovitzProblem p;
    p.mu = column_means(panel.asset_returns, begin, end);
    p.sigma = sample_covariance(panel.asset_returns, begin, end);
    // default floor: the cross-asset mean of means
    p.target_return = mean(p.mu);
    return p;
}

// Weights re-solved every `rebalance_every` decision days on a trailing
// estimation window, held constant in between. Row r of the result is the
// allocation for decision day begin + r.
inline Matrix dynamic_markovitz(const ReturnPanel& panel, std::size_t begin,
                                std::size_t end, std::size_t rebalance_every,
                                std::size_t estimation_window,
                                double tol = 1e-9) {
    if (rebalance_every < 1)
        throw ConfigError("dynamic markovitz: cadence must be >= 1");
    if (estimation_window < 2)
        throw ConfigError("dynamic markovitz: estimation window must be >= 2");
    if (end < begin || end >= panel.days())
        throw DataError("dynamic markovitz: bad evaluation range");
    if (begin + 1 < estimation_window)
        throw DataError("dynamic markovitz: insufficient history before the "
                        "first rebalance");
    std::size_t t_days = end - begin + 1, m = panel.assets();
    Matrix path(t_days, m);
    std::vector<double> w;
    for (std::size_t r = 0; r < t_days; ++r) {
        if (r % rebalance_every == 0) {
            std::size_t t = begin + r;  // estimate on rows (t-window, t]
            MarkovitzProblem p =
                estimate_problem(panel, t + 1 - estimation_window, t + 1);
            w = solve_markovitz(p, tol).weights;
        }
        for (std::size_t i = 0; i < m; ++i) path.at(r, i) = w[i];
    }
    return path;
}

// Index of the asset with the highest compounded return over rows
// [begin, end); exact ties go to the lowest index.
inline std::size_t naive_winner(const ReturnPanel& panel, std::size_t begin,
                                std::size_t end) {
    if (end > panel.days() || begin >= end)
        throw DataError("naive winner: bad range");
    std::size_t best = 0;
    double best_total = -2.0;
    for (std::size_t a = 0; a < panel.assets(); ++a) {
        double v = 1.0;
        for (std::size_t r = begin; r < end; ++r)
            v *= 1.0 + panel.asset_returns.at(r, a);
        if (v - 1.0 > best_total) {
            best_total = v - 1.0;
            best = a;
        }
    }
    return best;
}

}  // namespace foliograd
