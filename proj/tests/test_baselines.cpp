#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "foliograd/baselines.hpp"
#include "foliograd/market_data.hpp"
#include "foliograd/rng.hpp"

using namespace foliograd;

namespace {

Matrix diag(std::vector<double> d) {
    Matrix s(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s.at(i, i) = d[i];
    return s;
}

// random PSD covariance on a daily-return scale
Matrix random_cov(Rng& rng, std::size_t m) {
    Matrix b(m, m);
    for (auto& v : b.data) v = (2.0 * rng.uniform() - 1.0) * 0.02;
    Matrix s(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += b.at(i, k) * b.at(j, k);
            s.at(i, j) = acc;
        }
    for (std::size_t i = 0; i < m; ++i) s.at(i, i) += 1e-6;
    return s;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("simplex projection") {
    using detail::project_simplex;
    SECTION("fixed points stay put") {
        std::vector<double> w{0.5, 0.3, 0.2};
        CHECK(linf(project_simplex(w), w) < 1e-15);
    }
    SECTION("known projections") {
        CHECK(linf(project_simplex({2.0, 0.0, 0.0}), {1.0, 0.0, 0.0}) < 1e-15);
        CHECK(linf(project_simplex({0.6, 0.6}), {0.5, 0.5}) < 1e-15);
        CHECK(linf(project_simplex({1.2, 0.9}), {0.65, 0.35}) < 1e-15);
        CHECK(linf(project_simplex({-1.0, 1.0}), {0.0, 1.0}) < 1e-15);
    }
    SECTION("result is always feasible") {
        Rng rng(2);
        for (int c = 0; c < 50; ++c) {
            std::vector<double> v(4);
            for (auto& x : v) x = (2.0 * rng.uniform() - 1.0) * 10.0;
            std::vector<double> w = project_simplex(v);
            double sum = 0.0;
            for (double x : w) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("minimum-variance solutions with closed forms") {
    SECTION("equal uncorrelated variances spread evenly") {
        MarkovitzProblem p;
        p.mu = {0.0, 0.0};
        p.sigma = diag({4e-4, 4e-4});
        p.target_return = -1.0;  // inactive floor
        MarkovitzSolution s = solve_markovitz(p);
        // the tie-canonicalization may drain O(sqrt(tol)) along flat directions
        CHECK(linf(s.weights, {0.5, 0.5}) < 1e-4);
        CHECK(s.variance == Catch::Approx(2e-4).epsilon(1e-6));
        CHECK_FALSE(s.target_clamped);
    }

    SECTION("inverse-variance weighting for two uncorrelated assets") {
        MarkovitzProblem p;
        p.mu = {0.0, 0.0};
        p.sigma = diag({1e-4, 4e-4});
        p.target_return = -1.0;
        MarkovitzSolution s = solve_markovitz(p);
        CHECK(linf(s.weights, {0.8, 0.2}) < 1e-4);
        CHECK(s.variance == Catch::Approx(0.8e-4).epsilon(1e-6));
    }

    SECTION("a riskless asset absorbs everything") {
        MarkovitzProblem p;
        p.mu = {0.0, 0.0, 0.0};
        p.sigma = diag({1e-4, 4e-4, 0.0});
        p.target_return = -1.0;
        MarkovitzSolution s = solve_markovitz(p);
        CHECK(linf(s.weights, {0.0, 0.0, 1.0}) < 1e-6);
        CHECK(s.variance < 1e-12);
    }

    SECTION("a binding return floor tilts the blend") {
        MarkovitzProblem p;
        p.mu = {0.01, 0.0};
        p.sigma = diag({1.0, 1.0});
        p.target_return = 0.008;
        MarkovitzSolution s = solve_markovitz(p);
        CHECK(linf(s.weights, {0.8, 0.2}) < 1e-6);
        CHECK(s.expected_return == Catch::Approx(0.008).margin(1e-9));
        CHECK_FALSE(s.target_clamped);
    }

    SECTION("an unreachable floor clamps to the best mean") {
        MarkovitzProblem p;
        p.mu = {0.002, 0.004};
        p.sigma = diag({1e-4, 1e-4});
        p.target_return = 0.01;
        MarkovitzSolution s = solve_markovitz(p);
        CHECK(s.target_clamped);
        CHECK(linf(s.weights, {0.0, 1.0}) < 1e-6);
        CHECK(s.expected_return == Catch::Approx(0.004).margin(1e-9));
    }

    SECTION("variance grows with the floor") {
        MarkovitzProblem p;
        p.mu = {0.01, 0.002};
        p.sigma = diag({4e-4, 1e-4});
        double last = -1.0;
        for (double r : {0.002, 0.004, 0.006, 0.008, 0.01}) {
            p.target_return = r;
            MarkovitzSolution s = solve_markovitz(p);
            CHECK(s.expected_return >= r - 1e-9);
            CHECK(s.variance >= last - 1e-12);
            last = s.variance;
        }
    }

    SECTION("max-sharpe picks the dominant asset when variances match") {
        MarkovitzProblem p;
        p.mu = {0.01, 0.0};
        p.sigma = diag({1e-4, 1e-4});
        p.target = MarkovitzTarget::MaxSharpe;
        MarkovitzSolution s = solve_markovitz(p);
        CHECK(linf(s.weights, {1.0, 0.0}) < 1e-4);
    }

    SECTION("input guards") {
        MarkovitzProblem p;
        CHECK_THROWS_AS(solve_markovitz(p), ConfigError);
        p.mu = {0.0, 0.0};
        p.sigma = Matrix(3, 3);
        CHECK_THROWS_AS(solve_markovitz(p), ConfigError);
        p.sigma = Matrix(2, 2);
        p.sigma.at(0, 1) = 0.5;  // asymmetric
        CHECK_THROWS_AS(solve_markovitz(p), NumericError);
        p.sigma = Matrix(2, 2);
        p.sigma.at(0, 0) = p.sigma.at(1, 1) = 1.0;
        p.sigma.at(0, 1) = p.sigma.at(1, 0) = 2.0;  // indefinite beyond repair
        CHECK_THROWS_AS(solve_markovitz(p), DataError);
        p.sigma = diag({1.0, 1.0});
        p.mu[0] = std::nan("");
        CHECK_THROWS_AS(solve_markovitz(p), NumericError);
    }
}

TEST_CASE("solver matches the exhaustive grid") {
    Rng rng(404);
    for (int c = 0; c < 10; ++c) {
        MarkovitzProblem p;
        p.mu.resize(3);
        for (auto& v : p.mu) v = (2.0 * rng.uniform() - 1.0) * 0.01;
        p.sigma = random_cov(rng, 3);
        double lo = *std::min_element(p.mu.begin(), p.mu.end());
        double hi = *std::max_element(p.mu.begin(), p.mu.end());
        // rotate through inactive, interior, and clamped floors
        p.target_return = c % 3 == 0   ? lo - 0.01
                          : c % 3 == 1 ? lo + (hi - lo) * 0.6
                                       : hi + 0.005;

        MarkovitzSolution fast = solve_markovitz(p);
        MarkovitzSolution slow = grid_markovitz(p, 100);

        INFO("case " << c);
        CHECK(std::fabs(fast.variance - slow.variance) < 1e-4);
        CHECK(fast.variance <= slow.variance + 1e-9);  // never worse than the grid
        CHECK(linf(fast.weights, slow.weights) < 0.02);
        CHECK(fast.target_clamped == slow.target_clamped);
        if (!fast.target_clamped && p.target_return > lo)
            CHECK(dot(p.mu, fast.weights) >= p.target_return - 1e-8);
    }
}

TEST_CASE("problem estimation from panels") {
    ReturnPanel p;
    p.dates = weekday_sequence(Date{2020, 1, 6}, 3);
    p.asset_names = {"a", "b"};
    p.asset_returns = Matrix(3, 2);
    const double ra[3] = {0.01, 0.02, 0.03};
    const double rb[3] = {0.00, 0.02, 0.04};
    for (std::size_t t = 0; t < 3; ++t) {
        p.asset_returns.at(t, 0) = ra[t];
        p.asset_returns.at(t, 1) = rb[t];
    }
    p.context = Matrix(3, 0);
    p.validate();

    SECTION("moments and default floor") {
        MarkovitzProblem prob = estimate_problem(p, 0, 3);
        CHECK(prob.mu[0] == Catch::Approx(0.02));
        CHECK(prob.mu[1] == Catch::Approx(0.02));
        CHECK(prob.sigma.at(0, 0) == Catch::Approx(1e-4));
        CHECK(prob.sigma.at(1, 1) == Catch::Approx(4e-4));
        CHECK(prob.sigma.at(0, 1) == Catch::Approx(2e-4));
        CHECK(prob.target_return == Catch::Approx(0.02));
    }

    SECTION("range guards") {
        CHECK_THROWS_AS(estimate_problem(p, 0, 4), DataError);
        CHECK_THROWS_AS(estimate_problem(p, 2, 2), DataError);
        CHECK_THROWS_AS(estimate_problem(p, 1, 2), DataError);
    }
}

TEST_CASE("dynamic rebalancing") {
    SynthSpec ss;
    ss.m_risky = 2;
    ss.days = 80;
    ss.seed = 6;
    ss.context_predictivity = 1.0;
    RegimeSpec calm{{0.0008, 0.0002}, {0.006, 0.009}, Matrix(2, 2), 60.0};
    RegimeSpec crisis{{-0.004, -0.005}, {0.02, 0.025}, Matrix(2, 2), 15.0};
    calm.correlation.at(0, 0) = calm.correlation.at(1, 1) = 1.0;
    crisis.correlation.at(0, 0) = crisis.correlation.at(1, 1) = 1.0;
    ss.regimes = {calm, crisis};
    ReturnPanel panel = synthesize(ss);

    SECTION("weights hold between rebalances and refresh on schedule") {
        Matrix path = dynamic_markovitz(panel, 30, 40, 4, 20);
        REQUIRE(path.rows == 11);
        REQUIRE(path.cols == 3);
        for (std::size_t r = 0; r < path.rows; ++r) {
            std::size_t anchor = (r / 4) * 4;
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(path.at(r, i) == path.at(anchor, i));
            double sum = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(path.at(r, i) >= -1e-12);
                sum += path.at(r, i);
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-9));
        }
    }

    SECTION("each rebalance solves the trailing-window problem") {
        Matrix path = dynamic_markovitz(panel, 30, 38, 4, 20);
        for (std::size_t anchor : {std::size_t{0}, std::size_t{4}, std::size_t{8}}) {
            std::size_t t = 30 + anchor;
            MarkovitzSolution s =
                solve_markovitz(estimate_problem(panel, t + 1 - 20, t + 1));
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(path.at(anchor, i) == s.weights[i]);
        }
    }

    SECTION("cadence one re-solves every day") {
        Matrix path = dynamic_markovitz(panel, 30, 33, 1, 20);
        for (std::size_t r = 0; r < path.rows; ++r) {
            std::size_t t = 30 + r;
            MarkovitzSolution s =
                solve_markovitz(estimate_problem(panel, t + 1 - 20, t + 1));
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(path.at(r, i) == s.weights[i]);
        }
    }

    SECTION("guards") {
        CHECK_THROWS_AS(dynamic_markovitz(panel, 30, 40, 0, 20), ConfigError);
        CHECK_THROWS_AS(dynamic_markovitz(panel, 30, 40, 4, 1), ConfigError);
        CHECK_THROWS_AS(dynamic_markovitz(panel, 30, 100, 4, 20), DataError);
        CHECK_THROWS_AS(dynamic_markovitz(panel, 40, 30, 4, 20), DataError);
        CHECK_THROWS_AS(dynamic_markovitz(panel, 10, 40, 4, 20), DataError);
    }
}

TEST_CASE("naive winner") {
    ReturnPanel p;
    p.dates = weekday_sequence(Date{2020, 1, 6}, 2);
    p.asset_names = {"a", "b", "c"};
    p.asset_returns = Matrix(2, 3);
    // compounded: a = 1.1*0.9 = 0.99, b = 1.0, c = 1.002
    p.asset_returns.at(0, 0) = 0.1;
    p.asset_returns.at(1, 0) = -0.1;
    p.asset_returns.at(0, 2) = 0.002;
    p.context = Matrix(2, 0);
    p.validate();

    CHECK(naive_winner(p, 0, 2) == 2);
    CHECK(naive_winner(p, 0, 1) == 0);  // day one alone: a leads
    // day two has b and c exactly tied at zero; the lower index wins
    CHECK(naive_winner(p, 1, 2) == 1);
    CHECK_THROWS_AS(naive_winner(p, 0, 3), DataError);
    CHECK_THROWS_AS(naive_winner(p, 1, 1), DataError);
}
