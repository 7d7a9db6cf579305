#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "foliograd/adam.hpp"
#include "foliograd/backtest.hpp"
#include "foliograd/errors.hpp"
#include "foliograd/market_data.hpp"
#include "foliograd/policy_net.hpp"
#include "foliograd/rng.hpp"
#include "foliograd/state_builder.hpp"
#include "foliograd/tape.hpp"

namespace foliograd {

// Days [start, end] inclusive on which the policy acts; day end still needs
// one later panel row to realize its return.
struct EpisodeWindow {
    std::size_t start = 0;
    std::size_t end = 0;
    std::vector<double> initial_weights;  // empty = all cash (or uniform)

    std::size_t length() const { return end - start + 1; }
};

struct TrainConfig {
    RewardKind reward = RewardKind::NetProfit;
    bool adversarial = false;
    double noise_std = 0.002;
    std::size_t batch_size = 50;
    std::size_t episode_length = 120;
    std::size_t epochs = 100;
    double learning_rate = 0.01;
    double l2 = 1e-8;
    double commission = 0.001;  // 10 bps
    std::uint64_t seed = 0;

    void validate() const {
        if (noise_std < 0.0) throw ConfigError("trainer: negative noise std");
        if (batch_size < 1) throw ConfigError("trainer: batch size must be >= 1");
        if (episode_length < 2)
            throw ConfigError("trainer: episodes need at least 2 days");
        if (learning_rate < 0.0)
            throw ConfigError("trainer: negative learning rate");
        if (l2 < 0.0) throw ConfigError("trainer: negative l2 coefficient");
        if (commission < 0.0) throw ConfigError("trainer: negative commission");
    }
};

// Gaussian perturbation of the (already normalized) state blocks; the
// previous-weights slot is left alone.
inline void add_noise(StateTensor& state, double noise_std, Rng& rng) {
    if (noise_std < 0.0) throw ConfigError("noise: negative std");
    if (noise_std == 0.0) return;
    for (auto& v : state.asset_block.data) v += noise_std * rng.normal();
    for (auto& v : state.context_block.data) v += noise_std * rng.normal();
}

struct EpisodeResult {
    NodeRef reward;                  // scalar node, on the caller's tape
    Matrix weights;                  // [len x m] realized allocations
    std::vector<double> day_returns; // realized rho_t values
    double reward_value = 0.0;
};

// One day of on-tape accounting: rho = w . r_next - commission * |w - w_prev|_1.
// Shared by the policy rollout and the fixed-path variant below so both sides
// of the trainer/backtest equivalence run the very same graph.
inline NodeRef day_return_node(Tape& tape, NodeRef w, NodeRef w_prev,
                               NodeRef r_next, double commission) {
    NodeRef gain = tape.dot(w, r_next);
    NodeRef turn = tape.sum(tape.abs(tape.sub(w, w_prev)));
    return tape.sub(gain, tape.scale(turn, commission));
}

// Folds per-day returns into the episode objective: compounded net profit, or
// the per-day sharpe ratio.
inline NodeRef episode_reward_node(Tape& tape, const std::vector<NodeRef>& rhos,
                                   RewardKind kind) {
    if (rhos.empty()) throw NumericError("episode: no days to reward");
    if (kind == RewardKind::NetProfit) {
        NodeRef acc = tape.constant(Tensor::scalar(1.0));
        for (NodeRef rho : rhos) acc = tape.mul(acc, tape.add_scalar(rho, 1.0));
        return tape.add_scalar(acc, -1.0);
    }
    std::vector<double> vals;
    vals.reserve(rhos.size());
    for (NodeRef r : rhos) vals.push_back(tape.value(r).data[0]);
    if (sample_std(vals) < 1e-12)
        throw NumericError(
            "episode: daily returns have no dispersion; the sharpe reward is "
            "undefined on this window");
    NodeRef stacked = tape.concat(rhos);
    return tape.div(tape.mean(stacked), tape.std(stacked));
}

// Episode reward for an externally supplied weight path (row t = weights for
// day window.start + t). Exercises the exact trainer accounting without a
// policy in the loop.
inline NodeRef episode_reward_from_weights(Tape& tape, const ReturnPanel& panel,
                                           const EpisodeWindow& window,
                                           const Matrix& weights,
                                           double commission, RewardKind kind) {
    if (window.end + 1 >= panel.days())
        throw DataError("episode: window exceeds the panel");
    if (weights.rows != window.length() || weights.cols != panel.assets())
        throw NumericError("episode: weight path shape mismatch");
    std::vector<double> w0 = window.initial_weights.empty()
                                 ? initial_weights(panel)
                                 : window.initial_weights;
    NodeRef prev = tape.constant(Tensor::vector(w0));
    std::vector<NodeRef> rhos;
    rhos.reserve(weights.rows);
    for (std::size_t r = 0; r < weights.rows; ++r) {
        NodeRef w = tape.constant(Tensor::vector(weights.row(r)));
        NodeRef r_next = tape.constant(
            Tensor::vector(panel.asset_returns.row(window.start + r + 1)));
        rhos.push_back(day_return_node(tape, w, prev, r_next, commission));
        prev = w;
    }
    return episode_reward_node(tape, rhos, kind);
}

// Rolls the policy through one window, recording the whole trajectory on the
// tape: each day builds a state from the previous allocation, runs the
// policy, and books rho_t = w_t . r_{t+1} - commission * sum|w_t - w_{t-1}|.
// Every rho stays on the tape, so the episode reward differentiates through
// the full action sequence (prices themselves never react to the agent).
// When `noise_rng` is given, states are perturbed before the forward pass.
inline EpisodeResult roll_episode(Tape& tape, const PolicySpec& spec,
                                  NodeRef theta, const StateBuilder& builder,
                                  const Normalizer& normalizer,
                                  const EpisodeWindow& window,
                                  const TrainConfig& config,
                                  Rng* noise_rng = nullptr) {
    const ReturnPanel& panel = builder.panel();
    if (window.end < window.start || window.length() < 2)
        throw DataError("episode: window must span at least 2 days");
    if (window.end + 1 >= panel.days())
        throw DataError("episode: window exceeds the panel");
    if (window.start < builder.first_valid())
        throw DataError("episode: window starts inside the warm-up region");

    std::size_t m = panel.assets();
    std::vector<double> w_prev = window.initial_weights.empty()
                                     ? initial_weights(panel)
                                     : window.initial_weights;
    if (w_prev.size() != m)
        throw NumericError("episode: initial weight count mismatch");
    check_simplex(w_prev);

    EpisodeResult res;
    std::size_t len = window.length();
    res.weights = Matrix(len, m);
    res.day_returns.reserve(len);

    NodeRef prev_node = tape.constant(Tensor::vector(w_prev));
    std::vector<NodeRef> rhos;
    rhos.reserve(len);
    for (std::size_t t = window.start; t <= window.end; ++t) {
        StateTensor state = normalizer.apply(builder.build(t, w_prev));
        if (noise_rng) add_noise(state, config.noise_std, *noise_rng);
        // the branch input sees the recursion only when the spec asks for it
        NodeRef w = policy_forward(tape, spec, theta, state,
                                   spec.use_prev_weights ? prev_node : NodeRef{});
        NodeRef r_next =
            tape.constant(Tensor::vector(panel.asset_returns.row(t + 1)));
        NodeRef rho = day_return_node(tape, w, prev_node, r_next, config.commission);
        rhos.push_back(rho);

        std::size_t row = t - window.start;
        const auto& wv = tape.value(w).data;
        for (std::size_t i = 0; i < m; ++i) res.weights.at(row, i) = wv[i];
        res.day_returns.push_back(tape.value(rho).data[0]);
        w_prev = wv;
        prev_node = w;
    }

    res.reward = episode_reward_node(tape, rhos, config.reward);
    res.reward_value = tape.value(res.reward).data[0];
    return res;
}

// ---- training loop -----------------------------------------------------------

struct EpochLog {
    std::size_t epoch = 0;       // 0 = untrained baseline
    double train_reward = 0.0;   // mean episode reward of the batch (NaN at 0)
    double val_metric = 0.0;
    double grad_norm = 0.0;      // of the averaged gradient (0 at epoch 0)
    std::uint64_t wall_ms = 0;   // in-memory only: timings would break the
                                 // byte-identical rerun guarantee if persisted

    static std::string csv_header() {
        return "epoch,train_reward,val_metric,grad_norm";
    }
    std::string csv_row() const {
        return std::to_string(epoch) + "," + format_double(train_reward) + "," +
               format_double(val_metric) + "," + format_double(grad_norm);
    }
};

struct TrainResult {
    Checkpoint best;
    std::size_t best_epoch = 0;
    double best_metric = 0.0;
    std::vector<EpochLog> log;
    bool aborted = false;  // stopped on a non-finite objective

    std::string log_csv() const {
        std::string out = EpochLog::csv_header() + "\n";
        for (const auto& e : log) out += e.csv_row() + "\n";
        return out;
    }
};

// Everything train() reads; builders must outlive the call.
struct TrainInputs {
    const StateBuilder* train_builder = nullptr;
    std::size_t train_eval_begin = 0;
    const StateBuilder* val_builder = nullptr;
    std::size_t val_eval_begin = 0;
    const Normalizer* normalizer = nullptr;
};

namespace detail {

// Deterministic, noise-free evaluation over the full validation range.
inline double validation_metric(const PolicySpec& spec,
                                const std::vector<double>& params,
                                const TrainInputs& in,
                                const TrainConfig& config) {
    SplitPanel sp{in.val_builder->panel(), in.val_eval_begin};
    BacktestWindow w = eval_window(sp, *in.val_builder, config.commission);
    ParamSet ps;
    ps.values = params;
    BacktestReport rep = run_backtest(
        [&](const StateTensor& s) { return policy_evaluate(spec, ps, s); },
        *in.val_builder, *in.normalizer, w);
    if (config.reward == RewardKind::NetProfit) return rep.summary.total_return;
    double raw = rep.summary.sharpe.raw;
    return std::isfinite(raw) ? raw
                              : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Policy-gradient ascent: each epoch samples a batch of episode windows,
// averages their episode-reward gradients into one objective gradient, and
// takes one Adam step; after every epoch the parameters are scored on the
// validation range and the best-scoring snapshot is kept (the untrained
// initialization competes too). Window sampling and noise draw from seeds
// derived per (epoch, episode), so results never depend on evaluation order.
inline TrainResult train(const PolicySpec& spec, const TrainConfig& config,
                         const TrainInputs& in) {
    spec.validate();
    config.validate();
    if (!in.train_builder || !in.val_builder || !in.normalizer)
        throw ConfigError("trainer: missing inputs");

    const ReturnPanel& panel = in.train_builder->panel();
    std::size_t first_start =
        std::max(in.train_eval_begin, in.train_builder->first_valid());
    // last start must leave episode_length days plus one return row
    if (panel.days() < first_start + config.episode_length + 1)
        throw DataError("trainer: train range has no room for an episode");
    std::size_t last_start = panel.days() - 1 - config.episode_length;

    std::size_t p = param_count(spec);
    std::vector<double> params = init_params(spec, config.seed).values;
    AdamConfig ac;
    ac.lr = config.learning_rate;
    ac.l2 = config.l2;
    ac.maximize = true;
    Adam adam(p, ac);

    TrainResult res;
    auto record = [&](std::size_t epoch, double train_reward, double metric,
                      double gnorm, std::uint64_t ms) {
        res.log.push_back({epoch, train_reward, metric, gnorm, ms});
        if (res.log.size() == 1 || metric > res.best_metric) {
            res.best_metric = metric;
            res.best_epoch = epoch;
            res.best = Checkpoint{params, config.seed, epoch};
        }
    };

    record(0, std::numeric_limits<double>::quiet_NaN(),
           detail::validation_metric(spec, params, in, config), 0.0, 0);

    std::vector<double> grad(p);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Rng window_rng(derive_seed(config.seed, {0x77696e, epoch}));
        std::fill(grad.begin(), grad.end(), 0.0);
        double reward_sum = 0.0;
        bool bad = false;
        for (std::size_t i = 0; i < config.batch_size && !bad; ++i) {
            EpisodeWindow w;
            w.start = first_start + window_rng.uniform_index(last_start - first_start + 1);
            w.end = w.start + config.episode_length - 1;
            Tape tape;
            NodeRef theta = tape.leaf(Tensor::vector(params), true);
            Rng noise_rng(derive_seed(config.seed, {0x6e6f69, epoch, i}));
            EpisodeResult ep = roll_episode(
                tape, spec, theta, *in.train_builder, *in.normalizer, w, config,
                config.adversarial ? &noise_rng : nullptr);
            tape.backward(ep.reward);
            const auto& g = tape.grad(theta);
            for (std::size_t j = 0; j < p; ++j) grad[j] += g[j];
            reward_sum += ep.reward_value;
            bad = !std::isfinite(ep.reward_value);
        }
        double inv = 1.0 / static_cast<double>(config.batch_size);
        double gnorm2 = 0.0;
        for (auto& g : grad) {
            g *= inv;
            gnorm2 += g * g;
            bad = bad || !std::isfinite(g);
        }
        if (bad) {
            res.aborted = true;
            break;
        }
        adam.step(params, grad);
        double metric = detail::validation_metric(spec, params, in, config);
        auto ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
        record(epoch, reward_sum * inv, metric, std::sqrt(gnorm2), ms);
    }
    return res;
}

}  // namespace foliograd
