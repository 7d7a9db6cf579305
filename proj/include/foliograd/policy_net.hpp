#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "foliograd/errors.hpp"
#include "foliograd/rng.hpp"
#include "foliograd/sha1.hpp"
#include "foliograd/state_builder.hpp"
#include "foliograd/tape.hpp"
#include "foliograd/tensor.hpp"

namespace foliograd {

enum class Arch { Conv, Lstm };

inline std::string arch_name(Arch a) { return a == Arch::Conv ? "conv" : "lstm"; }

inline Arch parse_arch(const std::string& s) {
    if (s == "conv") return Arch::Conv;
    if (s == "lstm") return Arch::Lstm;
    throw ConfigError("unknown network architecture '" + s + "'");
}

// Shape and wiring of the allocation policy. Input dimensions come from the
// state builder; everything else is architecture choice.
struct PolicySpec {
    Arch arch = Arch::Conv;
    bool use_context = true;
    bool use_prev_weights = false;

    std::size_t m = 0;             // assets (softmax width)
    std::size_t context_rows = 0;  // raw context features + 3 aggregates
    std::size_t l1 = 0;            // asset-block lag count
    std::size_t l2 = 0;            // context-block lag count

    // asset branch, conv variant: two layers sliding along the lag axis only
    std::array<std::size_t, 2> conv1_filters{5, 10};
    std::array<std::size_t, 2> conv1_strides{2, 1};
    std::size_t conv1_kernel = 3;
    // context branch, conv variant: one layer
    std::size_t conv2_filters = 2;
    std::size_t conv2_stride = 1;
    std::size_t conv2_kernel = 3;

    std::size_t lstm_hidden = 16;  // both branches, lstm variant

    std::array<std::size_t, 2> dense_sizes{32, 16};

    static std::size_t conv_out(std::size_t len, std::size_t kernel,
                                std::size_t stride) {
        return (len - kernel) / stride + 1;
    }

    // lag-axis lengths after each asset-branch conv layer
    std::array<std::size_t, 2> asset_conv_lengths() const {
        std::size_t a = conv_out(l1, conv1_kernel, conv1_strides[0]);
        std::size_t b = conv_out(a, conv1_kernel, conv1_strides[1]);
        return {a, b};
    }

    std::size_t asset_branch_width() const {
        if (arch == Arch::Lstm) return lstm_hidden;
        return conv1_filters[1] * m * asset_conv_lengths()[1];
    }

    std::size_t context_branch_width() const {
        if (!use_context) return 0;
        if (arch == Arch::Lstm) return lstm_hidden;
        return conv2_filters * conv_out(l2, conv2_kernel, conv2_stride);
    }

    std::size_t concat_width() const {
        return asset_branch_width() + context_branch_width() +
               (use_prev_weights ? m : 0);
    }

    void validate() const {
        if (m < 2) throw ConfigError("policy: need at least 2 assets");
        if (l1 < 1 || (use_context && l2 < 1))
            throw ConfigError("policy: empty lag axis");
        if (use_context && context_rows < 1)
            throw ConfigError("policy: context enabled but no context rows");
        if (dense_sizes[0] < 1 || dense_sizes[1] < 1)
            throw ConfigError("policy: dense widths must be >= 1");
        if (arch == Arch::Conv) {
            if (conv1_filters[0] < 1 || conv1_filters[1] < 1 ||
                (use_context && conv2_filters < 1))
                throw ConfigError("policy: filter counts must be >= 1");
            if (conv1_kernel < 1 || conv2_kernel < 1 || conv1_strides[0] < 1 ||
                conv1_strides[1] < 1 || conv2_stride < 1)
                throw ConfigError("policy: kernels and strides must be >= 1");
            if (l1 < conv1_kernel)
                throw ConfigError("policy: asset lag axis shorter than kernel");
            if (asset_conv_lengths()[0] < conv1_kernel)
                throw ConfigError("policy: second conv layer starved (lag axis "
                                  "too short after layer 1)");
            if (use_context && l2 < conv2_kernel)
                throw ConfigError("policy: context lag axis shorter than kernel");
        } else {
            if (lstm_hidden < 1)
                throw ConfigError("policy: lstm hidden size must be >= 1");
        }
    }

    // Stable textual identity used for checkpoint compatibility hashes.
    std::string canonical() const {
        std::ostringstream s;
        s << "arch=" << arch_name(arch) << "\ncontext=" << (use_context ? 1 : 0)
          << "\nprev_weights=" << (use_prev_weights ? 1 : 0) << "\nassets=" << m
          << "\ncontext_rows=" << context_rows << "\nlags1=" << l1
          << "\nlags2=" << l2 << "\nconv1_filters=" << conv1_filters[0] << ","
          << conv1_filters[1] << "\nconv1_strides=" << conv1_strides[0] << ","
          << conv1_strides[1] << "\nconv1_kernel=" << conv1_kernel
          << "\nconv2_filters=" << conv2_filters << "\nconv2_stride="
          << conv2_stride << "\nconv2_kernel=" << conv2_kernel
          << "\nlstm_hidden=" << lstm_hidden << "\ndense=" << dense_sizes[0]
          << "," << dense_sizes[1] << "\n";
        return s.str();
    }
};

// ---- parameter layout ------------------------------------------------------

struct ParamSlice {
    std::string name;
    std::size_t offset = 0;
    std::vector<std::size_t> shape;

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

// Order is the contract: initialization, checkpoints, and the flat vector all
// follow it.
inline std::vector<ParamSlice> param_layout(const PolicySpec& spec) {
    spec.validate();
    std::vector<ParamSlice> out;
    std::size_t off = 0;
    auto add = [&](std::string name, std::vector<std::size_t> shape) {
        ParamSlice s{std::move(name), off, std::move(shape)};
        off += s.numel();
        out.push_back(std::move(s));
    };
    if (spec.arch == Arch::Conv) {
        add("asset_conv1.kernel", {spec.conv1_filters[0], 2, 1, spec.conv1_kernel});
        add("asset_conv1.bias", {spec.conv1_filters[0]});
        add("asset_conv2.kernel",
            {spec.conv1_filters[1], spec.conv1_filters[0], 1, spec.conv1_kernel});
        add("asset_conv2.bias", {spec.conv1_filters[1]});
        if (spec.use_context) {
            add("context_conv.kernel",
                {spec.conv2_filters, spec.context_rows, spec.conv2_kernel});
            add("context_conv.bias", {spec.conv2_filters});
        }
    } else {
        std::size_t h = spec.lstm_hidden;
        add("asset_lstm.w_ih", {4 * h, 2 * spec.m});
        add("asset_lstm.w_hh", {4 * h, h});
        add("asset_lstm.bias", {4 * h});
        if (spec.use_context) {
            add("context_lstm.w_ih", {4 * h, spec.context_rows});
            add("context_lstm.w_hh", {4 * h, h});
            add("context_lstm.bias", {4 * h});
        }
    }
    add("dense1.weight", {spec.dense_sizes[0], spec.concat_width()});
    add("dense1.bias", {spec.dense_sizes[0]});
    add("dense2.weight", {spec.dense_sizes[1], spec.dense_sizes[0]});
    add("dense2.bias", {spec.dense_sizes[1]});
    add("head.weight", {spec.m, spec.dense_sizes[1]});
    add("head.bias", {spec.m});
    return out;
}

inline std::size_t param_count(const PolicySpec& spec) {
    std::size_t n = 0;
    for (const auto& s : param_layout(spec)) n += s.numel();
    return n;
}

// Flat parameter vector plus the named views into it.
struct ParamSet {
    std::vector<ParamSlice> slices;
    std::vector<double> values;

    const ParamSlice& slice(const std::string& name) const {
        for (const auto& s : slices)
            if (s.name == name) return s;
        throw NumericError("no parameter slice named '" + name + "'");
    }
};

namespace detail {

// fan-in/fan-out for Glorot bounds; kernels count their receptive field
inline std::pair<std::size_t, std::size_t> fans(const ParamSlice& s) {
    const auto& sh = s.shape;
    if (sh.size() == 2) return {sh[1], sh[0]};
    if (sh.size() == 3) return {sh[1] * sh[2], sh[0] * sh[2]};
    if (sh.size() == 4) return {sh[1] * sh[2] * sh[3], sh[0] * sh[2] * sh[3]};
    return {s.numel(), s.numel()};
}

inline bool is_bias(const ParamSlice& s) { return s.shape.size() == 1; }

}  // namespace detail

// Glorot-uniform weights, zero biases; LSTM forget gates start open (bias 1).
inline ParamSet init_params(const PolicySpec& spec, std::uint64_t seed) {
    ParamSet p;
    p.slices = param_layout(spec);
    p.values.assign(param_count(spec), 0.0);
    Rng rng(derive_seed(seed, {0x696e6974ull}));  // "init"
    for (const auto& s : p.slices) {
        if (detail::is_bias(s)) {
            if (s.name.find("lstm.bias") != std::string::npos) {
                // forget-gate block is rows [h, 2h)
                std::size_t h = s.numel() / 4;
                for (std::size_t i = h; i < 2 * h; ++i)
                    p.values[s.offset + i] = 1.0;
            }
            continue;
        }
        auto [fin, fout] = detail::fans(s);
        double limit = std::sqrt(6.0 / static_cast<double>(fin + fout));
        for (std::size_t i = 0; i < s.numel(); ++i)
            p.values[s.offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
    }
    return p;
}

// All-zero parameters: softmax of zeros, i.e. uniform output. Handy for
// isolating accounting from learning in tests.
inline ParamSet zero_params(const PolicySpec& spec) {
    ParamSet p;
    p.slices = param_layout(spec);
    p.values.assign(param_count(spec), 0.0);
    return p;
}

// ---- forward pass ----------------------------------------------------------

namespace detail {

inline NodeRef dense_relu(Tape& tape, NodeRef theta, const ParamSlice& w,
                          const ParamSlice& b, NodeRef x, bool activate) {
    NodeRef wn = tape.slice(theta, w.offset, w.shape);
    NodeRef bn = tape.slice(theta, b.offset, b.shape);
    NodeRef y = tape.add(tape.matmul(wn, x), bn);
    return activate ? tape.relu(y) : y;
}

// Runs the lag axis as a sequence, oldest lag first; returns the final h.
// step_input(j) must yield the inputs for sequence position j (j = 0 oldest).
template <typename StepFn>
inline NodeRef lstm_branch(Tape& tape, NodeRef theta, const ParamSlice& w_ih,
                           const ParamSlice& w_hh, const ParamSlice& bias,
                           std::size_t hidden, std::size_t steps,
                           StepFn&& step_input) {
    NodeRef wi = tape.slice(theta, w_ih.offset, w_ih.shape);
    NodeRef wh = tape.slice(theta, w_hh.offset, w_hh.shape);
    NodeRef b = tape.slice(theta, bias.offset, bias.shape);
    NodeRef h = tape.constant(Tensor::zeros({hidden}));
    NodeRef c = tape.constant(Tensor::zeros({hidden}));
    for (std::size_t j = 0; j < steps; ++j) {
        NodeRef x = step_input(j);
        NodeRef hc = tape.lstm_cell(x, h, c, wi, wh, b);
        h = tape.slice(hc, 0, {hidden});
        c = tape.slice(hc, hidden, {hidden});
    }
    return h;
}

}  // namespace detail

// Maps one state to allocation weights, recording every step on the tape.
// `theta` is the flat parameter leaf. When the previous-weights branch is on
// and `prev` is valid, that node feeds the branch (keeping the episode
// recursion differentiable); otherwise the state's stored weights enter as a
// constant.
inline NodeRef policy_forward(Tape& tape, const PolicySpec& spec, NodeRef theta,
                              const StateTensor& state, NodeRef prev = {}) {
    if (tape.value(theta).numel() != param_count(spec))
        throw NumericError("policy: parameter vector length mismatch");
    if (state.asset_block.shape !=
        std::vector<std::size_t>{2, spec.m, spec.l1})
        throw NumericError("policy: asset block shape mismatch, got " +
                           state.asset_block.shape_string());
    if (spec.use_context &&
        state.context_block.shape !=
            std::vector<std::size_t>{spec.context_rows, spec.l2})
        throw NumericError("policy: context block shape mismatch, got " +
                           state.context_block.shape_string());

    std::vector<ParamSlice> layout = param_layout(spec);
    auto find = [&](const char* name) -> const ParamSlice& {
        for (const auto& s : layout)
            if (s.name == name) return s;
        throw NumericError(std::string("policy: missing slice ") + name);
    };

    std::vector<NodeRef> branches;
    if (spec.arch == Arch::Conv) {
        NodeRef x = tape.constant(state.asset_block);
        NodeRef k1 = tape.slice(theta, find("asset_conv1.kernel").offset,
                                find("asset_conv1.kernel").shape);
        NodeRef b1 = tape.slice(theta, find("asset_conv1.bias").offset,
                                find("asset_conv1.bias").shape);
        x = tape.relu(tape.conv2d(x, k1, b1, 1, spec.conv1_strides[0]));
        NodeRef k2 = tape.slice(theta, find("asset_conv2.kernel").offset,
                                find("asset_conv2.kernel").shape);
        NodeRef b2 = tape.slice(theta, find("asset_conv2.bias").offset,
                                find("asset_conv2.bias").shape);
        x = tape.relu(tape.conv2d(x, k2, b2, 1, spec.conv1_strides[1]));
        branches.push_back(tape.flatten(x));
        if (spec.use_context) {
            NodeRef cx = tape.constant(state.context_block);
            NodeRef ck = tape.slice(theta, find("context_conv.kernel").offset,
                                    find("context_conv.kernel").shape);
            NodeRef cb = tape.slice(theta, find("context_conv.bias").offset,
                                    find("context_conv.bias").shape);
            cx = tape.relu(tape.conv1d(cx, ck, cb, spec.conv2_stride));
            branches.push_back(tape.flatten(cx));
        }
    } else {
        std::size_t h = spec.lstm_hidden;
        // per-step inputs gather one lag column; oldest lag = highest index
        branches.push_back(detail::lstm_branch(
            tape, theta, find("asset_lstm.w_ih"), find("asset_lstm.w_hh"),
            find("asset_lstm.bias"), h, spec.l1, [&](std::size_t j) {
                std::size_t lag_idx = spec.l1 - 1 - j;
                Tensor x = Tensor::zeros({2 * spec.m});
                for (std::size_t ch = 0; ch < 2; ++ch)
                    for (std::size_t a = 0; a < spec.m; ++a)
                        x.data[ch * spec.m + a] =
                            state.asset_block.at(ch, a, lag_idx);
                return tape.constant(std::move(x));
            }));
        if (spec.use_context) {
            branches.push_back(detail::lstm_branch(
                tape, theta, find("context_lstm.w_ih"), find("context_lstm.w_hh"),
                find("context_lstm.bias"), h, spec.l2, [&](std::size_t j) {
                    std::size_t lag_idx = spec.l2 - 1 - j;
                    Tensor x = Tensor::zeros({spec.context_rows});
                    for (std::size_t r = 0; r < spec.context_rows; ++r)
                        x.data[r] = state.context_block.at2(r, lag_idx);
                    return tape.constant(std::move(x));
                }));
        }
    }
    if (spec.use_prev_weights) {
        if (state.prev_weights.size() != spec.m)
            throw NumericError("policy: previous-weight length mismatch");
        branches.push_back(prev.valid()
                               ? prev
                               : tape.constant(Tensor::vector(state.prev_weights)));
    }

    NodeRef z = branches.size() == 1 ? tape.flatten(branches[0])
                                     : tape.concat(branches);
    z = detail::dense_relu(tape, theta, find("dense1.weight"),
                           find("dense1.bias"), z, true);
    z = detail::dense_relu(tape, theta, find("dense2.weight"),
                           find("dense2.bias"), z, true);
    z = detail::dense_relu(tape, theta, find("head.weight"), find("head.bias"),
                           z, false);
    return tape.softmax(z);
}

// Convenience: forward without recording gradients anywhere persistent.
inline std::vector<double> policy_evaluate(const PolicySpec& spec,
                                           const ParamSet& params,
                                           const StateTensor& state) {
    Tape tape;
    NodeRef theta = tape.leaf(Tensor::vector(params.values), false);
    NodeRef w = policy_forward(tape, spec, theta, state);
    return tape.value(w).data;
}

// ---- model grid ------------------------------------------------------------

enum class RewardKind { NetProfit, Sharpe };

inline std::string reward_name(RewardKind r) {
    return r == RewardKind::NetProfit ? "net_profit" : "sharpe";
}

inline RewardKind parse_reward(const std::string& s) {
    if (s == "net_profit") return RewardKind::NetProfit;
    if (s == "sharpe") return RewardKind::Sharpe;
    throw ConfigError("unknown reward '" + s + "'");
}

// One point of the model comparison grid.
struct ModelVariant {
    RewardKind reward = RewardKind::NetProfit;
    bool adversarial = false;
    Arch arch = Arch::Conv;
    bool use_prev_weights = false;
    bool use_context = true;

    std::string label() const {
        std::string s = reward_name(reward);
        s += adversarial ? "_adv" : "_noadv";
        s += "_";
        s += arch_name(arch);
        s += use_prev_weights ? "_prev" : "_noprev";
        s += use_context ? "_ctx" : "_noctx";
        return s;
    }
};

// Full cross product: reward x adversarial x architecture x previous-weights
// x context = 32 variants, in a fixed enumeration order.
inline std::vector<ModelVariant> enumerate_grid() {
    std::vector<ModelVariant> out;
    for (RewardKind reward : {RewardKind::NetProfit, RewardKind::Sharpe})
        for (bool adversarial : {false, true})
            for (Arch arch : {Arch::Conv, Arch::Lstm})
                for (bool prev : {false, true})
                    for (bool ctx : {true, false})
                        out.push_back({reward, adversarial, arch, prev, ctx});
    return out;
}

// ---- checkpoints ------------------------------------------------------------

// Binary layout, little-endian throughout:
//   bytes 0-7   magic "FGCKPT01"
//   bytes 8-15  spec hash (first 8 bytes of the sha-1 of PolicySpec::canonical)
//   bytes 16-23 seed
//   bytes 24-31 training step count
//   bytes 32-39 parameter count P
//   then P IEEE-754 doubles
struct Checkpoint {
    std::vector<double> params;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
};

namespace detail {

inline std::uint64_t spec_hash(const PolicySpec& spec) {
    std::string hex = sha1_hex(spec.canonical());
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        char c = hex[i];
        std::uint64_t d =
            c >= 'a' ? static_cast<std::uint64_t>(c - 'a' + 10)
                     : static_cast<std::uint64_t>(c - '0');
        h = (h << 4) | d;
    }
    return h;
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t take_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
        v = (v << 8) | static_cast<unsigned char>(s[off + static_cast<std::size_t>(i)]);
    return v;
}

inline std::uint64_t double_bits(double d) {
    std::uint64_t v;
    static_assert(sizeof(v) == sizeof(d));
    std::memcpy(&v, &d, sizeof(v));
    return v;
}

inline double bits_double(std::uint64_t v) {
    double d;
    std::memcpy(&d, &v, sizeof(d));
    return d;
}

}  // namespace detail

inline std::string encode_checkpoint(const PolicySpec& spec,
                                     const Checkpoint& ck) {
    if (ck.params.size() != param_count(spec))
        throw NumericError("checkpoint: parameter count mismatch");
    std::string out = "FGCKPT01";
    detail::put_u64(out, detail::spec_hash(spec));
    detail::put_u64(out, ck.seed);
    detail::put_u64(out, ck.step);
    detail::put_u64(out, ck.params.size());
    for (double d : ck.params) detail::put_u64(out, detail::double_bits(d));
    return out;
}

inline Checkpoint decode_checkpoint(const PolicySpec& spec,
                                    const std::string& bytes,
                                    const std::string& origin = "<bytes>") {
    if (bytes.size() < 40 || bytes.compare(0, 8, "FGCKPT01") != 0)
        throw DataError(origin + ": not a checkpoint file");
    if (detail::take_u64(bytes, 8) != detail::spec_hash(spec))
        throw DataError(origin + ": checkpoint belongs to a different policy spec");
    Checkpoint ck;
    ck.seed = detail::take_u64(bytes, 16);
    ck.step = detail::take_u64(bytes, 24);
    std::uint64_t n = detail::take_u64(bytes, 32);
    if (n != param_count(spec) || bytes.size() != 40 + 8 * n)
        throw DataError(origin + ": checkpoint truncated or wrong size");
    ck.params.resize(n);
    for (std::uint64_t i = 0; i < n; ++i)
        ck.params[i] = detail::bits_double(detail::take_u64(bytes, 40 + 8 * i));
    for (double d : ck.params)
        if (!std::isfinite(d)) throw DataError(origin + ": non-finite parameter");
    return ck;
}

inline void save_checkpoint(const std::string& path, const PolicySpec& spec,
                            const Checkpoint& ck) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    std::string bytes = encode_checkpoint(spec, ck);
    out.write(bytes.data(), static_cast<long>(bytes.size()));
    if (!out) throw DataError("short write on checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path,
                                  const PolicySpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(spec, ss.str(), path);
}

}  // namespace foliograd
