#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "foliograd/errors.hpp"
#include "foliograd/tensor.hpp"

namespace foliograd {

// Handle to a node on a Tape.
struct NodeRef {
    std::size_t idx = static_cast<std::size_t>(-1);
    bool valid() const { return idx != static_cast<std::size_t>(-1); }
};

// Reverse-mode computation record. Operations append nodes in evaluation
// order, so the record is topologically sorted by construction and a single
// reverse sweep propagates adjoints. Recording is single-threaded; separate
// episodes use separate tapes.
class Tape {
public:
    // ---- node management ---------------------------------------------

    NodeRef leaf(Tensor value, bool requires_grad = false) {
        if (!value.all_finite())
            throw NumericError("leaf tensor contains non-finite values");
        return push(std::move(value), requires_grad, {}, nullptr);
    }

    NodeRef constant(Tensor value) { return leaf(std::move(value), false); }

    const Tensor& value(NodeRef r) const { return nodes_[r.idx].value; }

    // Gradient of the last backward() objective wrt this node's values.
    const std::vector<double>& grad(NodeRef r) const { return nodes_[r.idx].grad; }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    // ---- elementwise -------------------------------------------------

    NodeRef add(NodeRef a, NodeRef b) {
        check_same_shape(a, b, "add");
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += val(b).data[i];
        return push(std::move(out), needs(a) || needs(b), {a.idx, b.idx},
                    [](Tape& t, std::size_t self) {
                        const auto& g = t.nodes_[self].grad;
                        t.accumulate(t.nodes_[self].parents[0], g);
                        t.accumulate(t.nodes_[self].parents[1], g);
                    });
    }

    NodeRef sub(NodeRef a, NodeRef b) {
        check_same_shape(a, b, "sub");
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= val(b).data[i];
        return push(std::move(out), needs(a) || needs(b), {a.idx, b.idx},
                    [](Tape& t, std::size_t self) {
                        const auto& g = t.nodes_[self].grad;
                        t.accumulate(t.nodes_[self].parents[0], g);
                        t.accumulate_scaled(t.nodes_[self].parents[1], g, -1.0);
                    });
    }

    NodeRef mul(NodeRef a, NodeRef b) {
        check_same_shape(a, b, "mul");
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= val(b).data[i];
        return push(std::move(out), needs(a) || needs(b), {a.idx, b.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        const auto& av = t.nodes_[n.parents[0]].value.data;
                        const auto& bv = t.nodes_[n.parents[1]].value.data;
                        if (t.nodes_[n.parents[0]].needs_grad) {
                            auto& ga = t.nodes_[n.parents[0]].grad;
                            for (std::size_t i = 0; i < n.grad.size(); ++i)
                                ga[i] += n.grad[i] * bv[i];
                        }
                        if (t.nodes_[n.parents[1]].needs_grad) {
                            auto& gb = t.nodes_[n.parents[1]].grad;
                            for (std::size_t i = 0; i < n.grad.size(); ++i)
                                gb[i] += n.grad[i] * av[i];
                        }
                    });
    }

    NodeRef div(NodeRef a, NodeRef b) {
        check_same_shape(a, b, "div");
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] /= val(b).data[i];
        return push(std::move(out), needs(a) || needs(b), {a.idx, b.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        const auto& av = t.nodes_[n.parents[0]].value.data;
                        const auto& bv = t.nodes_[n.parents[1]].value.data;
                        if (t.nodes_[n.parents[0]].needs_grad) {
                            auto& ga = t.nodes_[n.parents[0]].grad;
                            for (std::size_t i = 0; i < n.grad.size(); ++i)
                                ga[i] += n.grad[i] / bv[i];
                        }
                        if (t.nodes_[n.parents[1]].needs_grad) {
                            auto& gb = t.nodes_[n.parents[1]].grad;
                            for (std::size_t i = 0; i < n.grad.size(); ++i)
                                gb[i] -= n.grad[i] * av[i] / (bv[i] * bv[i]);
                        }
                    });
    }

    NodeRef scale(NodeRef a, double c) {
        Tensor out = val(a);
        for (auto& v : out.data) v *= c;
        return push(std::move(out), needs(a), {a.idx},
                    [c](Tape& t, std::size_t self) {
                        t.accumulate_scaled(t.nodes_[self].parents[0],
                                            t.nodes_[self].grad, c);
                    });
    }

    NodeRef add_scalar(NodeRef a, double c) {
        Tensor out = val(a);
        for (auto& v : out.data) v += c;
        return push(std::move(out), needs(a), {a.idx},
                    [](Tape& t, std::size_t self) {
                        t.accumulate(t.nodes_[self].parents[0], t.nodes_[self].grad);
                    });
    }

    NodeRef relu(NodeRef a) {
        Tensor out = val(a);
        for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        return push(std::move(out), needs(a), {a.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        if (!t.nodes_[n.parents[0]].needs_grad) return;
                        const auto& av = t.nodes_[n.parents[0]].value.data;
                        auto& ga = t.nodes_[n.parents[0]].grad;
                        for (std::size_t i = 0; i < n.grad.size(); ++i)
                            if (av[i] > 0.0) ga[i] += n.grad[i];
                    });
    }

    // |x|, subgradient 0 at x == 0
    NodeRef abs(NodeRef a) {
        Tensor out = val(a);
        for (auto& v : out.data) v = std::fabs(v);
        return push(std::move(out), needs(a), {a.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        if (!t.nodes_[n.parents[0]].needs_grad) return;
                        const auto& av = t.nodes_[n.parents[0]].value.data;
                        auto& ga = t.nodes_[n.parents[0]].grad;
                        for (std::size_t i = 0; i < n.grad.size(); ++i) {
                            if (av[i] > 0.0) ga[i] += n.grad[i];
                            else if (av[i] < 0.0) ga[i] -= n.grad[i];
                        }
                    });
    }

    // ---- linear algebra ----------------------------------------------

    // [r x k] * [k x c] -> [r x c], or [r x k] * [k] -> [r]
    NodeRef matmul(NodeRef a, NodeRef b) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        if (av.shape.size() != 2)
            throw NumericError("matmul: left operand must be 2-D, got " +
                               av.shape_string());
        std::size_t r = av.shape[0], k = av.shape[1];
        bool vec = bv.shape.size() == 1;
        std::size_t c = vec ? 1 : bv.shape[1];
        if ((vec ? bv.shape[0] : bv.shape[0]) != k)
            throw NumericError("matmul: inner dimensions differ: " +
                               av.shape_string() + " vs " + bv.shape_string());
        Tensor out = vec ? Tensor::zeros({r}) : Tensor::zeros({r, c});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p)
                    s += av.data[i * k + p] * bv.data[p * c + j];
                out.data[i * c + j] = s;
            }
        return push(std::move(out), needs(a) || needs(b), {a.idx, b.idx},
                    [r, k, c](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        const auto& av2 = t.nodes_[n.parents[0]].value.data;
                        const auto& bv2 = t.nodes_[n.parents[1]].value.data;
                        const auto& g = n.grad;
                        if (t.nodes_[n.parents[0]].needs_grad) {
                            auto& ga = t.nodes_[n.parents[0]].grad;
                            for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t p = 0; p < k; ++p) {
                                    double s = 0.0;
                                    for (std::size_t j = 0; j < c; ++j)
                                        s += g[i * c + j] * bv2[p * c + j];
                                    ga[i * k + p] += s;
                                }
                        }
                        if (t.nodes_[n.parents[1]].needs_grad) {
                            auto& gb = t.nodes_[n.parents[1]].grad;
                            for (std::size_t p = 0; p < k; ++p)
                                for (std::size_t j = 0; j < c; ++j) {
                                    double s = 0.0;
                                    for (std::size_t i = 0; i < r; ++i)
                                        s += av2[i * k + p] * g[i * c + j];
                                    gb[p * c + j] += s;
                                }
                        }
                    });
    }

    // vector . vector -> scalar
    NodeRef dot(NodeRef a, NodeRef b) {
        check_same_shape(a, b, "dot");
        double s = 0.0;
        const auto& av = val(a).data;
        const auto& bv = val(b).data;
        for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
        return push(Tensor::scalar(s), needs(a) || needs(b), {a.idx, b.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        double g = n.grad[0];
                        const auto& av2 = t.nodes_[n.parents[0]].value.data;
                        const auto& bv2 = t.nodes_[n.parents[1]].value.data;
                        if (t.nodes_[n.parents[0]].needs_grad) {
                            auto& ga = t.nodes_[n.parents[0]].grad;
                            for (std::size_t i = 0; i < av2.size(); ++i)
                                ga[i] += g * bv2[i];
                        }
                        if (t.nodes_[n.parents[1]].needs_grad) {
                            auto& gb = t.nodes_[n.parents[1]].grad;
                            for (std::size_t i = 0; i < av2.size(); ++i)
                                gb[i] += g * av2[i];
                        }
                    });
    }

    // ---- reductions ----------------------------------------------------

    NodeRef sum(NodeRef a) {
        if (val(a).numel() == 0) throw NumericError("sum: empty reduction");
        double s = 0.0;
        for (double v : val(a).data) s += v;
        return push(Tensor::scalar(s), needs(a), {a.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        if (!t.nodes_[n.parents[0]].needs_grad) return;
                        auto& ga = t.nodes_[n.parents[0]].grad;
                        for (auto& g : ga) g += n.grad[0];
                    });
    }

    NodeRef mean(NodeRef a) {
        std::size_t n = val(a).numel();
        if (n == 0) throw NumericError("mean: empty reduction");
        double s = 0.0;
        for (double v : val(a).data) s += v;
        double inv = 1.0 / static_cast<double>(n);
        return push(Tensor::scalar(s * inv), needs(a), {a.idx},
                    [inv](Tape& t, std::size_t self) {
                        auto& nd = t.nodes_[self];
                        if (!t.nodes_[nd.parents[0]].needs_grad) return;
                        auto& ga = t.nodes_[nd.parents[0]].grad;
                        for (auto& g : ga) g += nd.grad[0] * inv;
                    });
    }

    // Sample standard deviation ((n-1) denominator) with an eps guard inside
    // the square root so the gradient stays finite for constant inputs.
    NodeRef std(NodeRef a, double eps = 1e-12) {
        std::size_t n = val(a).numel();
        if (n < 2) throw NumericError("std: needs at least 2 elements");
        double mu = 0.0;
        for (double v : val(a).data) mu += v;
        mu /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : val(a).data) ss += (v - mu) * (v - mu);
        double s = std::sqrt(ss / static_cast<double>(n - 1) + eps);
        return push(Tensor::scalar(s), needs(a), {a.idx},
                    [mu, s, n](Tape& t, std::size_t self) {
                        auto& nd = t.nodes_[self];
                        if (!t.nodes_[nd.parents[0]].needs_grad) return;
                        const auto& av = t.nodes_[nd.parents[0]].value.data;
                        auto& ga = t.nodes_[nd.parents[0]].grad;
                        double c = nd.grad[0] / (static_cast<double>(n - 1) * s);
                        for (std::size_t i = 0; i < av.size(); ++i)
                            ga[i] += c * (av[i] - mu);
                    });
    }

    // ---- shape ---------------------------------------------------------

    NodeRef reshape(NodeRef a, std::vector<std::size_t> shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        if (n != val(a).numel())
            throw NumericError("reshape: element count mismatch");
        Tensor out(std::move(shape), val(a).data);
        return push(std::move(out), needs(a), {a.idx},
                    [](Tape& t, std::size_t self) {
                        t.accumulate(t.nodes_[self].parents[0], t.nodes_[self].grad);
                    });
    }

    NodeRef flatten(NodeRef a) { return reshape(a, {val(a).numel()}); }

    // Contiguous run of `len` elements starting at flat offset, viewed 1-D.
    NodeRef slice(NodeRef a, std::size_t offset, std::size_t len) {
        if (offset + len > val(a).numel())
            throw NumericError("slice: out of range");
        Tensor out({len}, std::vector<double>(
                              val(a).data.begin() + static_cast<long>(offset),
                              val(a).data.begin() + static_cast<long>(offset + len)));
        return push(std::move(out), needs(a), {a.idx},
                    [offset, len](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        if (!t.nodes_[n.parents[0]].needs_grad) return;
                        auto& ga = t.nodes_[n.parents[0]].grad;
                        for (std::size_t i = 0; i < len; ++i)
                            ga[offset + i] += n.grad[i];
                    });
    }

    // Slice reshaped in one step (sugar for parameter unpacking).
    NodeRef slice(NodeRef a, std::size_t offset, std::vector<std::size_t> shape) {
        std::size_t len = 1;
        for (auto d : shape) len *= d;
        return reshape(slice(a, offset, len), std::move(shape));
    }

    // Flattens every input and concatenates into one vector.
    NodeRef concat(const std::vector<NodeRef>& parts) {
        if (parts.empty()) throw NumericError("concat: no inputs");
        std::size_t total = 0;
        bool ng = false;
        std::vector<std::size_t> parents;
        parents.reserve(parts.size());
        for (auto p : parts) {
            total += val(p).numel();
            ng = ng || needs(p);
            parents.push_back(p.idx);
        }
        Tensor out = Tensor::zeros({total});
        std::size_t off = 0;
        for (auto p : parts) {
            const auto& d = val(p).data;
            std::copy(d.begin(), d.end(), out.data.begin() + static_cast<long>(off));
            off += d.size();
        }
        return push(std::move(out), ng, std::move(parents),
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        std::size_t off2 = 0;
                        for (std::size_t pi : n.parents) {
                            auto& pn = t.nodes_[pi];
                            std::size_t len = pn.value.numel();
                            if (pn.needs_grad)
                                for (std::size_t i = 0; i < len; ++i)
                                    pn.grad[i] += n.grad[off2 + i];
                            off2 += len;
                        }
                    });
    }

    // ---- softmax -------------------------------------------------------

    // Softmax over a 1-D input, computed with max subtraction.
    NodeRef softmax(NodeRef a) {
        const Tensor& av = val(a);
        if (av.shape.size() != 1)
            throw NumericError("softmax: expects a 1-D input");
        double mx = av.data[0];
        for (double v : av.data) mx = std::max(mx, v);
        Tensor out = Tensor::zeros(av.shape);
        double z = 0.0;
        for (std::size_t i = 0; i < av.numel(); ++i) {
            out.data[i] = std::exp(av.data[i] - mx);
            z += out.data[i];
        }
        for (auto& v : out.data) v /= z;
        return push(std::move(out), needs(a), {a.idx},
                    [](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        if (!t.nodes_[n.parents[0]].needs_grad) return;
                        const auto& y = n.value.data;
                        auto& ga = t.nodes_[n.parents[0]].grad;
                        double gy = 0.0;
                        for (std::size_t i = 0; i < y.size(); ++i)
                            gy += n.grad[i] * y[i];
                        for (std::size_t i = 0; i < y.size(); ++i)
                            ga[i] += y[i] * (n.grad[i] - gy);
                    });
    }

    // ---- convolution (valid padding, dilation 1) -------------------------

    // x [C, L], kernel [F, C, K], bias [F], stride >= 1 -> [F, L'] with
    // L' = (L - K) / stride + 1
    NodeRef conv1d(NodeRef x, NodeRef kernel, NodeRef bias, std::size_t stride) {
        const Tensor& xv = val(x);
        const Tensor& kv = val(kernel);
        const Tensor& bv = val(bias);
        if (stride < 1) throw NumericError("conv1d: stride must be >= 1");
        if (xv.shape.size() != 2 || kv.shape.size() != 3 || bv.shape.size() != 1)
            throw NumericError("conv1d: expects x[C,L], kernel[F,C,K], bias[F]");
        std::size_t C = xv.shape[0], L = xv.shape[1];
        std::size_t F = kv.shape[0], K = kv.shape[2];
        if (kv.shape[1] != C || bv.shape[0] != F)
            throw NumericError("conv1d: channel/filter mismatch");
        if (K > L) throw NumericError("conv1d: kernel longer than input");
        std::size_t Lo = (L - K) / stride + 1;
        Tensor out = Tensor::zeros({F, Lo});
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t o = 0; o < Lo; ++o) {
                double s = bv.data[f];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t k = 0; k < K; ++k)
                        s += xv.at2(c, o * stride + k) * kv.at(f, c, k);
                out.at2(f, o) = s;
            }
        return push(std::move(out), needs(x) || needs(kernel) || needs(bias),
                    {x.idx, kernel.idx, bias.idx},
                    [C, L, F, K, Lo, stride](Tape& t, std::size_t self) {
                        auto& n = t.nodes_[self];
                        auto& nx = t.nodes_[n.parents[0]];
                        auto& nk = t.nodes_[n.parents[1]];
                        auto& nb = t.nodes_[n.parents[2]];
                        const auto& g = n.grad;
                        for (std::size_t f = 0; f < F; ++f)
                            for (std::size_t o = 0; o < Lo; ++o) {
                                double gv = g[f * Lo + o];
                                if (gv == 0.0) continue;
                                if (nb.needs_grad) nb.grad[f] += gv;
                                for (std::size_t c = 0; c < C; ++c)
                                    for (std::size_t k = 0; k < K; ++k) {
                                        std::size_t xi = c * L + o * stride + k;
                                        std::size_t ki = (f * C + c) * K + k;
                                        if (nx.needs_grad)
                                            nx.grad[xi] += gv * nk.value.data[ki];
                                        if (nk.needs_grad)
                                            nk.grad[ki] += gv * nx.value.data[xi];
                                    }
                            }
                    });
    }

    // x [C, H, W], kernel [F, C, KH, KW], bias [F], strides (sh, sw) ->
    // [F, H', W'] with H' = (H - KH)/sh + 1, W' = (W - KW)/sw + 1
    NodeRef conv2d(NodeRef x, NodeRef kernel, NodeRef bias, std::size_t sh,
                   std::size_t sw) {
        const Tensor& xv = val(x);
        const Tensor& kv = val(kernel);
        const Tensor& bv = val(bias);
        if (sh < 1 || sw < 1) throw NumericError("conv2d: strides must be >= 1");
        if (xv.shape.size() != 3 || kv.shape.size() != 4 || bv.shape.size() != 1)
            throw NumericError("conv2d: expects x[C,H,W], kernel[F,C,KH,KW], bias[F]");
        std::size_t C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
        std::size_t F = kv.shape[0], KH = kv.shape[2], KW = kv.shape[3];
        if (kv.shape[1] != C || bv.shape[0] != F)
            throw NumericError("conv2d: channel/filter mismatch");
        if (KH > H || KW > W) throw NumericError("conv2d: kernel exceeds input");
        std::size_t Ho = (H - KH) / sh + 1;
        std::size_t Wo = (W - KW) / sw + 1;
        Tensor out = Tensor::zeros({F, Ho, Wo});
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t i = 0; i < Ho; ++i)
                for (std::size_t j = 0; j < Wo; ++j) {
                    double s = bv.data[f];
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t p = 0; p < KH; ++p)
                            for (std::size_t q = 0; q < KW; ++q)
                                s += xv.at(c, i * sh + p, j * sw + q) *
                                     kv.data[((f * C + c) * KH + p) * KW + q];
                    out.at(f, i, j) = s;
                }
        return push(
            std::move(out), needs(x) || needs(kernel) || needs(bias),
            {x.idx, kernel.idx, bias.idx},
            [C, H, W, F, KH, KW, Ho, Wo, sh, sw](Tape& t, std::size_t self) {
                auto& n = t.nodes_[self];
                auto& nx = t.nodes_[n.parents[0]];
                auto& nk = t.nodes_[n.parents[1]];
                auto& nb = t.nodes_[n.parents[2]];
                const auto& g = n.grad;
                for (std::size_t f = 0; f < F; ++f)
                    for (std::size_t i = 0; i < Ho; ++i)
                        for (std::size_t j = 0; j < Wo; ++j) {
                            double gv = g[(f * Ho + i) * Wo + j];
                            if (gv == 0.0) continue;
                            if (nb.needs_grad) nb.grad[f] += gv;
                            for (std::size_t c = 0; c < C; ++c)
                                for (std::size_t p = 0; p < KH; ++p)
                                    for (std::size_t q = 0; q < KW; ++q) {
                                        std::size_t xi =
                                            (c * H + i * sh + p) * W + j * sw + q;
                                        std::size_t ki =
                                            ((f * C + c) * KH + p) * KW + q;
                                        if (nx.needs_grad)
                                            nx.grad[xi] += gv * nk.value.data[ki];
                                        if (nk.needs_grad)
                                            nk.grad[ki] += gv * nx.value.data[xi];
                                    }
                        }
            });
    }

    // ---- LSTM cell -------------------------------------------------------

    // One step of a standard 4-gate LSTM. Gate order in the stacked weight
    // rows is [input, forget, cell, output]. Inputs: x [I], h_prev [H],
    // c_prev [H], w_ih [4H, I], w_hh [4H, H], bias [4H]. Returns [2H] laid
    // out as h ++ c; callers slice the halves apart.
    NodeRef lstm_cell(NodeRef x, NodeRef h_prev, NodeRef c_prev, NodeRef w_ih,
                      NodeRef w_hh, NodeRef bias) {
        const Tensor& xv = val(x);
        const Tensor& hv = val(h_prev);
        const Tensor& cv = val(c_prev);
        const Tensor& wiv = val(w_ih);
        const Tensor& whv = val(w_hh);
        const Tensor& bv = val(bias);
        std::size_t I = xv.numel(), H = hv.numel();
        if (cv.numel() != H || wiv.shape.size() != 2 || whv.shape.size() != 2 ||
            wiv.shape[0] != 4 * H || wiv.shape[1] != I || whv.shape[0] != 4 * H ||
            whv.shape[1] != H || bv.numel() != 4 * H)
            throw NumericError("lstm_cell: shape mismatch");

        // preactivations a = w_ih x + w_hh h + b, gates stacked [i f g o]
        std::vector<double> a(4 * H);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            double s = bv.data[r];
            for (std::size_t j = 0; j < I; ++j) s += wiv.data[r * I + j] * xv.data[j];
            for (std::size_t j = 0; j < H; ++j) s += whv.data[r * H + j] * hv.data[j];
            a[r] = s;
        }
        auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        std::vector<double> gi(H), gf(H), gg(H), go(H), cn(H), tc(H);
        Tensor out = Tensor::zeros({2 * H});
        for (std::size_t j = 0; j < H; ++j) {
            gi[j] = sigmoid(a[j]);
            gf[j] = sigmoid(a[H + j]);
            gg[j] = std::tanh(a[2 * H + j]);
            go[j] = sigmoid(a[3 * H + j]);
            cn[j] = gf[j] * cv.data[j] + gi[j] * gg[j];
            tc[j] = std::tanh(cn[j]);
            out.data[j] = go[j] * tc[j];  // h
            out.data[H + j] = cn[j];      // c
        }
        bool ng = needs(x) || needs(h_prev) || needs(c_prev) || needs(w_ih) ||
                  needs(w_hh) || needs(bias);
        return push(
            std::move(out), ng,
            {x.idx, h_prev.idx, c_prev.idx, w_ih.idx, w_hh.idx, bias.idx},
            [I, H, gi, gf, gg, go, tc](Tape& t, std::size_t self) {
                auto& n = t.nodes_[self];
                auto& nx = t.nodes_[n.parents[0]];
                auto& nh = t.nodes_[n.parents[1]];
                auto& nc = t.nodes_[n.parents[2]];
                auto& nwi = t.nodes_[n.parents[3]];
                auto& nwh = t.nodes_[n.parents[4]];
                auto& nb = t.nodes_[n.parents[5]];
                const auto& g = n.grad;  // [dh ; dc_out]
                std::vector<double> da(4 * H);
                for (std::size_t j = 0; j < H; ++j) {
                    double dh = g[j];
                    double dc = g[H + j] + dh * go[j] * (1.0 - tc[j] * tc[j]);
                    double dgo = dh * tc[j];
                    double dgf = dc * nc.value.data[j];
                    double dgi = dc * gg[j];
                    double dgg = dc * gi[j];
                    da[j] = dgi * gi[j] * (1.0 - gi[j]);
                    da[H + j] = dgf * gf[j] * (1.0 - gf[j]);
                    da[2 * H + j] = dgg * (1.0 - gg[j] * gg[j]);
                    da[3 * H + j] = dgo * go[j] * (1.0 - go[j]);
                    if (nc.needs_grad) nc.grad[j] += dc * gf[j];
                }
                for (std::size_t r = 0; r < 4 * H; ++r) {
                    double d = da[r];
                    if (d == 0.0) continue;
                    if (nb.needs_grad) nb.grad[r] += d;
                    if (nwi.needs_grad)
                        for (std::size_t j = 0; j < I; ++j)
                            nwi.grad[r * I + j] += d * nx.value.data[j];
                    if (nx.needs_grad)
                        for (std::size_t j = 0; j < I; ++j)
                            nx.grad[j] += d * nwi.value.data[r * I + j];
                    if (nwh.needs_grad)
                        for (std::size_t j = 0; j < H; ++j)
                            nwh.grad[r * H + j] += d * nh.value.data[j];
                    if (nh.needs_grad)
                        for (std::size_t j = 0; j < H; ++j)
                            nh.grad[j] += d * nwh.value.data[r * H + j];
                }
            });
    }

    // ---- reverse sweep ---------------------------------------------------

    // Propagates d(objective)/d(node) for every recorded node that can reach
    // the scalar objective. Leaves declared with requires_grad collect their
    // gradients in grad().
    void backward(NodeRef objective) {
        if (objective.idx >= nodes_.size())
            throw NumericError("backward: node not on tape");
        if (!nodes_[objective.idx].value.is_scalar())
            throw NumericError("backward: objective must be a scalar");
        for (auto& n : nodes_) {
            if (n.needs_grad)
                n.grad.assign(n.value.numel(), 0.0);
            else
                n.grad.clear();
        }
        if (!nodes_[objective.idx].needs_grad) return;  // no parameters involved
        nodes_[objective.idx].grad[0] = 1.0;
        for (std::size_t i = objective.idx + 1; i-- > 0;) {
            auto& n = nodes_[i];
            if (n.needs_grad && n.backprop) n.backprop(*this, i);
        }
    }

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        std::vector<std::size_t> parents;
        std::function<void(Tape&, std::size_t)> backprop;
        bool needs_grad = false;
    };

    const Tensor& val(NodeRef r) const { return nodes_[r.idx].value; }
    bool needs(NodeRef r) const { return nodes_[r.idx].needs_grad; }

    void check_same_shape(NodeRef a, NodeRef b, const char* op) const {
        if (!same_shape(val(a), val(b)))
            throw NumericError(std::string(op) + ": shape mismatch " +
                               val(a).shape_string() + " vs " + val(b).shape_string());
    }

    void accumulate(std::size_t parent, const std::vector<double>& g) {
        auto& p = nodes_[parent];
        if (!p.needs_grad) return;
        for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
    }

    void accumulate_scaled(std::size_t parent, const std::vector<double>& g,
                           double c) {
        auto& p = nodes_[parent];
        if (!p.needs_grad) return;
        for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] += c * g[i];
    }

    NodeRef push(Tensor value, bool needs_grad, std::vector<std::size_t> parents,
                 std::function<void(Tape&, std::size_t)> backprop) {
        nodes_.push_back(Node{std::move(value), {}, std::move(parents),
                              needs_grad ? std::move(backprop) : nullptr, needs_grad});
        return NodeRef{nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

}  // namespace foliograd
