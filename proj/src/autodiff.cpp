#include "occupancy/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace occupancy::ad {

namespace {
std::string& corrupted_op_storage() {
    static std::string op;
    return op;
}
} // namespace

namespace testing {
void corrupt_backward(std::string op) { corrupted_op_storage() = std::move(op); }
const std::string& corrupted_op() { return corrupted_op_storage(); }
} // namespace testing

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.op = "constant";
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor& param) {
    if (auto it = bound_.find(&param); it != bound_.end()) return Var{this, it->second};
    Node n;
    n.value = param;
    n.value.clear_grad();
    n.bound = &param;
    n.needs_grad = param.requires_grad();
    n.op = "leaf";
    nodes_.push_back(std::move(n));
    bound_.emplace(&param, nodes_.size() - 1);
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, const char* op) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].needs_grad; });
    n.inputs = std::move(inputs);
    if (n.needs_grad) n.backward = std::move(backward);
    n.op = op;
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

std::vector<double>& Tape::adjoint(std::size_t id) {
    auto& n = nodes_[id];
    if (n.adjoint.empty()) n.adjoint.assign(n.value.size(), 0.0);
    return n.adjoint;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: loss is not on this tape");
    if (nodes_[loss.id].value.size() != 1) {
        throw ShapeError("backward requires a scalar loss, got shape " + shape_str(nodes_[loss.id].value.shape()));
    }
    for (auto& n : nodes_) n.adjoint.clear();
    adjoint(loss.id)[0] = 1.0;

    const std::string& corrupt = testing::corrupted_op();
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.adjoint.empty() || !n.needs_grad) continue;
        if (n.bound) {
            n.bound->accumulate_grad(n.adjoint);
            continue;
        }
        if (!n.backward) continue;
        if (!corrupt.empty() && corrupt == n.op) {
            std::vector<double> g = n.adjoint;
            for (auto& v : g) v *= 1.5;
            n.backward(*this, g);
        } else {
            n.backward(*this, n.adjoint);
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

void require_same_tape(Var a, Var b) {
    if (a.tape != b.tape) throw std::invalid_argument("operands recorded on different tapes");
}

void accumulate(Tape& t, std::size_t id, const std::vector<double>& g) {
    if (!t.needs_grad(id)) return;
    auto& dst = t.adjoint(id);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Which operand is broadcast: 0 none, 1 = a is small, 2 = b is small.
int broadcast_side(const Shape& a, const Shape& b, const char* op) {
    if (a == b) return 0;
    if (is_suffix(b, a)) return 2;
    if (is_suffix(a, b)) return 1;
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) + " are not broadcastable");
}

template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* op, F f, DA da, DB db) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const int side = broadcast_side(av.shape(), bv.shape(), op);
    const Shape out_shape = side == 1 ? bv.shape() : av.shape();
    const std::size_t n = shape_numel(out_shape);
    const std::size_t na = av.size();
    const std::size_t nb = bv.size();
    Tensor out(out_shape);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i % na], bv[i % nb]);
    const std::size_t ia = a.id, ib = b.id;
    return t.record(std::move(out), {ia, ib},
                    [ia, ib, n, na, nb, da, db](Tape& tp, const std::vector<double>& g) {
                        const Tensor& x = tp.value(ia);
                        const Tensor& y = tp.value(ib);
                        if (tp.needs_grad(ia)) {
                            auto& ga = tp.adjoint(ia);
                            for (std::size_t i = 0; i < n; ++i) ga[i % na] += da(g[i], x[i % na], y[i % nb]);
                        }
                        if (tp.needs_grad(ib)) {
                            auto& gb = tp.adjoint(ib);
                            for (std::size_t i = 0; i < n; ++i) gb[i % nb] += db(g[i], x[i % na], y[i % nb]);
                        }
                    },
                    op);
}

template <class F, class D>
Var unary(Var x, const char* op, F f, D d) {
    Tape& t = *x.tape;
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    const std::size_t ix = x.id;
    const std::size_t iy = t.size();
    return t.record(std::move(out), {ix},
                    [ix, iy, d](Tape& tp, const std::vector<double>& g) {
                        const Tensor& in = tp.value(ix);
                        const Tensor& o = tp.value(iy);
                        auto& gx = tp.adjoint(ix);
                        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * d(in[i], o[i]);
                    },
                    op);
}

double stable_sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

} // namespace

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() < 2 || bv.rank() < 2) {
        throw ShapeError("matmul: operands must be at least 2-D, got " + shape_str(av.shape()) + " and " +
                         shape_str(bv.shape()));
    }
    const std::size_t M = av.extent(av.rank() - 2), K = av.last();
    const std::size_t K2 = bv.extent(bv.rank() - 2), N = bv.last();
    const Shape abatch(av.shape().begin(), av.shape().end() - 2);
    const Shape bbatch(bv.shape().begin(), bv.shape().end() - 2);
    if (K != K2 || (!abatch.empty() && !bbatch.empty() && abatch != bbatch)) {
        throw ShapeError("matmul: shape mismatch " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
    }
    const std::size_t batch = std::max(shape_numel(abatch), shape_numel(bbatch));
    const std::size_t sa = abatch.empty() ? 0 : M * K;
    const std::size_t sb = bbatch.empty() ? 0 : K * N;
    Shape out_shape = abatch.empty() ? bbatch : abatch;
    out_shape.push_back(M);
    out_shape.push_back(N);
    Tensor out(out_shape);
    for (std::size_t p = 0; p < batch; ++p) {
        const double* A = av.data().data() + p * sa;
        const double* B = bv.data().data() + p * sb;
        double* C = out.data().data() + p * M * N;
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t k = 0; k < K; ++k) {
                const double aik = A[i * K + k];
                const double* brow = B + k * N;
                double* crow = C + i * N;
                for (std::size_t j = 0; j < N; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(
        std::move(out), {ia, ib},
        [ia, ib, batch, sa, sb, M, K, N](Tape& tp, const std::vector<double>& g) {
            const Tensor& x = tp.value(ia);
            const Tensor& y = tp.value(ib);
            const bool need_a = tp.needs_grad(ia), need_b = tp.needs_grad(ib);
            double* ga = need_a ? tp.adjoint(ia).data() : nullptr;
            double* gb = need_b ? tp.adjoint(ib).data() : nullptr;
            for (std::size_t p = 0; p < batch; ++p) {
                const double* A = x.data().data() + p * sa;
                const double* B = y.data().data() + p * sb;
                const double* G = g.data() + p * M * N;
                if (need_a) {
                    double* dA = ga + p * sa;
                    for (std::size_t i = 0; i < M; ++i)
                        for (std::size_t k = 0; k < K; ++k) {
                            double acc = 0.0;
                            for (std::size_t j = 0; j < N; ++j) acc += G[i * N + j] * B[k * N + j];
                            dA[i * K + k] += acc;
                        }
                }
                if (need_b) {
                    double* dB = gb + p * sb;
                    for (std::size_t i = 0; i < M; ++i)
                        for (std::size_t k = 0; k < K; ++k) {
                            const double aik = A[i * K + k];
                            for (std::size_t j = 0; j < N; ++j) dB[k * N + j] += aik * G[i * N + j];
                        }
                }
            }
        },
        "matmul");
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    if (av.rank() < 2) throw ShapeError("transpose: need rank >= 2, got " + shape_str(av.shape()));
    const std::size_t R = av.extent(av.rank() - 2), C = av.last();
    const std::size_t batch = av.size() / (R * C);
    Shape s = av.shape();
    std::swap(s[s.size() - 2], s[s.size() - 1]);
    Tensor out(s);
    for (std::size_t p = 0; p < batch; ++p)
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t c = 0; c < C; ++c) out[p * R * C + c * R + r] = av[p * R * C + r * C + c];
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), {ia},
                          [ia, batch, R, C](Tape& tp, const std::vector<double>& g) {
                              auto& ga = tp.adjoint(ia);
                              for (std::size_t p = 0; p < batch; ++p)
                                  for (std::size_t r = 0; r < R; ++r)
                                      for (std::size_t c = 0; c < C; ++c)
                                          ga[p * R * C + r * C + c] += g[p * R * C + c * R + r];
                          },
                          "transpose");
}

Var add(Var a, Var b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double g, double, double) { return g; },
        [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double g, double, double) { return g; },
        [](double g, double, double) { return -g; });
}

Var mul(Var a, Var b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double g, double, double y) { return g * y; },
        [](double g, double x, double) { return g * x; });
}

Var scale(Var a, double s) {
    return unary(
        a, "scale", [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
    return unary(
        a, "add_scalar", [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var x) {
    return unary(x, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
    return unary(
        x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
    return unary(
        x, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var log(Var x) {
    return unary(
        x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var clamp(Var x, double lo, double hi) {
    return unary(
        x, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var sum(Var x) {
    const Tensor& xv = x.value();
    double s = 0.0;
    for (double v : xv.data()) s += v;
    const std::size_t ix = x.id;
    return x.tape->record(Tensor::scalar(s), {ix},
                          [ix](Tape& tp, const std::vector<double>& g) {
                              auto& gx = tp.adjoint(ix);
                              for (auto& v : gx) v += g[0];
                          },
                          "sum");
}

Var mean(Var x) {
    const Tensor& xv = x.value();
    double s = 0.0;
    for (double v : xv.data()) s += v;
    const double inv = 1.0 / static_cast<double>(xv.size());
    const std::size_t ix = x.id;
    return x.tape->record(Tensor::scalar(s * inv), {ix},
                          [ix, inv](Tape& tp, const std::vector<double>& g) {
                              auto& gx = tp.adjoint(ix);
                              for (auto& v : gx) v += g[0] * inv;
                          },
                          "mean");
}

Var softmax_last(Var x) {
    const Tensor& xv = x.value();
    const std::size_t n = xv.last(), rows_n = xv.leading();
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows_n; ++r) {
        const double* in = xv.data().data() + r * n;
        double* o = out.data().data() + r * n;
        const double mx = *std::max_element(in, in + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < n; ++j) o[j] /= z;
    }
    const std::size_t ix = x.id;
    const std::size_t iy = x.tape->size();
    return x.tape->record(std::move(out), {ix},
                          [ix, iy, n, rows_n](Tape& tp, const std::vector<double>& g) {
                              const Tensor& y = tp.value(iy);
                              auto& gx = tp.adjoint(ix);
                              for (std::size_t r = 0; r < rows_n; ++r) {
                                  double dot = 0.0;
                                  for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
                                  for (std::size_t j = 0; j < n; ++j)
                                      gx[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
                              }
                          },
                          "softmax_last");
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    require_same_tape(x, gamma);
    require_same_tape(x, beta);
    const Tensor& xv = x.value();
    const std::size_t n = xv.last(), rows_n = xv.leading();
    if (gamma.value().size() != n || beta.value().size() != n) {
        throw ShapeError("layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" + shape_str(beta.shape()) +
                         " do not match last axis of " + shape_str(xv.shape()));
    }
    if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be > 0");
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    Tensor out(xv.shape());
    // Normalized values and inverse std per row, kept for backward.
    std::vector<double> xhat(xv.size());
    std::vector<double> inv_std(rows_n);
    for (std::size_t r = 0; r < rows_n; ++r) {
        const double* in = xv.data().data() + r * n;
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += in[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t j = 0; j < n; ++j) {
            xhat[r * n + j] = (in[j] - mu) * is;
            out[r * n + j] = gv[j] * xhat[r * n + j] + bv[j];
        }
    }
    const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
    return x.tape->record(
        std::move(out), {ix, ig, ib},
        [ix, ig, ib, n, rows_n, xhat = std::move(xhat), inv_std = std::move(inv_std)](
            Tape& tp, const std::vector<double>& g) {
            const Tensor& gam = tp.value(ig);
            if (tp.needs_grad(ig)) {
                auto& gg = tp.adjoint(ig);
                for (std::size_t r = 0; r < rows_n; ++r)
                    for (std::size_t j = 0; j < n; ++j) gg[j] += g[r * n + j] * xhat[r * n + j];
            }
            if (tp.needs_grad(ib)) {
                auto& gb = tp.adjoint(ib);
                for (std::size_t r = 0; r < rows_n; ++r)
                    for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
            }
            if (tp.needs_grad(ix)) {
                auto& gx = tp.adjoint(ix);
                const double inv_n = 1.0 / static_cast<double>(n);
                for (std::size_t r = 0; r < rows_n; ++r) {
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = g[r * n + j] * gam[j];
                        m1 += dxh;
                        m2 += dxh * xhat[r * n + j];
                    }
                    m1 *= inv_n;
                    m2 *= inv_n;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = g[r * n + j] * gam[j];
                        gx[r * n + j] += inv_std[r] * (dxh - m1 - xhat[r * n + j] * m2);
                    }
                }
            }
        },
        "layer_norm");
}

Var concat_last(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_last: no parts");
    Tape& t = *parts.front().tape;
    const Shape& s0 = parts.front().shape();
    const Shape lead(s0.begin(), s0.empty() ? s0.end() : s0.end() - 1);
    std::vector<std::size_t> widths;
    std::vector<std::size_t> ids;
    std::size_t total = 0;
    for (const Var& p : parts) {
        require_same_tape(parts.front(), p);
        const Shape& s = p.shape();
        const Shape l(s.begin(), s.empty() ? s.end() : s.end() - 1);
        if (l != lead) {
            throw ShapeError("concat_last: leading shape " + shape_str(s) + " does not match " + shape_str(s0));
        }
        widths.push_back(p.value().last());
        ids.push_back(p.id);
        total += widths.back();
    }
    const std::size_t rows_n = parts.front().value().leading();
    Shape out_shape = lead;
    out_shape.push_back(total);
    Tensor out(out_shape);
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& pv = parts[k].value();
        for (std::size_t r = 0; r < rows_n; ++r)
            std::copy_n(pv.data().data() + r * widths[k], widths[k], out.data().data() + r * total + off);
        off += widths[k];
    }
    return t.record(std::move(out), ids,
                    [ids, widths, rows_n, total](Tape& tp, const std::vector<double>& g) {
                        std::size_t o = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                            if (tp.needs_grad(ids[k])) {
                                auto& gk = tp.adjoint(ids[k]);
                                for (std::size_t r = 0; r < rows_n; ++r)
                                    for (std::size_t j = 0; j < widths[k]; ++j)
                                        gk[r * widths[k] + j] += g[r * total + o + j];
                            }
                            o += widths[k];
                        }
                    },
                    "concat_last");
}

Var slice_last(Var x, std::size_t begin, std::size_t width) {
    const Tensor& xv = x.value();
    const std::size_t n = xv.last();
    if (width == 0 || begin + width > n) {
        throw ShapeError("slice_last: [" + std::to_string(begin) + ", " + std::to_string(begin + width) +
                         ") out of range for " + shape_str(xv.shape()));
    }
    const std::size_t rows_n = xv.leading();
    Shape s = xv.shape();
    s.back() = width;
    Tensor out(s);
    for (std::size_t r = 0; r < rows_n; ++r)
        std::copy_n(xv.data().data() + r * n + begin, width, out.data().data() + r * width);
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix},
                          [ix, n, begin, width, rows_n](Tape& tp, const std::vector<double>& g) {
                              auto& gx = tp.adjoint(ix);
                              for (std::size_t r = 0; r < rows_n; ++r)
                                  for (std::size_t j = 0; j < width; ++j) gx[r * n + begin + j] += g[r * width + j];
                          },
                          "slice_last");
}

Var rows(Var x, std::size_t begin, std::size_t count) {
    const Tensor& xv = x.value();
    if (xv.rank() < 1 || count == 0 || begin + count > xv.extent(0)) {
        throw ShapeError("rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_str(xv.shape()));
    }
    const std::size_t stride = xv.size() / xv.extent(0);
    Shape s = xv.shape();
    s[0] = count;
    Tensor out(s, std::vector<double>(xv.data().begin() + begin * stride,
                                      xv.data().begin() + (begin + count) * stride));
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix},
                          [ix, begin, stride](Tape& tp, const std::vector<double>& g) {
                              auto& gx = tp.adjoint(ix);
                              for (std::size_t i = 0; i < g.size(); ++i) gx[begin * stride + i] += g[i];
                          },
                          "rows");
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    const Shape& s0 = parts.front().shape();
    if (s0.empty()) throw ShapeError("concat_rows: scalar operand");
    const Shape tail(s0.begin() + 1, s0.end());
    std::size_t total_rows = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> sizes;
    for (const Var& p : parts) {
        require_same_tape(parts.front(), p);
        const Shape& s = p.shape();
        if (s.empty() || Shape(s.begin() + 1, s.end()) != tail) {
            throw ShapeError("concat_rows: shape " + shape_str(s) + " incompatible with " + shape_str(s0));
        }
        total_rows += s[0];
        ids.push_back(p.id);
        sizes.push_back(p.value().size());
    }
    Shape out_shape = s0;
    out_shape[0] = total_rows;
    Tensor out(out_shape);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const auto d = p.value().data();
        std::copy(d.begin(), d.end(), out.data().begin() + static_cast<std::ptrdiff_t>(off));
        off += d.size();
    }
    return parts.front().tape->record(std::move(out), ids,
                                      [ids, sizes](Tape& tp, const std::vector<double>& g) {
                                          std::size_t o = 0;
                                          for (std::size_t k = 0; k < ids.size(); ++k) {
                                              if (tp.needs_grad(ids[k])) {
                                                  auto& gk = tp.adjoint(ids[k]);
                                                  for (std::size_t i = 0; i < sizes[k]; ++i) gk[i] += g[o + i];
                                              }
                                              o += sizes[k];
                                          }
                                      },
                                      "concat_rows");
}

Var repeat_rows(Var row, std::size_t n) {
    const Tensor& rv = row.value();
    const std::size_t width = rv.size();
    if (n == 0) throw ShapeError("repeat_rows: n must be >= 1");
    if (rv.rank() > 2 || (rv.rank() == 2 && rv.extent(0) != 1)) {
        throw ShapeError("repeat_rows: expected a row vector, got " + shape_str(rv.shape()));
    }
    Tensor out({n, width});
    for (std::size_t r = 0; r < n; ++r) std::copy_n(rv.data().data(), width, out.data().data() + r * width);
    const std::size_t ix = row.id;
    return row.tape->record(std::move(out), {ix},
                            [ix, n, width](Tape& tp, const std::vector<double>& g) {
                                auto& gx = tp.adjoint(ix);
                                for (std::size_t r = 0; r < n; ++r)
                                    for (std::size_t j = 0; j < width; ++j) gx[j] += g[r * width + j];
                            },
                            "repeat_rows");
}

Var reshape(Var x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix},
                          [ix](Tape& tp, const std::vector<double>& g) { accumulate(tp, ix, g); }, "reshape");
}

} // namespace occupancy::ad
