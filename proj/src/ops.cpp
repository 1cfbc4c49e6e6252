#include "taug/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace taug {
namespace ops {

namespace detail {

bool sabotage_leaky_relu_backward = false;

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;

void gemm(bool trans_a, bool trans_b, int m, int n, int k, Real alpha, const Real* a,
          const Real* b, Real beta, Real* c) {
    MMap C(c, m, n);
    auto run = [&](const auto& A, const auto& B) {
        if (beta == Real(0)) {
            if (alpha == Real(1))
                C.noalias() = A * B;
            else
                C.noalias() = alpha * (A * B);
        } else {
            if (beta != Real(1)) C *= beta;
            if (alpha == Real(1))
                C.noalias() += A * B;
            else
                C.noalias() += alpha * (A * B);
        }
    };
    if (!trans_a && !trans_b)
        run(CMap(a, m, k), CMap(b, k, n));
    else if (!trans_a && trans_b)
        run(CMap(a, m, k), CMap(b, n, k).transpose());
    else if (trans_a && !trans_b)
        run(CMap(a, k, m).transpose(), CMap(b, k, n));
    else
        run(CMap(a, k, m).transpose(), CMap(b, n, k).transpose());
}

}  // namespace detail

namespace {

constexpr Real kLogFloor = -27.631021115928547;  // log(1e-12)

bool track(const Tape& tape, std::initializer_list<TensorPtr> ins) {
    if (!tape.enabled()) return false;
    for (const auto& t : ins)
        if (t && t->requires_grad) return true;
    return false;
}

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* what) {
    if (a->shape != b->shape) throw DimensionError(std::string(what) + ": shape mismatch");
}

Real stable_sigmoid(Real x) {
    if (x >= 0) {
        const Real e = std::exp(-x);
        return Real(1) / (Real(1) + e);
    }
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

Real stable_log_sigmoid(Real x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

TensorPtr unary(Tape& tape, const TensorPtr& a, const char*,
                Real (*fwd)(Real), Real (*dfd)(Real, Real)) {
    auto out = Tensor::create(a->shape, track(tape, {a}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = fwd(a->value[i]);
    if (out->requires_grad) {
        tape.record([a, out, dfd, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i)
                a->grad[i] += out->grad[i] * dfd(a->value[i], out->value[i]);
        });
    }
    return out;
}

}  // namespace

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "add");
    auto out = Tensor::create(a->shape, track(tape, {a, b}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] + b->value[i];
    if (out->requires_grad) {
        tape.record([a, b, out, n]() {
            if (a->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
            if (b->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i];
        });
    }
    return out;
}

TensorPtr sub(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "sub");
    auto out = Tensor::create(a->shape, track(tape, {a, b}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] - b->value[i];
    if (out->requires_grad) {
        tape.record([a, b, out, n]() {
            if (a->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
            if (b->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) b->grad[i] -= out->grad[i];
        });
    }
    return out;
}

TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mul");
    auto out = Tensor::create(a->shape, track(tape, {a, b}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] * b->value[i];
    if (out->requires_grad) {
        tape.record([a, b, out, n]() {
            if (a->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] * b->value[i];
            if (b->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i] * a->value[i];
        });
    }
    return out;
}

TensorPtr neg(Tape& tape, const TensorPtr& a) { return scale(tape, a, Real(-1)); }

TensorPtr scale(Tape& tape, const TensorPtr& a, Real c) {
    auto out = Tensor::create(a->shape, track(tape, {a}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] * c;
    if (out->requires_grad) {
        tape.record([a, out, c, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] * c;
        });
    }
    return out;
}

TensorPtr add_scalar(Tape& tape, const TensorPtr& a, Real c) {
    auto out = Tensor::create(a->shape, track(tape, {a}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] + c;
    if (out->requires_grad) {
        tape.record([a, out, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
        });
    }
    return out;
}

TensorPtr exp_elem(Tape& tape, const TensorPtr& a) {
    return unary(tape, a, "exp", [](Real x) { return std::exp(x); },
                 [](Real, Real y) { return y; });
}

TensorPtr abs_elem(Tape& tape, const TensorPtr& a) {
    return unary(tape, a, "abs", [](Real x) { return std::fabs(x); },
                 [](Real x, Real) { return x > 0 ? Real(1) : (x < 0 ? Real(-1) : Real(0)); });
}

TensorPtr clamp_elem(Tape& tape, const TensorPtr& a, Real lo, Real hi) {
    auto out = Tensor::create(a->shape, track(tape, {a}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = std::clamp(a->value[i], lo, hi);
    if (out->requires_grad) {
        tape.record([a, out, lo, hi, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i) {
                const Real v = a->value[i];
                if (v >= lo && v <= hi) a->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr sigmoid(Tape& tape, const TensorPtr& a) {
    return unary(tape, a, "sigmoid", [](Real x) { return stable_sigmoid(x); },
                 [](Real, Real y) { return y * (Real(1) - y); });
}

TensorPtr log_sigmoid(Tape& tape, const TensorPtr& a) {
    return unary(tape, a, "log_sigmoid", [](Real x) { return stable_log_sigmoid(x); },
                 [](Real x, Real) { return stable_sigmoid(-x); });
}

TensorPtr leaky_relu(Tape& tape, const TensorPtr& a, Real slope) {
    auto out = Tensor::create(a->shape, track(tape, {a}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) {
        const Real v = a->value[i];
        out->value[i] = v > 0 ? v : slope * v;
    }
    if (out->requires_grad) {
        tape.record([a, out, slope, n]() {
            if (!a->requires_grad) return;
            const Real fudge = detail::sabotage_leaky_relu_backward ? Real(1.01) : Real(1);
            for (std::int64_t i = 0; i < n; ++i)
                a->grad[i] += out->grad[i] * (a->value[i] > 0 ? fudge : slope);
        });
    }
    return out;
}

TensorPtr leaky_relu_inplace(Tape& tape, const TensorPtr& a, Real slope) {
    const auto n = a->size();
    const bool rec = track(tape, {a});
    for (std::int64_t i = 0; i < n; ++i) {
        const Real v = a->value[i];
        if (v <= 0) a->value[i] = slope * v;
    }
    if (rec) {
        // output sign equals input sign for slope > 0
        tape.record([a, slope, n]() {
            const Real fudge = detail::sabotage_leaky_relu_backward ? Real(1.01) : Real(1);
            for (std::int64_t i = 0; i < n; ++i)
                a->grad[i] *= (a->value[i] > 0 ? fudge : slope);
        });
    }
    return a;
}

TensorPtr triangle_wave(Tape& tape, const TensorPtr& a) {
    auto out = Tensor::create(a->shape, track(tape, {a}));
    const auto n = a->size();
    for (std::int64_t i = 0; i < n; ++i) {
        const Real x = a->value[i];
        const Real m = x - Real(2) * std::floor(x / Real(2));
        out->value[i] = m <= Real(1) ? m : Real(2) - m;
    }
    if (out->requires_grad) {
        tape.record([a, out, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i) {
                const Real x = a->value[i];
                const Real m = x - Real(2) * std::floor(x / Real(2));
                // left limit at fold points: -1 at even integers, +1 at odd
                const Real d = (m > Real(0) && m <= Real(1)) ? Real(1) : Real(-1);
                a->grad[i] += out->grad[i] * d;
            }
        });
    }
    return out;
}

namespace {

TensorPtr dropout_impl(Tape& tape, const TensorPtr& a, Real drop_ratio, RngStream& rng,
                       bool training, bool inplace) {
    if (!(drop_ratio >= Real(0) && drop_ratio < Real(1)))
        throw ConfigError("dropout: drop_ratio must lie in [0, 1)");
    if (!training || drop_ratio == Real(0)) return a;

    const auto n = a->size();
    const Real keep_scale = Real(1) / (Real(1) - drop_ratio);
    auto mask = std::make_shared<std::vector<std::uint8_t>>(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) (*mask)[i] = rng.uniform() >= drop_ratio ? 1 : 0;

    if (inplace) {
        const bool rec = track(tape, {a});
        for (std::int64_t i = 0; i < n; ++i)
            a->value[i] = (*mask)[i] ? a->value[i] * keep_scale : Real(0);
        if (rec) {
            tape.record([a, mask, keep_scale, n]() {
                for (std::int64_t i = 0; i < n; ++i)
                    a->grad[i] = (*mask)[i] ? a->grad[i] * keep_scale : Real(0);
            });
        }
        return a;
    }

    auto out = Tensor::create(a->shape, track(tape, {a}));
    for (std::int64_t i = 0; i < n; ++i)
        out->value[i] = (*mask)[i] ? a->value[i] * keep_scale : Real(0);
    if (out->requires_grad) {
        tape.record([a, out, mask, keep_scale, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i)
                if ((*mask)[i]) a->grad[i] += out->grad[i] * keep_scale;
        });
    }
    return out;
}

}  // namespace

TensorPtr dropout(Tape& tape, const TensorPtr& a, Real drop_ratio, RngStream& rng,
                  bool training) {
    return dropout_impl(tape, a, drop_ratio, rng, training, false);
}

TensorPtr dropout_inplace(Tape& tape, const TensorPtr& a, Real drop_ratio, RngStream& rng,
                          bool training) {
    return dropout_impl(tape, a, drop_ratio, rng, training, true);
}

TensorPtr reshape(Tape& tape, const TensorPtr& a, std::vector<int> new_shape) {
    if (shape_size(new_shape) != a->size()) throw DimensionError("reshape: size mismatch");
    auto out = Tensor::create(std::move(new_shape), track(tape, {a}));
    out->value = a->value;
    if (out->requires_grad) {
        const auto n = a->size();
        tape.record([a, out, n]() {
            if (!a->requires_grad) return;
            for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
        });
    }
    return out;
}

TensorPtr concat_cols(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    const int r = a->rows();
    if (b->rows() != r) throw DimensionError("concat_cols: row mismatch");
    const int ca = a->cols(), cb = b->cols();
    auto out = Tensor::create({r, ca + cb}, track(tape, {a, b}));
    for (int i = 0; i < r; ++i) {
        std::memcpy(out->value.data() + static_cast<std::size_t>(i) * (ca + cb),
                    a->value.data() + static_cast<std::size_t>(i) * ca, sizeof(Real) * ca);
        std::memcpy(out->value.data() + static_cast<std::size_t>(i) * (ca + cb) + ca,
                    b->value.data() + static_cast<std::size_t>(i) * cb, sizeof(Real) * cb);
    }
    if (out->requires_grad) {
        tape.record([a, b, out, r, ca, cb]() {
            for (int i = 0; i < r; ++i) {
                const Real* g = out->grad.data() + static_cast<std::size_t>(i) * (ca + cb);
                if (a->requires_grad)
                    for (int j = 0; j < ca; ++j)
                        a->grad[static_cast<std::size_t>(i) * ca + j] += g[j];
                if (b->requires_grad)
                    for (int j = 0; j < cb; ++j)
                        b->grad[static_cast<std::size_t>(i) * cb + j] += g[ca + j];
            }
        });
    }
    return out;
}

TensorPtr col_slice(Tape& tape, const TensorPtr& a, int c0, int c1) {
    const int r = a->rows(), c = a->cols();
    if (!(0 <= c0 && c0 < c1 && c1 <= c)) throw DimensionError("col_slice: bad column range");
    const int w = c1 - c0;
    auto out = Tensor::create({r, w}, track(tape, {a}));
    for (int i = 0; i < r; ++i)
        std::memcpy(out->value.data() + static_cast<std::size_t>(i) * w,
                    a->value.data() + static_cast<std::size_t>(i) * c + c0, sizeof(Real) * w);
    if (out->requires_grad) {
        tape.record([a, out, r, c, c0, w]() {
            if (!a->requires_grad) return;
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < w; ++j)
                    a->grad[static_cast<std::size_t>(i) * c + c0 + j] +=
                        out->grad[static_cast<std::size_t>(i) * w + j];
        });
    }
    return out;
}

TensorPtr repeat_rows(Tape& tape, const TensorPtr& a, int times) {
    if (times <= 0) throw DimensionError("repeat_rows: times must be positive");
    const int r = a->rows(), c = a->cols();
    auto out = Tensor::create({r * times, c}, track(tape, {a}));
    for (int i = 0; i < r; ++i)
        for (int t = 0; t < times; ++t)
            std::memcpy(out->value.data() + (static_cast<std::size_t>(i) * times + t) * c,
                        a->value.data() + static_cast<std::size_t>(i) * c, sizeof(Real) * c);
    if (out->requires_grad) {
        tape.record([a, out, r, c, times]() {
            if (!a->requires_grad) return;
            for (int i = 0; i < r; ++i)
                for (int t = 0; t < times; ++t) {
                    const Real* g = out->grad.data() + (static_cast<std::size_t>(i) * times + t) * c;
                    Real* ga = a->grad.data() + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) ga[j] += g[j];
                }
        });
    }
    return out;
}

TensorPtr broadcast_scalar(Tape& tape, const TensorPtr& s, int n) {
    if (s->size() != 1) throw DimensionError("broadcast_scalar: source must be scalar");
    auto out = Tensor::create({n}, track(tape, {s}));
    std::fill(out->value.begin(), out->value.end(), s->value[0]);
    if (out->requires_grad) {
        tape.record([s, out, n]() {
            if (!s->requires_grad) return;
            Real acc = 0;
            for (int i = 0; i < n; ++i) acc += out->grad[i];
            s->grad[0] += acc;
        });
    }
    return out;
}

TensorPtr row_scale(Tape& tape, const TensorPtr& a, const TensorPtr& s) {
    const int r = a->rows(), c = a->cols();
    if (s->size() != r) throw DimensionError("row_scale: scale length must equal row count");
    auto out = Tensor::create(a->shape, track(tape, {a, s}));
    for (int i = 0; i < r; ++i) {
        const Real f = s->value[i];
        const Real* av = a->value.data() + static_cast<std::size_t>(i) * c;
        Real* ov = out->value.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) ov[j] = av[j] * f;
    }
    if (out->requires_grad) {
        tape.record([a, s, out, r, c]() {
            for (int i = 0; i < r; ++i) {
                const Real* g = out->grad.data() + static_cast<std::size_t>(i) * c;
                if (a->requires_grad) {
                    const Real f = s->value[i];
                    Real* ga = a->grad.data() + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) ga[j] += g[j] * f;
                }
                if (s->requires_grad) {
                    const Real* av = a->value.data() + static_cast<std::size_t>(i) * c;
                    Real acc = 0;
                    for (int j = 0; j < c; ++j) acc += g[j] * av[j];
                    s->grad[i] += acc;
                }
            }
        });
    }
    return out;
}

TensorPtr row_add(Tape& tape, const TensorPtr& a, const TensorPtr& s) {
    const int r = a->rows(), c = a->cols();
    if (s->size() != r) throw DimensionError("row_add: offset length must equal row count");
    auto out = Tensor::create(a->shape, track(tape, {a, s}));
    for (int i = 0; i < r; ++i) {
        const Real f = s->value[i];
        const Real* av = a->value.data() + static_cast<std::size_t>(i) * c;
        Real* ov = out->value.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) ov[j] = av[j] + f;
    }
    if (out->requires_grad) {
        tape.record([a, s, out, r, c]() {
            for (int i = 0; i < r; ++i) {
                const Real* g = out->grad.data() + static_cast<std::size_t>(i) * c;
                if (a->requires_grad) {
                    Real* ga = a->grad.data() + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) ga[j] += g[j];
                }
                if (s->requires_grad) {
                    Real acc = 0;
                    for (int j = 0; j < c; ++j) acc += g[j];
                    s->grad[i] += acc;
                }
            }
        });
    }
    return out;
}

TensorPtr gather_rows(Tape& tape, const TensorPtr& a, std::vector<int> rows) {
    const int r = a->rows(), c = a->cols();
    for (int idx : rows)
        if (idx < 0 || idx >= r) throw DimensionError("gather_rows: index out of range");
    const int m = static_cast<int>(rows.size());
    auto out = Tensor::create({m, c}, track(tape, {a}));
    for (int i = 0; i < m; ++i)
        std::memcpy(out->value.data() + static_cast<std::size_t>(i) * c,
                    a->value.data() + static_cast<std::size_t>(rows[i]) * c, sizeof(Real) * c);
    if (out->requires_grad) {
        auto idxs = std::make_shared<std::vector<int>>(std::move(rows));
        tape.record([a, out, idxs, m, c]() {
            if (!a->requires_grad) return;
            for (int i = 0; i < m; ++i) {
                const Real* g = out->grad.data() + static_cast<std::size_t>(i) * c;
                Real* ga = a->grad.data() + static_cast<std::size_t>((*idxs)[i]) * c;
                for (int j = 0; j < c; ++j) ga[j] += g[j];
            }
        });
    }
    return out;
}

TensorPtr sum_all(Tape& tape, const TensorPtr& a) {
    auto out = Tensor::create({1}, track(tape, {a}));
    out->value[0] = std::accumulate(a->value.begin(), a->value.end(), Real(0));
    if (out->requires_grad) {
        const auto n = a->size();
        tape.record([a, out, n]() {
            if (!a->requires_grad) return;
            const Real g = out->grad[0];
            for (std::int64_t i = 0; i < n; ++i) a->grad[i] += g;
        });
    }
    return out;
}

TensorPtr mean_all(Tape& tape, const TensorPtr& a) {
    const auto n = a->size();
    auto out = Tensor::create({1}, track(tape, {a}));
    out->value[0] = std::accumulate(a->value.begin(), a->value.end(), Real(0)) / Real(n);
    if (out->requires_grad) {
        tape.record([a, out, n]() {
            if (!a->requires_grad) return;
            const Real g = out->grad[0] / Real(n);
            for (std::int64_t i = 0; i < n; ++i) a->grad[i] += g;
        });
    }
    return out;
}

TensorPtr rowdot(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "rowdot");
    const int r = a->rows(), c = a->cols();
    auto out = Tensor::create({r}, track(tape, {a, b}));
    for (int i = 0; i < r; ++i) {
        const Real* av = a->value.data() + static_cast<std::size_t>(i) * c;
        const Real* bv = b->value.data() + static_cast<std::size_t>(i) * c;
        Real acc = 0;
        for (int j = 0; j < c; ++j) acc += av[j] * bv[j];
        out->value[i] = acc;
    }
    if (out->requires_grad) {
        tape.record([a, b, out, r, c]() {
            for (int i = 0; i < r; ++i) {
                const Real g = out->grad[i];
                if (a->requires_grad) {
                    const Real* bv = b->value.data() + static_cast<std::size_t>(i) * c;
                    Real* ga = a->grad.data() + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) ga[j] += g * bv[j];
                }
                if (b->requires_grad) {
                    const Real* av = a->value.data() + static_cast<std::size_t>(i) * c;
                    Real* gb = b->grad.data() + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) gb[j] += g * av[j];
                }
            }
        });
    }
    return out;
}

TensorPtr add_list(Tape& tape, const std::vector<TensorPtr>& terms) {
    if (terms.empty()) throw DimensionError("add_list: no terms");
    bool needs = false;
    Real acc = 0;
    for (const auto& t : terms) {
        if (t->size() != 1) throw DimensionError("add_list: terms must be scalars");
        acc += t->value[0];
        if (t->requires_grad) needs = true;
    }
    auto out = Tensor::create({1}, tape.enabled() && needs);
    out->value[0] = acc;
    if (out->requires_grad) {
        auto held = std::make_shared<std::vector<TensorPtr>>(terms);
        tape.record([held, out]() {
            const Real g = out->grad[0];
            for (const auto& t : *held)
                if (t->requires_grad) t->grad[0] += g;
        });
    }
    return out;
}

TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
        throw DimensionError("matmul: incompatible shapes");
    const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
    auto out = Tensor::create({m, n}, track(tape, {a, b}));
    detail::gemm(false, false, m, n, k, 1, a->value.data(), b->value.data(), 0,
                 out->value.data());
    if (out->requires_grad) {
        tape.record([a, b, out, m, n, k]() {
            if (a->requires_grad)
                detail::gemm(false, true, m, k, n, 1, out->grad.data(), b->value.data(), 1,
                             a->grad.data());
            if (b->requires_grad)
                detail::gemm(true, false, k, n, m, 1, a->value.data(), out->grad.data(), 1,
                             b->grad.data());
        });
    }
    return out;
}

TensorPtr linear(Tape& tape, const TensorPtr& x, const TensorPtr& weight, const TensorPtr& bias) {
    if (x->shape.size() != 2 || weight->shape.size() != 2 || x->shape[1] != weight->shape[1])
        throw DimensionError("linear: inner dimension mismatch");
    const int batch = x->shape[0], in = x->shape[1], out_dim = weight->shape[0];
    if (bias->size() != out_dim) throw DimensionError("linear: bias length mismatch");
    auto out = Tensor::create({batch, out_dim}, track(tape, {x, weight, bias}));
    detail::gemm(false, true, batch, out_dim, in, 1, x->value.data(), weight->value.data(), 0,
                 out->value.data());
    for (int i = 0; i < batch; ++i) {
        Real* row = out->value.data() + static_cast<std::size_t>(i) * out_dim;
        for (int j = 0; j < out_dim; ++j) row[j] += bias->value[j];
    }
    if (out->requires_grad) {
        tape.record([x, weight, bias, out, batch, in, out_dim]() {
            if (x->requires_grad)
                detail::gemm(false, false, batch, in, out_dim, 1, out->grad.data(),
                             weight->value.data(), 1, x->grad.data());
            if (weight->requires_grad)
                detail::gemm(true, false, out_dim, in, batch, 1, out->grad.data(),
                             x->value.data(), 1, weight->grad.data());
            if (bias->requires_grad)
                for (int i = 0; i < batch; ++i) {
                    const Real* g = out->grad.data() + static_cast<std::size_t>(i) * out_dim;
                    for (int j = 0; j < out_dim; ++j) bias->grad[j] += g[j];
                }
        });
    }
    return out;
}

namespace {

// Row-wise log-sum-exp with the per-row max subtracted; fills probs with
// softmax values when probs != nullptr.
void row_softmax_stats(const Real* z, int batch, int k, Real* lse, Real* probs) {
    for (int b = 0; b < batch; ++b) {
        const Real* row = z + static_cast<std::size_t>(b) * k;
        Real m = row[0];
        for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
        Real s = 0;
        for (int j = 0; j < k; ++j) s += std::exp(row[j] - m);
        lse[b] = m + std::log(s);
        if (probs) {
            Real* p = probs + static_cast<std::size_t>(b) * k;
            for (int j = 0; j < k; ++j) p[j] = std::exp(row[j] - lse[b]);
        }
    }
}

}  // namespace

TensorPtr softmax(Tape& tape, const TensorPtr& logits) {
    const int batch = logits->rows(), k = logits->cols();
    auto out = Tensor::create(logits->shape, track(tape, {logits}));
    std::vector<Real> lse(batch);
    row_softmax_stats(logits->value.data(), batch, k, lse.data(), out->value.data());
    if (out->requires_grad) {
        tape.record([logits, out, batch, k]() {
            if (!logits->requires_grad) return;
            for (int b = 0; b < batch; ++b) {
                const Real* p = out->value.data() + static_cast<std::size_t>(b) * k;
                const Real* g = out->grad.data() + static_cast<std::size_t>(b) * k;
                Real dot = 0;
                for (int j = 0; j < k; ++j) dot += g[j] * p[j];
                Real* gz = logits->grad.data() + static_cast<std::size_t>(b) * k;
                for (int j = 0; j < k; ++j) gz[j] += p[j] * (g[j] - dot);
            }
        });
    }
    return out;
}

TensorPtr softmax_cross_entropy(Tape& tape, const TensorPtr& logits, const TensorPtr& labels) {
    check_same_shape(logits, labels, "softmax_cross_entropy");
    const int batch = logits->rows(), k = logits->cols();
    auto probs = std::make_shared<std::vector<Real>>(logits->value.size());
    std::vector<Real> lse(batch);
    row_softmax_stats(logits->value.data(), batch, k, lse.data(), probs->data());
    Real loss = 0;
    for (int b = 0; b < batch; ++b) {
        const Real* z = logits->value.data() + static_cast<std::size_t>(b) * k;
        const Real* y = labels->value.data() + static_cast<std::size_t>(b) * k;
        Real dot = 0;
        for (int j = 0; j < k; ++j) dot += y[j] * z[j];
        loss += lse[b] - dot;
    }
    auto out = Tensor::create({1}, track(tape, {logits}));
    out->value[0] = loss / Real(batch);
    if (out->requires_grad) {
        tape.record([logits, labels, out, probs, batch, k]() {
            if (!logits->requires_grad) return;
            const Real g = out->grad[0] / Real(batch);
            for (std::int64_t i = 0; i < logits->size(); ++i)
                logits->grad[i] += g * ((*probs)[i] - labels->value[i]);
        });
    }
    return out;
}

TensorPtr per_sample_cross_entropy(Tape& tape, const TensorPtr& logits, const TensorPtr& labels) {
    check_same_shape(logits, labels, "per_sample_cross_entropy");
    const int batch = logits->rows(), k = logits->cols();
    auto probs = std::make_shared<std::vector<Real>>(logits->value.size());
    std::vector<Real> lse(batch);
    row_softmax_stats(logits->value.data(), batch, k, lse.data(), probs->data());
    auto out = Tensor::create({batch}, track(tape, {logits}));
    for (int b = 0; b < batch; ++b) {
        const Real* z = logits->value.data() + static_cast<std::size_t>(b) * k;
        const Real* y = labels->value.data() + static_cast<std::size_t>(b) * k;
        Real dot = 0;
        for (int j = 0; j < k; ++j) dot += y[j] * z[j];
        out->value[b] = lse[b] - dot;
    }
    if (out->requires_grad) {
        tape.record([logits, labels, out, probs, batch, k]() {
            if (!logits->requires_grad) return;
            for (int b = 0; b < batch; ++b) {
                const Real g = out->grad[b];
                const Real* p = probs->data() + static_cast<std::size_t>(b) * k;
                const Real* y = labels->value.data() + static_cast<std::size_t>(b) * k;
                Real* gz = logits->grad.data() + static_cast<std::size_t>(b) * k;
                for (int j = 0; j < k; ++j) gz[j] += g * (p[j] - y[j]);
            }
        });
    }
    return out;
}

TensorPtr non_saturating_loss(Tape& tape, const TensorPtr& logits, const TensorPtr& labels) {
    check_same_shape(logits, labels, "non_saturating_loss");
    const int batch = logits->rows(), k = logits->cols();

    // log(1 - p_k) = log(S_k / S) with S_k the complementary exponential sum,
    // accumulated directly so it stays accurate as p_k -> 1.
    auto ex = std::make_shared<std::vector<Real>>(logits->value.size());     // exp(z - max)
    auto comp = std::make_shared<std::vector<Real>>(logits->value.size());   // S_k
    auto clamped = std::make_shared<std::vector<std::uint8_t>>(logits->value.size());
    auto total = std::make_shared<std::vector<Real>>(batch);                 // S

    Real loss = 0;
    for (int b = 0; b < batch; ++b) {
        const Real* z = logits->value.data() + static_cast<std::size_t>(b) * k;
        const Real* y = labels->value.data() + static_cast<std::size_t>(b) * k;
        Real m = z[0];
        for (int j = 1; j < k; ++j) m = std::max(m, z[j]);
        Real* e = ex->data() + static_cast<std::size_t>(b) * k;
        Real s = 0;
        for (int j = 0; j < k; ++j) {
            e[j] = std::exp(z[j] - m);
            s += e[j];
        }
        (*total)[b] = s;
        Real* sk = comp->data() + static_cast<std::size_t>(b) * k;
        std::uint8_t* cl = clamped->data() + static_cast<std::size_t>(b) * k;
        for (int j = 0; j < k; ++j) {
            Real acc = 0;
            for (int l = 0; l < k; ++l)
                if (l != j) acc += e[l];
            sk[j] = acc;
            Real term = acc > 0 ? std::log(acc / s) : kLogFloor * Real(2);
            cl[j] = term < kLogFloor ? 1 : 0;
            if (cl[j]) term = kLogFloor;
            loss += y[j] * term;
        }
    }
    auto out = Tensor::create({1}, track(tape, {logits}));
    out->value[0] = loss / Real(batch);
    if (out->requires_grad) {
        tape.record([logits, labels, out, ex, comp, clamped, total, batch, k]() {
            if (!logits->requires_grad) return;
            const Real g = out->grad[0] / Real(batch);
            for (int b = 0; b < batch; ++b) {
                const Real* y = labels->value.data() + static_cast<std::size_t>(b) * k;
                const Real* e = ex->data() + static_cast<std::size_t>(b) * k;
                const Real* sk = comp->data() + static_cast<std::size_t>(b) * k;
                const std::uint8_t* cl = clamped->data() + static_cast<std::size_t>(b) * k;
                const Real s = (*total)[b];
                Real t_all = 0, y_active = 0;
                for (int j = 0; j < k; ++j)
                    if (!cl[j]) {
                        t_all += y[j] / sk[j];
                        y_active += y[j];
                    }
                Real* gz = logits->grad.data() + static_cast<std::size_t>(b) * k;
                for (int j = 0; j < k; ++j) {
                    const Real t_others = t_all - (cl[j] ? Real(0) : y[j] / sk[j]);
                    gz[j] += g * (e[j] * t_others - y_active * (e[j] / s));
                }
            }
        });
    }
    return out;
}

TensorPtr kl_to_softmax(Tape& tape, const TensorPtr& logits, const TensorPtr& q) {
    check_same_shape(logits, q, "kl_to_softmax");
    const int batch = logits->rows(), k = logits->cols();
    auto probs = std::make_shared<std::vector<Real>>(logits->value.size());
    std::vector<Real> lse(batch);
    row_softmax_stats(logits->value.data(), batch, k, lse.data(), probs->data());
    Real val = 0;
    for (int b = 0; b < batch; ++b) {
        const Real* z = logits->value.data() + static_cast<std::size_t>(b) * k;
        const Real* qv = q->value.data() + static_cast<std::size_t>(b) * k;
        for (int j = 0; j < k; ++j) {
            if (qv[j] <= 0) continue;
            val += qv[j] * (std::log(qv[j]) - (z[j] - lse[b]));
        }
    }
    auto out = Tensor::create({1}, track(tape, {logits}));
    out->value[0] = val / Real(batch);
    if (out->requires_grad) {
        tape.record([logits, q, out, probs, batch, k]() {
            if (!logits->requires_grad) return;
            const Real g = out->grad[0] / Real(batch);
            for (int b = 0; b < batch; ++b) {
                const Real* p = probs->data() + static_cast<std::size_t>(b) * k;
                const Real* qv = q->value.data() + static_cast<std::size_t>(b) * k;
                Real qs = 0;
                for (int j = 0; j < k; ++j) qs += qv[j];
                Real* gz = logits->grad.data() + static_cast<std::size_t>(b) * k;
                for (int j = 0; j < k; ++j) gz[j] += g * (p[j] * qs - qv[j]);
            }
        });
    }
    return out;
}

TensorPtr conv2d(Tape& tape, const TensorPtr& x, const TensorPtr& weight, const TensorPtr& bias,
                 int kh, int kw, int pad) {
    if (x->shape.size() != 4) throw DimensionError("conv2d: input must be [B,H,W,C]");
    const int batch = x->shape[0], h = x->shape[1], w = x->shape[2], cin = x->shape[3];
    const int patch = kh * kw * cin;
    if (weight->shape.size() != 2 || weight->shape[1] != patch)
        throw DimensionError("conv2d: weight must be [Cout x kh*kw*Cin]");
    const int cout = weight->shape[0];
    if (bias->size() != cout) throw DimensionError("conv2d: bias length mismatch");
    const int oh = h + 2 * pad - kh + 1, ow = w + 2 * pad - kw + 1;
    if (oh <= 0 || ow <= 0) throw DimensionError("conv2d: empty output");
    const std::int64_t rows = static_cast<std::int64_t>(batch) * oh * ow;

    auto cols = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(rows) * patch,
                                                    Real(0));
    Real* cp = cols->data();
    for (int b = 0; b < batch; ++b)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                Real* dst =
                    cp + ((static_cast<std::size_t>(b) * oh + oy) * ow + ox) * patch;
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox + kx - pad;
                        if (ix < 0 || ix >= w) continue;
                        std::memcpy(dst + (ky * kw + kx) * cin,
                                    x->value.data() +
                                        ((static_cast<std::size_t>(b) * h + iy) * w + ix) * cin,
                                    sizeof(Real) * cin);
                    }
                }
            }

    auto out = Tensor::create({batch, oh, ow, cout}, track(tape, {x, weight, bias}));
    detail::gemm(false, true, static_cast<int>(rows), cout, patch, 1, cp, weight->value.data(),
                 0, out->value.data());
    for (std::int64_t r = 0; r < rows; ++r) {
        Real* row = out->value.data() + static_cast<std::size_t>(r) * cout;
        for (int j = 0; j < cout; ++j) row[j] += bias->value[j];
    }

    if (out->requires_grad) {
        tape.record([x, weight, bias, out, cols, batch, h, w, cin, kh, kw, pad, oh, ow, cout,
                     patch, rows]() {
            if (bias->requires_grad)
                for (std::int64_t r = 0; r < rows; ++r) {
                    const Real* g = out->grad.data() + static_cast<std::size_t>(r) * cout;
                    for (int j = 0; j < cout; ++j) bias->grad[j] += g[j];
                }
            if (weight->requires_grad)
                detail::gemm(true, false, cout, patch, static_cast<int>(rows), 1,
                             out->grad.data(), cols->data(), 1, weight->grad.data());
            if (x->requires_grad) {
                std::vector<Real> dcols(static_cast<std::size_t>(rows) * patch);
                detail::gemm(false, false, static_cast<int>(rows), patch, cout, 1,
                             out->grad.data(), weight->value.data(), 0, dcols.data());
                for (int b = 0; b < batch; ++b)
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox) {
                            const Real* src =
                                dcols.data() +
                                ((static_cast<std::size_t>(b) * oh + oy) * ow + ox) * patch;
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy + ky - pad;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = ox + kx - pad;
                                    if (ix < 0 || ix >= w) continue;
                                    Real* dst =
                                        x->grad.data() +
                                        ((static_cast<std::size_t>(b) * h + iy) * w + ix) * cin;
                                    const Real* s = src + (ky * kw + kx) * cin;
                                    for (int ci = 0; ci < cin; ++ci) dst[ci] += s[ci];
                                }
                            }
                        }
            }
        });
    }
    return out;
}

TensorPtr maxpool2(Tape& tape, const TensorPtr& x) {
    if (x->shape.size() != 4) throw DimensionError("maxpool2: input must be [B,H,W,C]");
    const int batch = x->shape[0], h = x->shape[1], w = x->shape[2], c = x->shape[3];
    if (h % 2 != 0 || w % 2 != 0) throw DimensionError("maxpool2: H and W must be even");
    const int oh = h / 2, ow = w / 2;
    auto out = Tensor::create({batch, oh, ow, c}, track(tape, {x}));
    auto arg = std::make_shared<std::vector<std::int32_t>>(out->value.size());
    for (int b = 0; b < batch; ++b)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                for (int ci = 0; ci < c; ++ci) {
                    Real best = -std::numeric_limits<Real>::infinity();
                    std::int64_t best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::int64_t idx =
                                ((static_cast<std::int64_t>(b) * h + 2 * oy + dy) * w + 2 * ox +
                                 dx) *
                                    c +
                                ci;
                            if (x->value[idx] > best) {
                                best = x->value[idx];
                                best_idx = idx;
                            }
                        }
                    const std::int64_t oidx =
                        ((static_cast<std::int64_t>(b) * oh + oy) * ow + ox) * c + ci;
                    out->value[oidx] = best;
                    (*arg)[oidx] = static_cast<std::int32_t>(best_idx);
                }
    if (out->requires_grad) {
        tape.record([x, out, arg]() {
            if (!x->requires_grad) return;
            for (std::int64_t i = 0; i < out->size(); ++i) x->grad[(*arg)[i]] += out->grad[i];
        });
    }
    return out;
}

TensorPtr affine_warp(Tape& tape, const TensorPtr& x, const TensorPtr& residual) {
    if (x->shape.size() != 4) throw DimensionError("affine_warp: input must be [B,H,W,C]");
    const int batch = x->shape[0], h = x->shape[1], w = x->shape[2], c = x->shape[3];
    if (residual->size() != static_cast<std::int64_t>(batch) * 6)
        throw DimensionError("affine_warp: residual must be [B x 6]");

    auto out = Tensor::create(x->shape, track(tape, {x, residual}));

    auto sample = [x, residual, out, batch, h, w, c](bool backward) {
        for (int b = 0; b < batch; ++b) {
            const Real* A = residual->value.data() + static_cast<std::size_t>(b) * 6;
            const Real m00 = Real(1) + A[0], m01 = A[1], m02 = A[2];
            const Real m10 = A[3], m11 = Real(1) + A[4], m12 = A[5];
            Real dA[6] = {0, 0, 0, 0, 0, 0};
            for (int y = 0; y < h; ++y) {
                const Real v = (Real(2) * y + Real(1)) / Real(h) - Real(1);
                for (int xo = 0; xo < w; ++xo) {
                    const Real u = (Real(2) * xo + Real(1)) / Real(w) - Real(1);
                    const Real sx = m00 * u + m01 * v + m02;
                    const Real sy = m10 * u + m11 * v + m12;
                    const Real fx = (sx + Real(1)) * Real(w) / Real(2) - Real(0.5);
                    const Real fy = (sy + Real(1)) * Real(h) / Real(2) - Real(0.5);
                    const int x0 = static_cast<int>(std::floor(fx));
                    const int y0 = static_cast<int>(std::floor(fy));
                    const Real wx = fx - x0, wy = fy - y0;
                    auto at = [&](int xi, int yi, int ci) -> Real {
                        if (xi < 0 || xi >= w || yi < 0 || yi >= h) return Real(0);
                        return x->value[((static_cast<std::size_t>(b) * h + yi) * w + xi) * c +
                                        ci];
                    };
                    const std::size_t obase =
                        ((static_cast<std::size_t>(b) * h + y) * w + xo) * c;
                    if (!backward) {
                        for (int ci = 0; ci < c; ++ci) {
                            const Real i00 = at(x0, y0, ci), i10 = at(x0 + 1, y0, ci);
                            const Real i01 = at(x0, y0 + 1, ci), i11 = at(x0 + 1, y0 + 1, ci);
                            out->value[obase + ci] = (Real(1) - wx) * (Real(1) - wy) * i00 +
                                                     wx * (Real(1) - wy) * i10 +
                                                     (Real(1) - wx) * wy * i01 + wx * wy * i11;
                        }
                    } else {
                        Real dfx = 0, dfy = 0;
                        for (int ci = 0; ci < c; ++ci) {
                            const Real g = out->grad[obase + ci];
                            if (g == Real(0)) continue;
                            const Real i00 = at(x0, y0, ci), i10 = at(x0 + 1, y0, ci);
                            const Real i01 = at(x0, y0 + 1, ci), i11 = at(x0 + 1, y0 + 1, ci);
                            dfx += g * ((Real(1) - wy) * (i10 - i00) + wy * (i11 - i01));
                            dfy += g * ((Real(1) - wx) * (i01 - i00) + wx * (i11 - i10));
                            if (x->requires_grad) {
                                auto scatter = [&](int xi, int yi, Real wgt) {
                                    if (xi < 0 || xi >= w || yi < 0 || yi >= h) return;
                                    x->grad[((static_cast<std::size_t>(b) * h + yi) * w + xi) *
                                                c +
                                            ci] += g * wgt;
                                };
                                scatter(x0, y0, (Real(1) - wx) * (Real(1) - wy));
                                scatter(x0 + 1, y0, wx * (Real(1) - wy));
                                scatter(x0, y0 + 1, (Real(1) - wx) * wy);
                                scatter(x0 + 1, y0 + 1, wx * wy);
                            }
                        }
                        const Real dsx = dfx * Real(w) / Real(2);
                        const Real dsy = dfy * Real(h) / Real(2);
                        dA[0] += dsx * u;
                        dA[1] += dsx * v;
                        dA[2] += dsx;
                        dA[3] += dsy * u;
                        dA[4] += dsy * v;
                        dA[5] += dsy;
                    }
                }
            }
            if (backward && residual->requires_grad) {
                Real* gr = residual->grad.data() + static_cast<std::size_t>(b) * 6;
                for (int j = 0; j < 6; ++j) gr[j] += dA[j];
            }
        }
    };

    sample(false);
    if (out->requires_grad) {
        tape.record([sample]() { sample(true); });
    }
    return out;
}

TensorPtr swd(Tape& tape, const TensorPtr& a, const TensorPtr& b, int n_proj, RngStream& rng) {
    if (a->shape.size() != 2 || b->shape.size() != 2)
        throw DimensionError("swd: inputs must be [n x d]");
    if (a->shape != b->shape) throw DimensionError("swd: set cardinality/dimension mismatch");
    if (n_proj <= 0) throw ConfigError("swd: n_proj must be positive");
    const int n = a->shape[0], d = a->shape[1];

    auto dirs = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(n_proj) * d);
    for (int p = 0; p < n_proj; ++p) {
        Real* u = dirs->data() + static_cast<std::size_t>(p) * d;
        Real norm2 = 0;
        for (int j = 0; j < d; ++j) {
            u[j] = rng.normal();
            norm2 += u[j] * u[j];
        }
        const Real norm = std::sqrt(norm2);
        if (norm > 0)
            for (int j = 0; j < d; ++j) u[j] /= norm;
        else
            u[0] = Real(1);
    }

    auto order_a = std::make_shared<std::vector<std::int32_t>>(static_cast<std::size_t>(n_proj) * n);
    auto order_b = std::make_shared<std::vector<std::int32_t>>(static_cast<std::size_t>(n_proj) * n);

    auto project = [&](const TensorPtr& t, const Real* u, std::vector<Real>& out_proj) {
        for (int i = 0; i < n; ++i) {
            const Real* row = t->value.data() + static_cast<std::size_t>(i) * d;
            Real acc = 0;
            for (int j = 0; j < d; ++j) acc += row[j] * u[j];
            out_proj[i] = acc;
        }
    };
    auto argsort = [&](const std::vector<Real>& vals, std::int32_t* idx) {
        std::iota(idx, idx + n, 0);
        std::sort(idx, idx + n, [&](std::int32_t i, std::int32_t j) {
            return vals[i] < vals[j] || (vals[i] == vals[j] && i < j);
        });
    };

    std::vector<Real> pa(n), pb(n);
    Real total = 0;
    for (int p = 0; p < n_proj; ++p) {
        const Real* u = dirs->data() + static_cast<std::size_t>(p) * d;
        project(a, u, pa);
        project(b, u, pb);
        std::int32_t* ia = order_a->data() + static_cast<std::size_t>(p) * n;
        std::int32_t* ib = order_b->data() + static_cast<std::size_t>(p) * n;
        argsort(pa, ia);
        argsort(pb, ib);
        for (int i = 0; i < n; ++i) total += std::fabs(pa[ia[i]] - pb[ib[i]]);
    }
    auto out = Tensor::create({1}, track(tape, {a, b}));
    out->value[0] = total / (Real(n_proj) * Real(n));

    if (out->requires_grad) {
        tape.record([a, b, out, dirs, order_a, order_b, n, d, n_proj]() {
            const Real g = out->grad[0] / (Real(n_proj) * Real(n));
            std::vector<Real> pa(n), pb(n);
            for (int p = 0; p < n_proj; ++p) {
                const Real* u = dirs->data() + static_cast<std::size_t>(p) * d;
                for (int i = 0; i < n; ++i) {
                    const Real* ra = a->value.data() + static_cast<std::size_t>(i) * d;
                    const Real* rb = b->value.data() + static_cast<std::size_t>(i) * d;
                    Real sa = 0, sb = 0;
                    for (int j = 0; j < d; ++j) {
                        sa += ra[j] * u[j];
                        sb += rb[j] * u[j];
                    }
                    pa[i] = sa;
                    pb[i] = sb;
                }
                const std::int32_t* ia = order_a->data() + static_cast<std::size_t>(p) * n;
                const std::int32_t* ib = order_b->data() + static_cast<std::size_t>(p) * n;
                for (int i = 0; i < n; ++i) {
                    const Real diff = pa[ia[i]] - pb[ib[i]];
                    const Real s = diff > 0 ? Real(1) : (diff < 0 ? Real(-1) : Real(0));
                    if (s == Real(0)) continue;
                    if (a->requires_grad) {
                        Real* ga = a->grad.data() + static_cast<std::size_t>(ia[i]) * d;
                        for (int j = 0; j < d; ++j) ga[j] += g * s * u[j];
                    }
                    if (b->requires_grad) {
                        Real* gb = b->grad.data() + static_cast<std::size_t>(ib[i]) * d;
                        for (int j = 0; j < d; ++j) gb[j] -= g * s * u[j];
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace ops
}  // namespace taug
