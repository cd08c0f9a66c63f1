#include "melseq/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#include "melseq/kernels.hpp"

namespace melseq::ad {

namespace {

using kern::active;

[[noreturn]] void shape_error(const char* op, const Node& a, const Node& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                                " vs " + b.shape_str() + ")");
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
    if (a->rows != b->rows || a->cols != b->cols) shape_error(op, *a, *b);
}

bool any_grad(std::initializer_list<const Var*> vs) {
    for (const Var* v : vs)
        if ((*v)->requires_grad) return true;
    return false;
}

}  // namespace

Var matmul(Tape& t, const Var& a, const Var& b, bool trans_a, bool trans_b) {
    const int m = trans_a ? a->cols : a->rows;
    const int ka = trans_a ? a->rows : a->cols;
    const int kb = trans_b ? b->cols : b->rows;
    const int n = trans_b ? b->rows : b->cols;
    if (ka != kb) shape_error("matmul: inner dimensions disagree", *a, *b);

    Var out = t.node(m, n, any_grad({&a, &b}));
    active().gemm(m, n, ka, 1.0, a->v.data(), a->cols, trans_a, b->v.data(), b->cols,
                  trans_b, 0.0, out->v.data(), out->cols);
    if (!out->requires_grad) return out;

    t.record([a, b, out, trans_a, trans_b, m, n, k = ka] {
        const double* dC = out->g.data();
        if (a->requires_grad) {
            if (!trans_a)
                active().gemm(m, k, n, 1.0, dC, n, false, b->v.data(), b->cols, !trans_b,
                              1.0, a->g.data(), a->cols);
            else
                active().gemm(k, m, n, 1.0, b->v.data(), b->cols, trans_b, dC, n, true,
                              1.0, a->g.data(), a->cols);
        }
        if (b->requires_grad) {
            if (!trans_b)
                active().gemm(k, n, m, 1.0, a->v.data(), a->cols, !trans_a, dC, n, false,
                              1.0, b->g.data(), b->cols);
            else
                active().gemm(n, k, m, 1.0, dC, n, true, a->v.data(), a->cols, trans_a,
                              1.0, b->g.data(), b->cols);
        }
    });
    return out;
}

Var affine(Tape& t, const Var& W, const Var& x, const Var& b) {
    if (W->cols != x->rows) shape_error("affine: W columns must match x rows", *W, *x);
    if (b->rows != W->rows || b->cols != 1) shape_error("affine: bad bias shape", *W, *b);
    const int m = W->rows, n = x->cols, k = W->cols;

    Var out = t.node(m, n, any_grad({&W, &x, &b}));
    active().gemm(m, n, k, 1.0, W->v.data(), W->cols, false, x->v.data(), x->cols, false,
                  0.0, out->v.data(), out->cols);
    for (int i = 0; i < m; ++i) {
        real bi = b->v[i];
        real* row = out->v.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += bi;
    }
    if (!out->requires_grad) return out;

    t.record([W, x, b, out, m, n, k] {
        const double* dC = out->g.data();
        if (W->requires_grad)
            active().gemm(m, k, n, 1.0, dC, n, false, x->v.data(), x->cols, true, 1.0,
                          W->g.data(), W->cols);
        if (x->requires_grad)
            active().gemm(k, n, m, 1.0, W->v.data(), W->cols, true, dC, n, false, 1.0,
                          x->g.data(), x->cols);
        if (b->requires_grad)
            for (int i = 0; i < m; ++i)
                b->g[i] += active().sum(dC + static_cast<std::size_t>(i) * n, n);
    });
    return out;
}

Var add(Tape& t, const Var& a, const Var& b) {
    require_same_shape("add", a, b);
    Var out = t.node(a->rows, a->cols, any_grad({&a, &b}));
    active().vadd(a->v.data(), b->v.data(), out->v.data(), out->size());
    if (out->requires_grad)
        t.record([a, b, out] {
            if (a->requires_grad) active().axpy(1.0, out->g.data(), a->g.data(), a->size());
            if (b->requires_grad) active().axpy(1.0, out->g.data(), b->g.data(), b->size());
        });
    return out;
}

Var sub(Tape& t, const Var& a, const Var& b) {
    require_same_shape("sub", a, b);
    Var out = t.node(a->rows, a->cols, any_grad({&a, &b}));
    active().vsub(a->v.data(), b->v.data(), out->v.data(), out->size());
    if (out->requires_grad)
        t.record([a, b, out] {
            if (a->requires_grad) active().axpy(1.0, out->g.data(), a->g.data(), a->size());
            if (b->requires_grad) active().axpy(-1.0, out->g.data(), b->g.data(), b->size());
        });
    return out;
}

Var mul(Tape& t, const Var& a, const Var& b) {
    require_same_shape("mul", a, b);
    Var out = t.node(a->rows, a->cols, any_grad({&a, &b}));
    active().vmul(a->v.data(), b->v.data(), out->v.data(), out->size());
    if (out->requires_grad)
        t.record([a, b, out] {
            const std::size_t n = out->size();
            if (a->requires_grad)
                for (std::size_t i = 0; i < n; ++i) a->g[i] += out->g[i] * b->v[i];
            if (b->requires_grad)
                for (std::size_t i = 0; i < n; ++i) b->g[i] += out->g[i] * a->v[i];
        });
    return out;
}

Var add_const(Tape& t, const Var& a, const Mat& c) {
    if (a->rows != c.rows || a->cols != c.cols)
        throw std::invalid_argument("add_const: shape mismatch (" + a->shape_str() + " vs " +
                                    c.shape_str() + ")");
    Var out = t.node(a->rows, a->cols, a->requires_grad);
    active().vadd(a->v.data(), c.v.data(), out->v.data(), out->size());
    if (out->requires_grad)
        t.record([a, out] { active().axpy(1.0, out->g.data(), a->g.data(), a->size()); });
    return out;
}

Var mul_const(Tape& t, const Var& a, const Mat& c) {
    if (a->rows != c.rows || a->cols != c.cols)
        throw std::invalid_argument("mul_const: shape mismatch (" + a->shape_str() + " vs " +
                                    c.shape_str() + ")");
    Var out = t.node(a->rows, a->cols, a->requires_grad);
    active().vmul(a->v.data(), c.v.data(), out->v.data(), out->size());
    if (out->requires_grad)
        t.record([a, out, c] {
            const std::size_t n = out->size();
            for (std::size_t i = 0; i < n; ++i) a->g[i] += out->g[i] * c.v[i];
        });
    return out;
}

Var scale(Tape& t, const Var& a, real s) {
    Var out = t.node(a->rows, a->cols, a->requires_grad);
    out->v = a->v;
    active().vscale(s, out->v.data(), out->size());
    if (out->requires_grad)
        t.record([a, out, s] { active().axpy(s, out->g.data(), a->g.data(), a->size()); });
    return out;
}

Var add_scalar(Tape& t, const Var& a, real s) {
    Var out = t.node(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->v[i] = a->v[i] + s;
    if (out->requires_grad)
        t.record([a, out] { active().axpy(1.0, out->g.data(), a->g.data(), a->size()); });
    return out;
}

namespace {

template <class Fwd, class Dfn>
Var unary(Tape& t, const Var& a, Fwd fwd, Dfn dval) {
    Var out = t.node(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->v[i] = fwd(a->v[i]);
    if (out->requires_grad)
        t.record([a, out, dval] {
            for (std::size_t i = 0; i < a->size(); ++i)
                a->g[i] += out->g[i] * dval(a->v[i], out->v[i]);
        });
    return out;
}

}  // namespace

Var tanh_op(Tape& t, const Var& a) {
    return unary(t, a, [](real x) { return std::tanh(x); },
                 [](real, real y) { return 1.0 - y * y; });
}

Var sigmoid(Tape& t, const Var& a) {
    return unary(t, a,
                 [](real x) {
                     return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                   : std::exp(x) / (1.0 + std::exp(x));
                 },
                 [](real, real y) { return y * (1.0 - y); });
}

Var relu(Tape& t, const Var& a) {
    return unary(t, a, [](real x) { return x > 0 ? x : 0.0; },
                 [](real x, real) { return x > 0 ? 1.0 : 0.0; });
}

Var exp_op(Tape& t, const Var& a) {
    return unary(t, a, [](real x) { return std::exp(x); }, [](real, real y) { return y; });
}

Var transpose(Tape& t, const Var& a) {
    Var out = t.node(a->cols, a->rows, a->requires_grad);
    for (int i = 0; i < a->rows; ++i)
        for (int j = 0; j < a->cols; ++j) out->at(j, i) = a->at(i, j);
    if (out->requires_grad)
        t.record([a, out] {
            for (int i = 0; i < a->rows; ++i)
                for (int j = 0; j < a->cols; ++j)
                    a->g[static_cast<std::size_t>(i) * a->cols + j] +=
                        out->g[static_cast<std::size_t>(j) * out->cols + i];
        });
    return out;
}

Var concat_rows(Tape& t, const Var& a, const Var& b) {
    if (a->cols != b->cols) shape_error("concat_rows: column counts differ", *a, *b);
    Var out = t.node(a->rows + b->rows, a->cols, any_grad({&a, &b}));
    std::copy(a->v.begin(), a->v.end(), out->v.begin());
    std::copy(b->v.begin(), b->v.end(), out->v.begin() + a->v.size());
    if (out->requires_grad)
        t.record([a, b, out] {
            if (a->requires_grad) active().axpy(1.0, out->g.data(), a->g.data(), a->size());
            if (b->requires_grad)
                active().axpy(1.0, out->g.data() + a->size(), b->g.data(), b->size());
        });
    return out;
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const int rows = parts[0]->rows;
    int cols = 0;
    bool rg = false;
    for (const Var& p : parts) {
        if (p->rows != rows) shape_error("concat_cols: row counts differ", *parts[0], *p);
        cols += p->cols;
        rg = rg || p->requires_grad;
    }
    Var out = t.node(rows, cols, rg);
    int at = 0;
    for (const Var& p : parts) {
        for (int i = 0; i < rows; ++i)
            std::copy(p->v.begin() + static_cast<std::size_t>(i) * p->cols,
                      p->v.begin() + static_cast<std::size_t>(i + 1) * p->cols,
                      out->v.begin() + static_cast<std::size_t>(i) * cols + at);
        at += p->cols;
    }
    if (rg) {
        std::vector<Var> held(parts.begin(), parts.end());
        t.record([held = std::move(held), out, rows, cols] {
            int at = 0;
            for (const Var& p : held) {
                if (p->requires_grad)
                    for (int i = 0; i < rows; ++i)
                        for (int j = 0; j < p->cols; ++j)
                            p->g[static_cast<std::size_t>(i) * p->cols + j] +=
                                out->g[static_cast<std::size_t>(i) * cols + at + j];
                at += p->cols;
            }
        });
    }
    return out;
}

Var col(Tape& t, const Var& a, int j) {
    if (j < 0 || j >= a->cols)
        throw std::invalid_argument("col: index " + std::to_string(j) + " out of range for " +
                                    a->shape_str());
    Var out = t.node(a->rows, 1, a->requires_grad);
    for (int i = 0; i < a->rows; ++i) out->v[i] = a->at(i, j);
    if (out->requires_grad)
        t.record([a, out, j] {
            for (int i = 0; i < a->rows; ++i)
                a->g[static_cast<std::size_t>(i) * a->cols + j] += out->g[i];
        });
    return out;
}

Var slice_rows(Tape& t, const Var& a, int r0, int r1) {
    if (r0 < 0 || r1 > a->rows || r0 >= r1)
        throw std::invalid_argument("slice_rows: bad range [" + std::to_string(r0) + "," +
                                    std::to_string(r1) + ") for " + a->shape_str());
    Var out = t.node(r1 - r0, a->cols, a->requires_grad);
    std::copy(a->v.begin() + static_cast<std::size_t>(r0) * a->cols,
              a->v.begin() + static_cast<std::size_t>(r1) * a->cols, out->v.begin());
    if (out->requires_grad)
        t.record([a, out, r0] {
            active().axpy(1.0, out->g.data(),
                          a->g.data() + static_cast<std::size_t>(r0) * a->cols, out->size());
        });
    return out;
}

Var softmax_rows(Tape& t, const Var& x, real scale) {
    if (!(scale > 0)) throw std::invalid_argument("softmax_rows: scale must be positive");
    Var out = t.node(x->rows, x->cols, x->requires_grad);
    const int n = x->cols;
    for (int i = 0; i < x->rows; ++i) {
        const real* xr = x->v.data() + static_cast<std::size_t>(i) * n;
        real* yr = out->v.data() + static_cast<std::size_t>(i) * n;
        real mx = xr[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
        real z = 0.0;
        for (int j = 0; j < n; ++j) {
            yr[j] = std::exp((xr[j] - mx) / scale);
            z += yr[j];
        }
        for (int j = 0; j < n; ++j) yr[j] /= z;
    }
    if (out->requires_grad)
        t.record([x, out, scale, n] {
            for (int i = 0; i < x->rows; ++i) {
                const real* y = out->v.data() + static_cast<std::size_t>(i) * n;
                const real* dy = out->g.data() + static_cast<std::size_t>(i) * n;
                real s = active().dot(y, dy, n);
                real* dx = x->g.data() + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - s) / scale;
            }
        });
    return out;
}

Var dropout(Tape& t, const Var& a, real rate, Rng& rng) {
    if (rate <= 0.0) return a;
    if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
    Mat mask(a->rows, a->cols);
    const real keep = 1.0 - rate;
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask.v[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    return mul_const(t, a, mask);
}

Var embedding_cols(Tape& t, const Var& table, std::span<const int> ids) {
    const int d = table->cols;
    Var out = t.node(d, static_cast<int>(ids.size()), table->requires_grad);
    for (std::size_t j = 0; j < ids.size(); ++j) {
        int id = ids[j];
        if (id < 0 || id >= table->rows)
            throw std::invalid_argument("embedding_cols: id " + std::to_string(id) +
                                        " out of range for vocab " + std::to_string(table->rows));
        for (int i = 0; i < d; ++i) out->at(i, static_cast<int>(j)) = table->at(id, i);
    }
    if (out->requires_grad) {
        std::vector<int> held(ids.begin(), ids.end());
        t.record([table, out, held = std::move(held), d] {
            for (std::size_t j = 0; j < held.size(); ++j)
                for (int i = 0; i < d; ++i)
                    table->g[static_cast<std::size_t>(held[j]) * d + i] +=
                        out->g[static_cast<std::size_t>(i) * out->cols + j];
        });
    }
    return out;
}

Var sum_all(Tape& t, const Var& a) {
    Var out = t.node(1, 1, a->requires_grad);
    out->v[0] = kern::active().sum(a->v.data(), a->size());
    if (out->requires_grad)
        t.record([a, out] {
            real g = out->g[0];
            for (std::size_t i = 0; i < a->size(); ++i) a->g[i] += g;
        });
    return out;
}

Var masked_sq_err_sum(Tape& t, const Var& pred, const Mat& target, const Mat& mask) {
    if (pred->rows != target.rows || pred->cols != target.cols)
        throw std::invalid_argument("masked_sq_err_sum: shape mismatch (" + pred->shape_str() +
                                    " vs " + target.shape_str() + ")");
    Var out = t.node(1, 1, pred->requires_grad);
    real acc = 0.0;
    for (std::size_t i = 0; i < pred->size(); ++i) {
        real e = pred->v[i] - target.v[i];
        acc += mask.v[i] * e * e;
    }
    out->v[0] = acc;
    if (out->requires_grad)
        t.record([pred, out, target, mask] {
            real g = out->g[0];
            for (std::size_t i = 0; i < pred->size(); ++i)
                pred->g[i] += g * 2.0 * mask.v[i] * (pred->v[i] - target.v[i]);
        });
    return out;
}

Var bce_logits_sum(Tape& t, const Var& logits, const Mat& targets, const Mat& mask,
                   real pos_weight) {
    if (logits->rows != targets.rows || logits->cols != targets.cols)
        throw std::invalid_argument("bce_logits_sum: shape mismatch (" + logits->shape_str() +
                                    " vs " + targets.shape_str() + ")");
    auto softplus_neg = [](real z) {  // log(1 + exp(-z)), stable
        return z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    };
    Var out = t.node(1, 1, logits->requires_grad);
    real acc = 0.0;
    for (std::size_t i = 0; i < logits->size(); ++i) {
        real z = logits->v[i], y = targets.v[i];
        acc += mask.v[i] * (pos_weight * y * softplus_neg(z) + (1.0 - y) * (z + softplus_neg(z)));
    }
    out->v[0] = acc;
    if (out->requires_grad)
        t.record([logits, out, targets, mask, pos_weight] {
            real g = out->g[0];
            for (std::size_t i = 0; i < logits->size(); ++i) {
                real z = logits->v[i], y = targets.v[i];
                real s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
                logits->g[i] += g * mask.v[i] * (pos_weight * y * (s - 1.0) + (1.0 - y) * s);
            }
        });
    return out;
}

Var dot_const_sum(Tape& t, const Var& a, const Mat& w) {
    if (a->rows != w.rows || a->cols != w.cols)
        throw std::invalid_argument("dot_const_sum: shape mismatch (" + a->shape_str() + " vs " +
                                    w.shape_str() + ")");
    Var out = t.node(1, 1, a->requires_grad);
    out->v[0] = kern::active().dot(a->v.data(), w.v.data(), a->size());
    if (out->requires_grad)
        t.record([a, out, w] { kern::active().axpy(out->g[0], w.v.data(), a->g.data(), a->size()); });
    return out;
}

Var gru_cell(Tape& t, const Var& x, const Var& h_prev, const GruParams& p) {
    const int d = h_prev->rows;
    Var x_cat = concat_rows(t, x, h_prev);
    Var zr = sigmoid(t, affine(t, p.w_zr, x_cat, p.b_zr));
    Var z = slice_rows(t, zr, 0, d);
    Var r = slice_rows(t, zr, d, 2 * d);
    Var h_cand = tanh_op(t, affine(t, p.w_h, concat_rows(t, x, mul(t, r, h_prev)), p.b_h));
    Var keep = add_scalar(t, scale(t, z, -1.0), 1.0);  // 1 - z
    return add(t, mul(t, keep, h_prev), mul(t, z, h_cand));
}

}  // namespace melseq::ad
