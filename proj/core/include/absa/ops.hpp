#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "absa/error.hpp"
#include "absa/rng.hpp"
#include "absa/tensor.hpp"

namespace absa {

namespace detail {

template <typename Real, typename Fn>
void record_if(TapeT<Real>& tape, TensorT<Real>& out, bool requires_grad, Fn&& fn) {
    if (!requires_grad) return;
    out.set_requires_grad(true);
    out.mark_on_tape(&tape, tape.record(out, std::forward<Fn>(fn)));
}

// Right-aligned numpy broadcast of two shapes.
inline Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        std::size_t ea = i < a.size() ? a[a.size() - 1 - i] : 1;
        std::size_t eb = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (ea != eb && ea != 1 && eb != 1) {
            throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                             " are not broadcastable");
        }
        out[rank - 1 - i] = std::max(ea, eb);
    }
    return out;
}

// Strides of `s` aligned into `out`, 0 on broadcast dimensions.
inline std::vector<std::size_t> broadcast_strides(const Shape& out, const Shape& s) {
    std::vector<std::size_t> native = row_major_strides(s);
    std::vector<std::size_t> strides(out.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::size_t out_dim = out.size() - 1 - i;
        std::size_t s_dim = s.size() - 1 - i;
        strides[out_dim] = (s[s_dim] == 1 && out[out_dim] != 1) ? 0 : native[s_dim];
    }
    return strides;
}

// Walks every element of `out_shape`, handing (out_flat, a_flat, b_flat)
// to `f` with the two inputs following their broadcast strides.
template <typename F>
void for_each_broadcast(const Shape& out_shape, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
    std::size_t total = shape_size(out_shape);
    std::size_t rank = out_shape.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t o = 0; o < total; ++o) {
        f(o, ia, ib);
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < out_shape[d]) break;
            idx[d] = 0;
            ia -= sa[d] * out_shape[d];
            ib -= sb[d] * out_shape[d];
        }
    }
}

// C[m,n] += A[m,k] B[k,n]
template <typename Real>
void gemm_acc(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const Real* a_row = a + i * k;
        Real* c_row = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            Real a_ip = a_row[p];
            const Real* b_row = b + p * n;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
        }
    }
}

// C[m,n] += A^T B with A stored [k,m], B stored [k,n]
template <typename Real>
void gemm_at_b_acc(const Real* a, const Real* b, Real* c, std::size_t k, std::size_t m, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const Real* a_row = a + p * m;
        const Real* b_row = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            Real a_pi = a_row[i];
            Real* c_row = c + i * n;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += a_pi * b_row[j];
        }
    }
}

// C[m,k] += A B^T with A stored [m,n], B stored [k,n]
template <typename Real>
void gemm_a_bt_acc(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const Real* a_row = a + i * n;
        Real* c_row = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const Real* b_row = b + p * n;
            Real dot = 0;
            for (std::size_t j = 0; j < n; ++j) dot += a_row[j] * b_row[j];
            c_row[p] += dot;
        }
    }
}

// Reorders `src` (laid out as `shape`) into the axis order `perm`.
template <typename Real>
std::vector<Real> permute_copy(const std::vector<Real>& src, const Shape& shape,
                               const std::vector<std::size_t>& perm) {
    Shape out_shape(perm.size());
    for (std::size_t q = 0; q < perm.size(); ++q) out_shape[q] = shape[perm[q]];
    std::vector<std::size_t> out_strides = row_major_strides(out_shape);
    // Walking src in row-major order, dim d of src advances the destination
    // by the stride of its position in the permuted layout.
    std::vector<std::size_t> contrib(shape.size());
    for (std::size_t q = 0; q < perm.size(); ++q) contrib[perm[q]] = out_strides[q];

    std::vector<Real> dst(src.size());
    std::vector<std::size_t> idx(shape.size(), 0);
    std::size_t d_flat = 0;
    for (std::size_t s_flat = 0; s_flat < src.size(); ++s_flat) {
        dst[d_flat] = src[s_flat];
        for (std::size_t d = shape.size(); d-- > 0;) {
            ++idx[d];
            d_flat += contrib[d];
            if (idx[d] < shape[d]) break;
            idx[d] = 0;
            d_flat -= contrib[d] * shape[d];
        }
    }
    return dst;
}

template <typename Real>
void check_rank2(const TensorT<Real>& t, const char* op) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " + shape_str(t.shape()));
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and structural operations
// ---------------------------------------------------------------------------

// Broadcasting elementwise sum.
template <typename Real>
TensorT<Real> add(TapeT<Real>& tape, TensorT<Real> a, TensorT<Real> b) {
    Shape out_shape = detail::broadcast_shape(a.shape(), b.shape(), "add");
    auto sa = detail::broadcast_strides(out_shape, a.shape());
    auto sb = detail::broadcast_strides(out_shape, b.shape());

    std::vector<Real> vals(shape_size(out_shape));
    const auto& av = a.values();
    const auto& bv = b.values();
    if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = av[i] + bv[i];
    } else {
        detail::for_each_broadcast(out_shape, sa, sb,
                                   [&](std::size_t o, std::size_t ia, std::size_t ib) { vals[o] = av[ia] + bv[ib]; });
    }

    TensorT<Real> out(out_shape, std::move(vals));
    detail::record_if(tape, out, a.requires_grad() || b.requires_grad(),
                      [out, a, b, out_shape, sa, sb]() mutable {
                          if (!out.grad_allocated()) return;
                          const auto& go = out.grad_view();
                          Real* ga = a.requires_grad() ? a.grad().data() : nullptr;
                          Real* gb = b.requires_grad() ? b.grad().data() : nullptr;
                          detail::for_each_broadcast(out_shape, sa, sb,
                                                     [&](std::size_t o, std::size_t ia, std::size_t ib) {
                                                         if (ga) ga[ia] += go[o];
                                                         if (gb) gb[ib] += go[o];
                                                     });
                      });
    return out;
}

template <typename Real>
TensorT<Real> scale(TapeT<Real>& tape, TensorT<Real> x, Real factor) {
    std::vector<Real> vals(x.size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = factor * xv[i];

    TensorT<Real> out(x.shape(), std::move(vals));
    detail::record_if(tape, out, x.requires_grad(), [out, x, factor]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += factor * go[i];
    });
    return out;
}

// Same data, new extents (sizes must agree).
template <typename Real>
TensorT<Real> reshape(TapeT<Real>& tape, TensorT<Real> x, Shape new_shape) {
    if (shape_size(new_shape) != x.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
    }
    TensorT<Real> out(std::move(new_shape), x.values());
    detail::record_if(tape, out, x.requires_grad(), [out, x]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    });
    return out;
}

// Axis reordering; `perm` is a permutation of 0..rank-1.
template <typename Real>
TensorT<Real> transpose(TapeT<Real>& tape, TensorT<Real> x, std::vector<std::size_t> perm) {
    if (perm.size() != x.rank()) {
        throw ShapeError("transpose: permutation size " + std::to_string(perm.size()) +
                         " does not match rank of " + shape_str(x.shape()));
    }
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t p : perm) {
        if (p >= perm.size() || seen[p]) throw ShapeError("transpose: invalid permutation");
        seen[p] = true;
    }

    Shape out_shape(perm.size());
    for (std::size_t q = 0; q < perm.size(); ++q) out_shape[q] = x.shape()[perm[q]];
    TensorT<Real> out(out_shape, detail::permute_copy(x.values(), x.shape(), perm));

    std::vector<std::size_t> inverse(perm.size());
    for (std::size_t q = 0; q < perm.size(); ++q) inverse[perm[q]] = q;

    detail::record_if(tape, out, x.requires_grad(), [out, x, out_shape, inverse]() mutable {
        if (!out.grad_allocated()) return;
        std::vector<Real> gx_inc = detail::permute_copy(out.grad_view(), out_shape, inverse);
        auto& gx = x.grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gx_inc[i];
    });
    return out;
}

// Removes `axis` by taking the slice at `index`.
template <typename Real>
TensorT<Real> select(TapeT<Real>& tape, TensorT<Real> x, std::size_t axis, std::size_t index) {
    const Shape& shape = x.shape();
    if (axis >= shape.size()) throw ShapeError("select: axis out of range for " + shape_str(shape));
    if (index >= shape[axis]) {
        throw IndexError("select: index " + std::to_string(index) + " out of range [0," +
                         std::to_string(shape[axis]) + ")");
    }
    if (shape.size() < 2) throw ShapeError("select: cannot drop the only axis of " + shape_str(shape));

    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
    for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
    std::size_t extent = shape[axis];

    Shape out_shape;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (d != axis) out_shape.push_back(shape[d]);
    }

    std::vector<Real> vals(outer * inner);
    const auto& xv = x.values();
    for (std::size_t o = 0; o < outer; ++o) {
        const Real* src = xv.data() + (o * extent + index) * inner;
        std::copy(src, src + inner, vals.data() + o * inner);
    }

    TensorT<Real> out(std::move(out_shape), std::move(vals));
    detail::record_if(tape, out, x.requires_grad(), [out, x, outer, inner, extent, index]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        auto& gx = x.grad();
        for (std::size_t o = 0; o < outer; ++o) {
            Real* dst = gx.data() + (o * extent + index) * inner;
            const Real* src = go.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    });
    return out;
}

// Row gather from an embedding table: table[V,d] x ids[N] -> [N,d].
template <typename Real>
TensorT<Real> embedding(TapeT<Real>& tape, TensorT<Real> table, const std::vector<int>& ids) {
    detail::check_rank2(table, "embedding");
    std::size_t vocab = table.shape()[0];
    std::size_t dim = table.shape()[1];
    if (ids.empty()) throw UsageError("embedding: empty id list");

    std::vector<Real> vals(ids.size() * dim);
    const auto& tv = table.values();
    for (std::size_t r = 0; r < ids.size(); ++r) {
        int id = ids[r];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
            throw IndexError("embedding: id " + std::to_string(id) + " out of range [0," +
                             std::to_string(vocab) + ")");
        }
        std::copy(tv.data() + static_cast<std::size_t>(id) * dim,
                  tv.data() + (static_cast<std::size_t>(id) + 1) * dim, vals.data() + r * dim);
    }

    TensorT<Real> out({ids.size(), dim}, std::move(vals));
    detail::record_if(tape, out, table.requires_grad(), [out, table, ids, dim]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        auto& gt = table.grad();
        for (std::size_t r = 0; r < ids.size(); ++r) {
            Real* dst = gt.data() + static_cast<std::size_t>(ids[r]) * dim;
            const Real* src = go.data() + r * dim;
            for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
        }
    });
    return out;
}

// Exact GELU, x * Phi(x).
template <typename Real>
TensorT<Real> gelu(TapeT<Real>& tape, TensorT<Real> x) {
    const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
    const Real inv_sqrt_2pi = Real(1) / std::sqrt(Real(2) * std::numbers::pi_v<Real>);

    std::vector<Real> vals(x.size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        Real cdf = Real(0.5) * (Real(1) + std::erf(xv[i] * inv_sqrt2));
        vals[i] = xv[i] * cdf;
    }

    TensorT<Real> out(x.shape(), std::move(vals));
    detail::record_if(tape, out, x.requires_grad(), [out, x, inv_sqrt2, inv_sqrt_2pi]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        const auto& xv = x.values();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < go.size(); ++i) {
            Real cdf = Real(0.5) * (Real(1) + std::erf(xv[i] * inv_sqrt2));
            Real pdf = inv_sqrt_2pi * std::exp(Real(-0.5) * xv[i] * xv[i]);
            gx[i] += go[i] * (cdf + xv[i] * pdf);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> matmul(TapeT<Real>& tape, TensorT<Real> a, TensorT<Real> b) {
    detail::check_rank2(a, "matmul");
    detail::check_rank2(b, "matmul");
    if (a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];

    std::vector<Real> vals(m * n, Real(0));
    detail::gemm_acc(a.values().data(), b.values().data(), vals.data(), m, k, n);

    TensorT<Real> out({m, n}, std::move(vals));
    detail::record_if(tape, out, a.requires_grad() || b.requires_grad(), [out, a, b, m, k, n]() mutable {
        if (!out.grad_allocated()) return;
        const Real* go = out.grad_view().data();
        if (a.requires_grad()) {
            detail::gemm_a_bt_acc(go, b.values().data(), a.grad().data(), m, n, k);
        }
        if (b.requires_grad()) {
            detail::gemm_at_b_acc(a.values().data(), go, b.grad().data(), m, k, n);
        }
    });
    return out;
}

// Batched matmul over identical leading dimensions: [...,m,k] x [...,k,n].
template <typename Real>
TensorT<Real> bmm(TapeT<Real>& tape, TensorT<Real> a, TensorT<Real> b) {
    if (a.rank() < 3 || b.rank() != a.rank()) {
        throw ShapeError("bmm: expected equal ranks >= 3, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    std::size_t rank = a.rank();
    std::size_t batches = 1;
    for (std::size_t d = 0; d + 2 < rank; ++d) {
        if (a.shape()[d] != b.shape()[d]) {
            throw ShapeError("bmm: leading extents differ: " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
        }
        batches *= a.shape()[d];
    }
    std::size_t m = a.shape()[rank - 2], k = a.shape()[rank - 1];
    if (b.shape()[rank - 2] != k) {
        throw ShapeError("bmm: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    std::size_t n = b.shape()[rank - 1];

    Shape out_shape(a.shape().begin(), a.shape().end() - 2);
    out_shape.push_back(m);
    out_shape.push_back(n);

    std::vector<Real> vals(batches * m * n, Real(0));
    for (std::size_t t = 0; t < batches; ++t) {
        detail::gemm_acc(a.values().data() + t * m * k, b.values().data() + t * k * n,
                         vals.data() + t * m * n, m, k, n);
    }

    TensorT<Real> out(std::move(out_shape), std::move(vals));
    detail::record_if(tape, out, a.requires_grad() || b.requires_grad(),
                      [out, a, b, batches, m, k, n]() mutable {
                          if (!out.grad_allocated()) return;
                          const Real* go = out.grad_view().data();
                          for (std::size_t t = 0; t < batches; ++t) {
                              const Real* go_t = go + t * m * n;
                              if (a.requires_grad()) {
                                  detail::gemm_a_bt_acc(go_t, b.values().data() + t * k * n,
                                                        a.grad().data() + t * m * k, m, n, k);
                              }
                              if (b.requires_grad()) {
                                  detail::gemm_at_b_acc(a.values().data() + t * m * k, go_t,
                                                        b.grad().data() + t * k * n, m, k, n);
                              }
                          }
                      });
    return out;
}

// ---------------------------------------------------------------------------
// Normalization, regularization, loss
// ---------------------------------------------------------------------------

// Numerically stable softmax along `axis` (negative counts from the back).
template <typename Real>
TensorT<Real> softmax(TapeT<Real>& tape, TensorT<Real> x, int axis = -1) {
    int rank = static_cast<int>(x.rank());
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) {
        throw ShapeError("softmax: axis out of range for " + shape_str(x.shape()));
    }

    std::size_t outer = 1, inner = 1;
    std::size_t extent = x.shape()[static_cast<std::size_t>(axis)];
    for (int d = 0; d < axis; ++d) outer *= x.shape()[static_cast<std::size_t>(d)];
    for (int d = axis + 1; d < rank; ++d) inner *= x.shape()[static_cast<std::size_t>(d)];

    std::vector<Real> vals(x.size());
    const auto& xv = x.values();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            std::size_t base = o * extent * inner + in;
            Real max_v = xv[base];
            for (std::size_t e = 1; e < extent; ++e) max_v = std::max(max_v, xv[base + e * inner]);
            Real sum = 0;
            for (std::size_t e = 0; e < extent; ++e) {
                Real ev = std::exp(xv[base + e * inner] - max_v);
                vals[base + e * inner] = ev;
                sum += ev;
            }
            Real inv = Real(1) / sum;
            for (std::size_t e = 0; e < extent; ++e) vals[base + e * inner] *= inv;
        }
    }

    TensorT<Real> out(x.shape(), std::move(vals));
    detail::record_if(tape, out, x.requires_grad(), [out, x, outer, inner, extent]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        const auto& y = out.values();
        auto& gx = x.grad();
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                std::size_t base = o * extent * inner + in;
                Real dot = 0;
                for (std::size_t e = 0; e < extent; ++e) {
                    std::size_t i = base + e * inner;
                    dot += go[i] * y[i];
                }
                for (std::size_t e = 0; e < extent; ++e) {
                    std::size_t i = base + e * inner;
                    gx[i] += y[i] * (go[i] - dot);
                }
            }
        }
    });
    return out;
}

// Per-row normalization over the last axis, then affine gamma/beta.
// Population variance; `eps` keeps the zero-variance row defined.
template <typename Real>
TensorT<Real> layer_norm(TapeT<Real>& tape, TensorT<Real> x, TensorT<Real> gamma,
                         TensorT<Real> beta, Real eps) {
    if (eps <= Real(0)) throw ConfigError("layer_norm: eps must be > 0");
    std::size_t dim = x.shape().back();
    if (gamma.shape() != Shape{dim} || beta.shape() != Shape{dim}) {
        throw ShapeError("layer_norm: gamma/beta must have shape [" + std::to_string(dim) + "]");
    }
    std::size_t rows = x.size() / dim;

    std::vector<Real> vals(x.size());
    auto xhat = std::make_shared<std::vector<Real>>(x.size());
    auto inv_std = std::make_shared<std::vector<Real>>(rows);

    const auto& xv = x.values();
    const auto& gv = gamma.values();
    const auto& bv = beta.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const Real* row = xv.data() + r * dim;
        Real mean = 0;
        for (std::size_t j = 0; j < dim; ++j) mean += row[j];
        mean /= Real(dim);
        Real var = 0;
        for (std::size_t j = 0; j < dim; ++j) {
            Real d = row[j] - mean;
            var += d * d;
        }
        var /= Real(dim);
        Real inv = Real(1) / std::sqrt(var + eps);
        (*inv_std)[r] = inv;
        for (std::size_t j = 0; j < dim; ++j) {
            Real xh = (row[j] - mean) * inv;
            (*xhat)[r * dim + j] = xh;
            vals[r * dim + j] = gv[j] * xh + bv[j];
        }
    }

    TensorT<Real> out(x.shape(), std::move(vals));
    detail::record_if(tape, out, x.requires_grad() || gamma.requires_grad() || beta.requires_grad(),
                      [out, x, gamma, beta, xhat, inv_std, rows, dim]() mutable {
                          if (!out.grad_allocated()) return;
                          const auto& go = out.grad_view();
                          const auto& gv = gamma.values();
                          for (std::size_t r = 0; r < rows; ++r) {
                              const Real* dy = go.data() + r * dim;
                              const Real* xh = xhat->data() + r * dim;
                              if (x.requires_grad()) {
                                  // dx = inv/d * (d*g.dy - sum(g.dy) - xhat * sum(g.dy*xhat))
                                  Real sum_gdy = 0, sum_gdy_xh = 0;
                                  for (std::size_t j = 0; j < dim; ++j) {
                                      Real gdy = gv[j] * dy[j];
                                      sum_gdy += gdy;
                                      sum_gdy_xh += gdy * xh[j];
                                  }
                                  Real inv = (*inv_std)[r] / Real(dim);
                                  Real* gx = x.grad().data() + r * dim;
                                  for (std::size_t j = 0; j < dim; ++j) {
                                      Real gdy = gv[j] * dy[j];
                                      gx[j] += inv * (Real(dim) * gdy - sum_gdy - xh[j] * sum_gdy_xh);
                                  }
                              }
                              if (gamma.requires_grad()) {
                                  Real* gg = gamma.grad().data();
                                  for (std::size_t j = 0; j < dim; ++j) gg[j] += dy[j] * xh[j];
                              }
                              if (beta.requires_grad()) {
                                  Real* gb = beta.grad().data();
                                  for (std::size_t j = 0; j < dim; ++j) gb[j] += dy[j];
                              }
                          }
                      });
    return out;
}

// Inverted dropout: kept units are scaled by 1/(1-p) so the expectation is
// unchanged. Identity when not training or p == 0.
template <typename Real>
TensorT<Real> dropout(TapeT<Real>& tape, TensorT<Real> x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw ConfigError("dropout: probability " + std::to_string(p) + " outside [0,1)");
    }
    if (!training || p == 0.0) return x;

    Real keep_scale = Real(1.0 / (1.0 - p));
    auto mask = std::make_shared<std::vector<Real>>(x.size());
    std::vector<Real> vals(x.size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        Real m = rng.next_uniform() >= p ? keep_scale : Real(0);
        (*mask)[i] = m;
        vals[i] = xv[i] * m;
    }

    TensorT<Real> out(x.shape(), std::move(vals));
    detail::record_if(tape, out, x.requires_grad(), [out, x, mask]() mutable {
        if (!out.grad_allocated()) return;
        const auto& go = out.grad_view();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (*mask)[i];
    });
    return out;
}

// Mean negative log-likelihood over scored rows of logits[N,C]. Rows with
// score_mask == 0 contribute nothing; with no scored rows the loss is 0.
template <typename Real>
TensorT<Real> cross_entropy(TapeT<Real>& tape, TensorT<Real> logits, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& score_mask = {}) {
    detail::check_rank2(logits, "cross_entropy");
    std::size_t n = logits.shape()[0];
    std::size_t classes = logits.shape()[1];
    if (labels.size() != n) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
    }
    if (!score_mask.empty() && score_mask.size() != n) {
        throw ShapeError("cross_entropy: score mask size mismatch");
    }

    auto scored = [&](std::size_t r) { return score_mask.empty() || score_mask[r] != 0; };

    auto probs = std::make_shared<std::vector<Real>>(logits.size());
    const auto& lv = logits.values();
    double total = 0.0;
    std::size_t n_scored = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (!scored(r)) continue;
        ++n_scored;
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
            throw IndexError("cross_entropy: label " + std::to_string(labels[r]) + " out of range [0," +
                             std::to_string(classes) + ") at row " + std::to_string(r));
        }
        const Real* row = lv.data() + r * classes;
        Real max_v = row[0];
        for (std::size_t c = 1; c < classes; ++c) max_v = std::max(max_v, row[c]);
        Real sum = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            Real ev = std::exp(row[c] - max_v);
            (*probs)[r * classes + c] = ev;
            sum += ev;
        }
        Real inv = Real(1) / sum;
        for (std::size_t c = 0; c < classes; ++c) (*probs)[r * classes + c] *= inv;
        total += std::log(static_cast<double>(sum)) + static_cast<double>(max_v) -
                 static_cast<double>(row[labels[r]]);
    }

    Real loss = n_scored == 0 ? Real(0) : Real(total / static_cast<double>(n_scored));
    TensorT<Real> out = TensorT<Real>::scalar(loss);
    detail::record_if(tape, out, logits.requires_grad(),
                      [out, logits, probs, labels, score_mask, n, classes, n_scored]() mutable {
                          if (!out.grad_allocated() || n_scored == 0) return;
                          Real gl = out.grad_view()[0] / Real(n_scored);
                          auto& gx = logits.grad();
                          for (std::size_t r = 0; r < n; ++r) {
                              if (!score_mask.empty() && score_mask[r] == 0) continue;
                              Real* grow = gx.data() + r * classes;
                              const Real* prow = probs->data() + r * classes;
                              for (std::size_t c = 0; c < classes; ++c) {
                                  Real target = c == static_cast<std::size_t>(labels[r]) ? Real(1) : Real(0);
                                  grow[c] += gl * (prow[c] - target);
                              }
                          }
                      });
    return out;
}

}  // namespace absa
