// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable op set for the detection pipeline. Every op validates its
// inputs, produces finite outputs, and registers a reverse-mode closure when
// any input is tracked.

#pragma once

#include <cmath>
#include <cstdint>

#include "hoidet/tensor.hpp"

namespace hoidet {

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

inline Scalar stable_softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary / unary
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  auto pa = a.handle(), pb = b.handle();
  return make_op(a.shape(), std::move(v), {a, b},
                 [pa, pb](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i];
                   }
                   if (pb->requires_grad) {
                     auto& db = pb->grad_buf();
                     for (std::size_t i = 0; i < db.size(); ++i) db[i] += self.grad[i];
                   }
                 },
                 "add");
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  auto pa = a.handle(), pb = b.handle();
  return make_op(a.shape(), std::move(v), {a, b},
                 [pa, pb](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i];
                   }
                   if (pb->requires_grad) {
                     auto& db = pb->grad_buf();
                     for (std::size_t i = 0; i < db.size(); ++i) db[i] -= self.grad[i];
                   }
                 },
                 "sub");
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  auto pa = a.handle(), pb = b.handle();
  return make_op(a.shape(), std::move(v), {a, b},
                 [pa, pb](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (std::size_t i = 0; i < da.size(); ++i)
                       da[i] += self.grad[i] * pb->value[i];
                   }
                   if (pb->requires_grad) {
                     auto& db = pb->grad_buf();
                     for (std::size_t i = 0; i < db.size(); ++i)
                       db[i] += self.grad[i] * pa->value[i];
                   }
                 },
                 "mul");
}

// Elementwise quotient; callers guarantee nonzero denominators.
inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "div");
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] / b.values()[i];
  auto pa = a.handle(), pb = b.handle();
  return make_op(a.shape(), std::move(v), {a, b},
                 [pa, pb](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (std::size_t i = 0; i < da.size(); ++i)
                       da[i] += self.grad[i] / pb->value[i];
                   }
                   if (pb->requires_grad) {
                     auto& db = pb->grad_buf();
                     for (std::size_t i = 0; i < db.size(); ++i)
                       db[i] -= self.grad[i] * pa->value[i] / (pb->value[i] * pb->value[i]);
                   }
                 },
                 "div");
}

inline Tensor scale(const Tensor& a, Scalar c) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * c;
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa, c](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i] * c;
                 },
                 "scale");
}

inline Tensor add_scalar(const Tensor& a, Scalar c) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + c;
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i];
                 },
                 "add_scalar");
}

inline Tensor neg(const Tensor& a) { return scale(a, Scalar(-1)); }

// Ties route the gradient to the first argument (right-continuous choice).
inline Tensor max_el(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "max_el");
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(a.values()[i], b.values()[i]);
  auto pa = a.handle(), pb = b.handle();
  return make_op(a.shape(), std::move(v), {a, b},
                 [pa, pb](Node& self) {
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const bool take_a = pa->value[i] >= pb->value[i];
                     Node* dst = take_a ? pa.get() : pb.get();
                     if (dst->requires_grad) dst->grad_buf()[i] += self.grad[i];
                   }
                 },
                 "max_el");
}

inline Tensor min_el(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "min_el");
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::min(a.values()[i], b.values()[i]);
  auto pa = a.handle(), pb = b.handle();
  return make_op(a.shape(), std::move(v), {a, b},
                 [pa, pb](Node& self) {
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const bool take_a = pa->value[i] <= pb->value[i];
                     Node* dst = take_a ? pa.get() : pb.get();
                     if (dst->requires_grad) dst->grad_buf()[i] += self.grad[i];
                   }
                 },
                 "min_el");
}

inline Tensor relu(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(a.values()[i], Scalar(0));
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i)
                     if (pa->value[i] > 0) da[i] += self.grad[i];
                 },
                 "relu");
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::stable_sigmoid(a.values()[i]);
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) {
                     const Scalar y = self.value[i];
                     da[i] += self.grad[i] * y * (Scalar(1) - y);
                   }
                 },
                 "sigmoid");
}

inline Tensor softplus(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::stable_softplus(a.values()[i]);
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i)
                     da[i] += self.grad[i] * detail::stable_sigmoid(pa->value[i]);
                 },
                 "softplus");
}

inline Tensor exp_t(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(a.values()[i]);
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i)
                     da[i] += self.grad[i] * self.value[i];
                 },
                 "exp");
}

inline Tensor log_t(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::log(a.values()[i]);
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i)
                     da[i] += self.grad[i] / pa->value[i];
                 },
                 "log");
}

// log(p / (1-p)) with p clamped to [eps, 1-eps]; gradient is zero in the
// clamped region, matching the usual detection-head convention.
inline Tensor inverse_sigmoid(const Tensor& a, Scalar eps = Scalar(1e-12)) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Scalar p = std::min(std::max(a.values()[i], eps), Scalar(1) - eps);
    v[i] = std::log(p) - std::log1p(-p);
  }
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa, eps](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) {
                     const Scalar p = pa->value[i];
                     if (p <= eps || p >= Scalar(1) - eps) continue;
                     da[i] += self.grad[i] / (p * (Scalar(1) - p));
                   }
                 },
                 "inverse_sigmoid");
}

inline Tensor clamp01(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::min(std::max(a.values()[i], Scalar(0)), Scalar(1));
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) {
                     const Scalar x = pa->value[i];
                     if (x > 0 && x < 1) da[i] += self.grad[i];
                   }
                 },
                 "clamp01");
}

inline Tensor abs_t(const Tensor& a) {
  std::vector<Scalar> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(a.values()[i]);
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) {
                     const Scalar x = pa->value[i];
                     if (x > 0)
                       da[i] += self.grad[i];
                     else if (x < 0)
                       da[i] -= self.grad[i];
                   }
                 },
                 "abs");
}

// ---------------------------------------------------------------------------
// shape manipulation
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& a, Shape shape) {
  detail::require(shape_numel(shape) == a.size(), "reshape: element count mismatch");
  auto pa = a.handle();
  return make_op(std::move(shape), a.values(), {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i];
                 },
                 "reshape");
}

inline Tensor transpose(const Tensor& a) {
  detail::require(a.ndim() == 2, "transpose: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<Scalar> v(a.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) v[std::size_t(j) * m + i] = a.values()[std::size_t(i) * n + j];
  auto pa = a.handle();
  return make_op({n, m}, std::move(v), {a},
                 [pa, m, n](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < n; ++j)
                       da[std::size_t(i) * n + j] += self.grad[std::size_t(j) * m + i];
                 },
                 "transpose");
}

inline Tensor slice_cols(const Tensor& a, int c0, int len) {
  detail::require(a.ndim() == 2, "slice_cols: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  detail::require(c0 >= 0 && len > 0 && c0 + len <= n, "slice_cols: range out of bounds");
  std::vector<Scalar> v(std::size_t(m) * len);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < len; ++j)
      v[std::size_t(i) * len + j] = a.values()[std::size_t(i) * n + c0 + j];
  auto pa = a.handle();
  return make_op({m, len}, std::move(v), {a},
                 [pa, m, n, c0, len](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < len; ++j)
                       da[std::size_t(i) * n + c0 + j] += self.grad[std::size_t(i) * len + j];
                 },
                 "slice_cols");
}

inline Tensor slice_rows(const Tensor& a, int r0, int len) {
  detail::require(a.ndim() == 2, "slice_rows: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  detail::require(r0 >= 0 && len > 0 && r0 + len <= m, "slice_rows: range out of bounds");
  std::vector<Scalar> v(a.values().begin() + std::size_t(r0) * n,
                        a.values().begin() + std::size_t(r0 + len) * n);
  auto pa = a.handle();
  return make_op({len, n}, std::move(v), {a},
                 [pa, n, r0, len](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < std::size_t(len) * n; ++i)
                     da[std::size_t(r0) * n + i] += self.grad[i];
                 },
                 "slice_rows");
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const int m = parts[0].dim(0);
  int total = 0;
  for (const Tensor& p : parts) {
    detail::require(p.ndim() == 2 && p.dim(0) == m, "concat_cols: row mismatch");
    total += p.dim(1);
  }
  std::vector<Scalar> v(std::size_t(m) * total);
  std::vector<int> offs;
  int off = 0;
  for (const Tensor& p : parts) {
    const int n = p.dim(1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        v[std::size_t(i) * total + off + j] = p.values()[std::size_t(i) * n + j];
    offs.push_back(off);
    off += n;
  }
  std::vector<std::shared_ptr<Node>> ps;
  for (const Tensor& p : parts) ps.push_back(p.handle());
  return make_op({m, total}, std::move(v), parts,
                 [ps, offs, m, total](Node& self) {
                   for (std::size_t k = 0; k < ps.size(); ++k) {
                     if (!ps[k]->requires_grad) continue;
                     const int n = ps[k]->shape[1];
                     auto& d = ps[k]->grad_buf();
                     for (int i = 0; i < m; ++i)
                       for (int j = 0; j < n; ++j)
                         d[std::size_t(i) * n + j] +=
                             self.grad[std::size_t(i) * total + offs[k] + j];
                   }
                 },
                 "concat_cols");
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  detail::require(!parts.empty(), "concat_rows: no inputs");
  const int n = parts[0].dim(1);
  int total = 0;
  for (const Tensor& p : parts) {
    detail::require(p.ndim() == 2 && p.dim(1) == n, "concat_rows: column mismatch");
    total += p.dim(0);
  }
  std::vector<Scalar> v;
  v.reserve(std::size_t(total) * n);
  std::vector<int> offs;
  int off = 0;
  for (const Tensor& p : parts) {
    v.insert(v.end(), p.values().begin(), p.values().end());
    offs.push_back(off);
    off += p.dim(0);
  }
  std::vector<std::shared_ptr<Node>> ps;
  for (const Tensor& p : parts) ps.push_back(p.handle());
  return make_op({total, n}, std::move(v), parts,
                 [ps, offs, n](Node& self) {
                   for (std::size_t k = 0; k < ps.size(); ++k) {
                     if (!ps[k]->requires_grad) continue;
                     auto& d = ps[k]->grad_buf();
                     const std::size_t base = std::size_t(offs[k]) * n;
                     for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[base + i];
                   }
                 },
                 "concat_rows");
}

inline Tensor gather_rows(const Tensor& a, const std::vector<int>& idx) {
  detail::require(a.ndim() == 2, "gather_rows: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<Scalar> v(idx.size() * std::size_t(n));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    detail::require(idx[r] >= 0 && idx[r] < m, "gather_rows: index out of range");
    for (int j = 0; j < n; ++j)
      v[r * n + j] = a.values()[std::size_t(idx[r]) * n + j];
  }
  auto pa = a.handle();
  return make_op({static_cast<int>(idx.size()), n}, std::move(v), {a},
                 [pa, idx, n](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t r = 0; r < idx.size(); ++r)
                     for (int j = 0; j < n; ++j)
                       da[std::size_t(idx[r]) * n + j] += self.grad[r * n + j];
                 },
                 "gather_rows");
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require(a.ndim() == 2 && b.ndim() == 2, "matmul: expects matrices");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  detail::require(b.dim(0) == k, "matmul: inner dimension mismatch");
  std::vector<Scalar> v(std::size_t(m) * n, Scalar(0));
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < m; ++i)
    for (int kk = 0; kk < k; ++kk) {
      const Scalar aik = av[std::size_t(i) * k + kk];
      if (aik == Scalar(0)) continue;
      const std::size_t brow = std::size_t(kk) * n;
      const std::size_t orow = std::size_t(i) * n;
      for (int j = 0; j < n; ++j) v[orow + j] += aik * bv[brow + j];
    }
  auto pa = a.handle(), pb = b.handle();
  return make_op({m, n}, std::move(v), {a, b},
                 [pa, pb, m, k, n](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (int i = 0; i < m; ++i)
                       for (int kk = 0; kk < k; ++kk) {
                         Scalar acc = 0;
                         const std::size_t grow = std::size_t(i) * n;
                         const std::size_t brow = std::size_t(kk) * n;
                         for (int j = 0; j < n; ++j) acc += self.grad[grow + j] * pb->value[brow + j];
                         da[std::size_t(i) * k + kk] += acc;
                       }
                   }
                   if (pb->requires_grad) {
                     auto& db = pb->grad_buf();
                     for (int kk = 0; kk < k; ++kk)
                       for (int i = 0; i < m; ++i) {
                         const Scalar aik = pa->value[std::size_t(i) * k + kk];
                         if (aik == Scalar(0)) continue;
                         const std::size_t grow = std::size_t(i) * n;
                         const std::size_t brow = std::size_t(kk) * n;
                         for (int j = 0; j < n; ++j) db[brow + j] += aik * self.grad[grow + j];
                       }
                   }
                 },
                 "matmul");
}

// a[m,n] + bias[n] broadcast over rows.
inline Tensor add_rows(const Tensor& a, const Tensor& bias) {
  detail::require(a.ndim() == 2, "add_rows: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  detail::require(bias.size() == std::size_t(n), "add_rows: bias length mismatch");
  std::vector<Scalar> v(a.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      v[std::size_t(i) * n + j] = a.values()[std::size_t(i) * n + j] + bias.values()[j];
  auto pa = a.handle(), pb = bias.handle();
  return make_op({m, n}, std::move(v), {a, bias},
                 [pa, pb, m, n](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i];
                   }
                   if (pb->requires_grad) {
                     auto& db = pb->grad_buf();
                     for (int i = 0; i < m; ++i)
                       for (int j = 0; j < n; ++j) db[j] += self.grad[std::size_t(i) * n + j];
                   }
                 },
                 "add_rows");
}

// Repeats the column block of `a` `times` times: [m,n] -> [m, times*n].
inline Tensor tile_cols(const Tensor& a, int times) {
  detail::require(a.ndim() == 2, "tile_cols: expects a matrix");
  detail::require(times >= 1, "tile_cols: times must be positive");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<Scalar> v(std::size_t(m) * n * times);
  for (int i = 0; i < m; ++i)
    for (int t = 0; t < times; ++t)
      for (int j = 0; j < n; ++j)
        v[(std::size_t(i) * times + t) * n + j] = a.values()[std::size_t(i) * n + j];
  auto pa = a.handle();
  return make_op({m, n * times}, std::move(v), {a},
                 [pa, m, n, times](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (int i = 0; i < m; ++i)
                     for (int t = 0; t < times; ++t)
                       for (int j = 0; j < n; ++j)
                         da[std::size_t(i) * n + j] +=
                             self.grad[(std::size_t(i) * times + t) * n + j];
                 },
                 "tile_cols");
}

// Scales column j by the constant factors[j].
inline Tensor scale_cols(const Tensor& a, const std::vector<Scalar>& factors) {
  detail::require(a.ndim() == 2, "scale_cols: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  detail::require(factors.size() == std::size_t(n), "scale_cols: factor count mismatch");
  std::vector<Scalar> v(a.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      v[std::size_t(i) * n + j] = a.values()[std::size_t(i) * n + j] * factors[j];
  auto pa = a.handle();
  return make_op({m, n}, std::move(v), {a},
                 [pa, m, n, factors](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < n; ++j)
                       da[std::size_t(i) * n + j] += self.grad[std::size_t(i) * n + j] * factors[j];
                 },
                 "scale_cols");
}

// Row scaling: out[i,j] = a[i,j] * r[i].
inline Tensor scale_rows(const Tensor& a, const Tensor& r) {
  detail::require(a.ndim() == 2, "scale_rows: expects a matrix");
  const int m = a.dim(0), n = a.dim(1);
  detail::require(r.size() == std::size_t(m), "scale_rows: row factor length mismatch");
  std::vector<Scalar> v(a.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      v[std::size_t(i) * n + j] = a.values()[std::size_t(i) * n + j] * r.values()[i];
  auto pa = a.handle(), pr = r.handle();
  return make_op({m, n}, std::move(v), {a, r},
                 [pa, pr, m, n](Node& self) {
                   if (pa->requires_grad) {
                     auto& da = pa->grad_buf();
                     for (int i = 0; i < m; ++i)
                       for (int j = 0; j < n; ++j)
                         da[std::size_t(i) * n + j] += self.grad[std::size_t(i) * n + j] * pr->value[i];
                   }
                   if (pr->requires_grad) {
                     auto& dr = pr->grad_buf();
                     for (int i = 0; i < m; ++i) {
                       Scalar acc = 0;
                       for (int j = 0; j < n; ++j)
                         acc += self.grad[std::size_t(i) * n + j] * pa->value[std::size_t(i) * n + j];
                       dr[i] += acc;
                     }
                   }
                 },
                 "scale_rows");
}

// x[m, in] * W^T[out, in] + b[out], the standard dense layer.
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  detail::require(w.ndim() == 2, "linear: weight must be [out, in]");
  return add_rows(matmul(x, transpose(w)), b);
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

inline Tensor sum_all(const Tensor& a) {
  Scalar s = 0;
  for (Scalar x : a.values()) s += x;
  auto pa = a.handle();
  return make_op({1}, {s}, {a},
                 [pa](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[0];
                 },
                 "sum_all");
}

inline Tensor mean_all(const Tensor& a) {
  return scale(sum_all(a), Scalar(1) / Scalar(a.size()));
}

// ---------------------------------------------------------------------------
// softmax along an arbitrary axis, max-subtracted
// ---------------------------------------------------------------------------

inline Tensor softmax(const Tensor& a, int axis) {
  const int nd = a.ndim();
  if (axis < 0) axis += nd;
  detail::require(axis >= 0 && axis < nd, "softmax: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= std::size_t(a.dim(i));
  for (int i = axis + 1; i < nd; ++i) inner *= std::size_t(a.dim(i));
  const std::size_t n = std::size_t(a.dim(axis));

  std::vector<Scalar> v(a.size());
  const auto& av = a.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      Scalar mx = av[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, av[base + j * inner]);
      Scalar denom = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const Scalar e = std::exp(av[base + j * inner] - mx);
        v[base + j * inner] = e;
        denom += e;
      }
      for (std::size_t j = 0; j < n; ++j) v[base + j * inner] /= denom;
    }
  auto pa = a.handle();
  return make_op(a.shape(), std::move(v), {a},
                 [pa, outer, inner, n](Node& self) {
                   if (!pa->requires_grad) return;
                   auto& da = pa->grad_buf();
                   for (std::size_t o = 0; o < outer; ++o)
                     for (std::size_t in = 0; in < inner; ++in) {
                       const std::size_t base = o * n * inner + in;
                       Scalar dot = 0;
                       for (std::size_t j = 0; j < n; ++j)
                         dot += self.grad[base + j * inner] * self.value[base + j * inner];
                       for (std::size_t j = 0; j < n; ++j) {
                         const std::size_t k = base + j * inner;
                         da[k] += self.value[k] * (self.grad[k] - dot);
                       }
                     }
                 },
                 "softmax");
}

// ---------------------------------------------------------------------------
// layer normalization over the last dimension
// ---------------------------------------------------------------------------

inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         Scalar eps = Scalar(1e-5)) {
  const int nd = x.ndim();
  detail::require(nd >= 1, "layer_norm: needs at least 1-D input");
  const std::size_t c = std::size_t(x.dim(nd - 1));
  detail::require(gamma.size() == c && beta.size() == c, "layer_norm: affine size mismatch");
  const std::size_t rows = x.size() / c;

  std::vector<Scalar> v(x.size());
  std::vector<Scalar> xhat(x.size());
  std::vector<Scalar> inv_sigma(rows);
  const auto& xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * c;
    Scalar mean = 0;
    for (std::size_t j = 0; j < c; ++j) mean += xv[base + j];
    mean /= Scalar(c);
    Scalar var = 0;
    for (std::size_t j = 0; j < c; ++j) {
      const Scalar d = xv[base + j] - mean;
      var += d * d;
    }
    var /= Scalar(c);
    const Scalar is = Scalar(1) / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const Scalar h = (xv[base + j] - mean) * is;
      xhat[base + j] = h;
      v[base + j] = h * gamma.values()[j] + beta.values()[j];
    }
  }
  auto px = x.handle(), pg = gamma.handle(), pb = beta.handle();
  return make_op(x.shape(), std::move(v), {x, gamma, beta},
                 [px, pg, pb, rows, c, xhat = std::move(xhat),
                  inv_sigma = std::move(inv_sigma)](Node& self) {
                   for (std::size_t r = 0; r < rows; ++r) {
                     const std::size_t base = r * c;
                     if (pg->requires_grad) {
                       auto& dg = pg->grad_buf();
                       for (std::size_t j = 0; j < c; ++j)
                         dg[j] += self.grad[base + j] * xhat[base + j];
                     }
                     if (pb->requires_grad) {
                       auto& db = pb->grad_buf();
                       for (std::size_t j = 0; j < c; ++j) db[j] += self.grad[base + j];
                     }
                     if (px->requires_grad) {
                       auto& dx = px->grad_buf();
                       Scalar mean_dh = 0, mean_dh_h = 0;
                       for (std::size_t j = 0; j < c; ++j) {
                         const Scalar dh = self.grad[base + j] * pg->value[j];
                         mean_dh += dh;
                         mean_dh_h += dh * xhat[base + j];
                       }
                       mean_dh /= Scalar(c);
                       mean_dh_h /= Scalar(c);
                       for (std::size_t j = 0; j < c; ++j) {
                         const Scalar dh = self.grad[base + j] * pg->value[j];
                         dx[base + j] += inv_sigma[r] * (dh - mean_dh - xhat[base + j] * mean_dh_h);
                       }
                     }
                   }
                 },
                 "layer_norm");
}

// ---------------------------------------------------------------------------
// 2-D convolution (CHW, zero padding)
// ---------------------------------------------------------------------------

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                     int pad) {
  detail::require(x.ndim() == 3, "conv2d: input must be [C,H,W]");
  detail::require(w.ndim() == 4, "conv2d: weight must be [Co,Ci,kh,kw]");
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  detail::require(w.dim(1) == ci, "conv2d: channel mismatch");
  detail::require(b.size() == std::size_t(co), "conv2d: bias size mismatch");
  detail::require(stride >= 1, "conv2d: stride must be positive");
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (ww + 2 * pad - kw) / stride + 1;
  detail::require(ho > 0 && wo > 0, "conv2d: output would be empty");

  std::vector<Scalar> v(std::size_t(co) * ho * wo);
  const auto& xv = x.values();
  const auto& wv = w.values();
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        Scalar acc = b.values()[oc];
        for (int icn = 0; icn < ci; ++icn)
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= ww) continue;
              acc += xv[(std::size_t(icn) * h + iy) * ww + ix] *
                     wv[((std::size_t(oc) * ci + icn) * kh + ky) * kw + kx];
            }
          }
        v[(std::size_t(oc) * ho + oy) * wo + ox] = acc;
      }
  auto px = x.handle(), pw = w.handle(), pb = b.handle();
  return make_op({co, ho, wo}, std::move(v), {x, w, b},
                 [px, pw, pb, ci, h, ww, co, kh, kw, ho, wo, stride, pad](Node& self) {
                   for (int oc = 0; oc < co; ++oc)
                     for (int oy = 0; oy < ho; ++oy)
                       for (int ox = 0; ox < wo; ++ox) {
                         const Scalar g = self.grad[(std::size_t(oc) * ho + oy) * wo + ox];
                         if (g == Scalar(0)) continue;
                         if (pb->requires_grad) pb->grad_buf()[oc] += g;
                         for (int icn = 0; icn < ci; ++icn)
                           for (int ky = 0; ky < kh; ++ky) {
                             const int iy = oy * stride + ky - pad;
                             if (iy < 0 || iy >= h) continue;
                             for (int kx = 0; kx < kw; ++kx) {
                               const int ix = ox * stride + kx - pad;
                               if (ix < 0 || ix >= ww) continue;
                               const std::size_t xi = (std::size_t(icn) * h + iy) * ww + ix;
                               const std::size_t wi =
                                   ((std::size_t(oc) * ci + icn) * kh + ky) * kw + kx;
                               if (pw->requires_grad) pw->grad_buf()[wi] += g * px->value[xi];
                               if (px->requires_grad) px->grad_buf()[xi] += g * pw->value[wi];
                             }
                           }
                       }
                 },
                 "conv2d");
}

// Zero-pads a [C,H,W] map on the bottom/right.
inline Tensor pad_chw(const Tensor& x, int new_h, int new_w) {
  detail::require(x.ndim() == 3, "pad_chw: input must be [C,H,W]");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  detail::require(new_h >= h && new_w >= w, "pad_chw: target smaller than input");
  if (new_h == h && new_w == w) return x;
  std::vector<Scalar> v(std::size_t(c) * new_h * new_w, Scalar(0));
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        v[(std::size_t(ch) * new_h + y) * new_w + xx] =
            x.values()[(std::size_t(ch) * h + y) * w + xx];
  auto px = x.handle();
  return make_op({c, new_h, new_w}, std::move(v), {x},
                 [px, c, h, w, new_h, new_w](Node& self) {
                   if (!px->requires_grad) return;
                   auto& dx = px->grad_buf();
                   for (int ch = 0; ch < c; ++ch)
                     for (int y = 0; y < h; ++y)
                       for (int xx = 0; xx < w; ++xx)
                         dx[(std::size_t(ch) * h + y) * w + xx] +=
                             self.grad[(std::size_t(ch) * new_h + y) * new_w + xx];
                 },
                 "pad_chw");
}

// ---------------------------------------------------------------------------
// bilinear sampling
// ---------------------------------------------------------------------------
//
// Normalized coordinates map to pixel space as p * extent - 0.5, so grid-cell
// centers sit at (i + 0.5) / extent. Out-of-range taps contribute zero, and
// gradients at cell boundaries follow the right-continuous choice that
// floor() induces.

inline Tensor bilinear_sample(const Tensor& map, const Tensor& points) {
  detail::require(map.ndim() == 3, "bilinear_sample: map must be [C,H,W]");
  detail::require(points.ndim() == 2 && points.dim(1) == 2,
                  "bilinear_sample: points must be [P,2]");
  for (Scalar p : points.values())
    if (!std::isfinite(p)) throw std::invalid_argument("bilinear_sample: non-finite point");
  const int c = map.dim(0), h = map.dim(1), w = map.dim(2);
  const int np = points.dim(0);

  std::vector<Scalar> v(std::size_t(np) * c, Scalar(0));
  const auto& mv = map.values();
  const auto& pv = points.values();
  for (int p = 0; p < np; ++p) {
    const Scalar px = pv[std::size_t(p) * 2 + 0] * Scalar(w) - Scalar(0.5);
    const Scalar py = pv[std::size_t(p) * 2 + 1] * Scalar(h) - Scalar(0.5);
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const Scalar fx = px - Scalar(x0);
    const Scalar fy = py - Scalar(y0);
    const Scalar tw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
    for (int t = 0; t < 4; ++t) {
      if (tx[t] < 0 || tx[t] >= w || ty[t] < 0 || ty[t] >= h) continue;
      const std::size_t pix = std::size_t(ty[t]) * w + tx[t];
      for (int ch = 0; ch < c; ++ch)
        v[std::size_t(p) * c + ch] += tw[t] * mv[std::size_t(ch) * h * w + pix];
    }
  }
  auto pm = map.handle(), pp = points.handle();
  return make_op({np, c}, std::move(v), {map, points},
                 [pm, pp, c, h, w, np](Node& self) {
                   for (int p = 0; p < np; ++p) {
                     const Scalar px = pp->value[std::size_t(p) * 2 + 0] * Scalar(w) - Scalar(0.5);
                     const Scalar py = pp->value[std::size_t(p) * 2 + 1] * Scalar(h) - Scalar(0.5);
                     const int x0 = static_cast<int>(std::floor(px));
                     const int y0 = static_cast<int>(std::floor(py));
                     const Scalar fx = px - Scalar(x0);
                     const Scalar fy = py - Scalar(y0);
                     // tap values with zero padding
                     auto tap = [&](int xx, int yy, int ch) -> Scalar {
                       if (xx < 0 || xx >= w || yy < 0 || yy >= h) return Scalar(0);
                       return pm->value[(std::size_t(ch) * h + yy) * w + xx];
                     };
                     const Scalar tw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                                           fx * fy};
                     const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
                     const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
                     Scalar dpx = 0, dpy = 0;
                     for (int ch = 0; ch < c; ++ch) {
                       const Scalar g = self.grad[std::size_t(p) * c + ch];
                       if (g == Scalar(0)) continue;
                       if (pm->requires_grad) {
                         auto& dm = pm->grad_buf();
                         for (int t = 0; t < 4; ++t) {
                           if (tx[t] < 0 || tx[t] >= w || ty[t] < 0 || ty[t] >= h) continue;
                           dm[(std::size_t(ch) * h + ty[t]) * w + tx[t]] += g * tw[t];
                         }
                       }
                       if (pp->requires_grad) {
                         const Scalar v00 = tap(x0, y0, ch), v10 = tap(x0 + 1, y0, ch);
                         const Scalar v01 = tap(x0, y0 + 1, ch), v11 = tap(x0 + 1, y0 + 1, ch);
                         dpx += g * ((v10 - v00) * (1 - fy) + (v11 - v01) * fy);
                         dpy += g * ((v01 - v00) * (1 - fx) + (v11 - v10) * fx);
                       }
                     }
                     if (pp->requires_grad) {
                       auto& dp = pp->grad_buf();
                       dp[std::size_t(p) * 2 + 0] += dpx * Scalar(w);
                       dp[std::size_t(p) * 2 + 1] += dpy * Scalar(h);
                     }
                   }
                 },
                 "bilinear_sample");
}

// ---------------------------------------------------------------------------
// fused multi-scale deformable sampling
// ---------------------------------------------------------------------------

struct LevelSpec {
  int h = 0;
  int w = 0;
  int offset = 0;  // first token row of this level in the flattened sequence
};

// value   [N_S, M*Ch]  flattened multi-level features, head-major channels
// locs    [Q, M*L*K*2] normalized (x, y) sampling locations
// weights [Q, M*L*K]   mixing weights (softmax over L*K per head upstream)
// output  [Q, M*Ch]
//
// Each (head, level, point) bilinearly samples its level's grid with zero
// padding, identically to bilinear_sample above.
inline Tensor deform_sample(const Tensor& value, const std::vector<LevelSpec>& levels,
                            int heads, const Tensor& locs, const Tensor& weights) {
  detail::require(value.ndim() == 2, "deform_sample: value must be [N_S, M*Ch]");
  const int ns = value.dim(0), cols = value.dim(1);
  detail::require(heads > 0 && cols % heads == 0, "deform_sample: head count mismatch");
  const int chead = cols / heads;
  const int nl = static_cast<int>(levels.size());
  detail::require(nl > 0, "deform_sample: no levels");
  int toks = 0;
  for (const auto& l : levels) {
    detail::require(l.h > 0 && l.w > 0 && l.offset == toks, "deform_sample: bad level table");
    toks += l.h * l.w;
  }
  detail::require(toks == ns, "deform_sample: level table does not cover value rows");
  detail::require(locs.ndim() == 2 && weights.ndim() == 2, "deform_sample: locs/weights rank");
  const int q = locs.dim(0);
  detail::require(weights.dim(0) == q, "deform_sample: query count mismatch");
  const int mlk = weights.dim(1);
  detail::require(mlk % (heads * nl) == 0, "deform_sample: weight width mismatch");
  const int k = mlk / (heads * nl);
  detail::require(locs.dim(1) == mlk * 2, "deform_sample: locs width mismatch");
  for (Scalar p : locs.values())
    if (!std::isfinite(p)) throw std::invalid_argument("deform_sample: non-finite location");

  const auto& vv = value.values();
  const auto& lv = locs.values();
  const auto& wv = weights.values();
  std::vector<Scalar> out(std::size_t(q) * cols, Scalar(0));

  auto sample_index = [&](int qq, int m, int l, int kk) {
    return ((std::size_t(qq) * heads + m) * nl + l) * k + kk;
  };

  for (int qq = 0; qq < q; ++qq)
    for (int m = 0; m < heads; ++m)
      for (int l = 0; l < nl; ++l) {
        const LevelSpec& lev = levels[std::size_t(l)];
        for (int kk = 0; kk < k; ++kk) {
          const std::size_t si = sample_index(qq, m, l, kk);
          const Scalar weight = wv[si];
          const Scalar px = lv[si * 2 + 0] * Scalar(lev.w) - Scalar(0.5);
          const Scalar py = lv[si * 2 + 1] * Scalar(lev.h) - Scalar(0.5);
          const int x0 = static_cast<int>(std::floor(px));
          const int y0 = static_cast<int>(std::floor(py));
          const Scalar fx = px - Scalar(x0);
          const Scalar fy = py - Scalar(y0);
          const Scalar tw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
          const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
          const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
          for (int t = 0; t < 4; ++t) {
            if (tx[t] < 0 || tx[t] >= lev.w || ty[t] < 0 || ty[t] >= lev.h) continue;
            const std::size_t row = std::size_t(lev.offset) + std::size_t(ty[t]) * lev.w + tx[t];
            const Scalar wt = weight * tw[t];
            for (int ch = 0; ch < chead; ++ch)
              out[std::size_t(qq) * cols + m * chead + ch] +=
                  wt * vv[row * cols + m * chead + ch];
          }
        }
      }

  auto pv = value.handle(), pl = locs.handle(), pw = weights.handle();
  return make_op(
      {q, cols}, std::move(out), {value, locs, weights},
      [pv, pl, pw, levels, heads, chead, cols, q, nl, k](Node& self) {
        auto sample_index = [&](int qq, int m, int l, int kk) {
          return ((std::size_t(qq) * heads + m) * nl + l) * k + kk;
        };
        for (int qq = 0; qq < q; ++qq)
          for (int m = 0; m < heads; ++m)
            for (int l = 0; l < nl; ++l) {
              const LevelSpec& lev = levels[std::size_t(l)];
              for (int kk = 0; kk < k; ++kk) {
                const std::size_t si = sample_index(qq, m, l, kk);
                const Scalar weight = pw->value[si];
                const Scalar px = pl->value[si * 2 + 0] * Scalar(lev.w) - Scalar(0.5);
                const Scalar py = pl->value[si * 2 + 1] * Scalar(lev.h) - Scalar(0.5);
                const int x0 = static_cast<int>(std::floor(px));
                const int y0 = static_cast<int>(std::floor(py));
                const Scalar fx = px - Scalar(x0);
                const Scalar fy = py - Scalar(y0);
                const Scalar tw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                                      fx * fy};
                const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
                const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
                auto row_of = [&](int t) -> std::ptrdiff_t {
                  if (tx[t] < 0 || tx[t] >= lev.w || ty[t] < 0 || ty[t] >= lev.h) return -1;
                  return std::ptrdiff_t(lev.offset) + std::ptrdiff_t(ty[t]) * lev.w + tx[t];
                };
                Scalar dw_acc = 0, dpx = 0, dpy = 0;
                for (int ch = 0; ch < chead; ++ch) {
                  const Scalar g = self.grad[std::size_t(qq) * cols + m * chead + ch];
                  if (g == Scalar(0)) continue;
                  Scalar tapv[4];
                  for (int t = 0; t < 4; ++t) {
                    const std::ptrdiff_t row = row_of(t);
                    tapv[t] = row < 0 ? Scalar(0)
                                      : pv->value[std::size_t(row) * cols + m * chead + ch];
                  }
                  Scalar sampled = 0;
                  for (int t = 0; t < 4; ++t) sampled += tw[t] * tapv[t];
                  dw_acc += g * sampled;
                  if (pv->requires_grad) {
                    auto& dv = pv->grad_buf();
                    for (int t = 0; t < 4; ++t) {
                      const std::ptrdiff_t row = row_of(t);
                      if (row < 0) continue;
                      dv[std::size_t(row) * cols + m * chead + ch] += g * weight * tw[t];
                    }
                  }
                  if (pl->requires_grad) {
                    dpx += g * weight *
                           ((tapv[1] - tapv[0]) * (1 - fy) + (tapv[3] - tapv[2]) * fy);
                    dpy += g * weight *
                           ((tapv[2] - tapv[0]) * (1 - fx) + (tapv[3] - tapv[1]) * fx);
                  }
                }
                if (pw->requires_grad) pw->grad_buf()[si] += dw_acc;
                if (pl->requires_grad) {
                  auto& dl = pl->grad_buf();
                  dl[si * 2 + 0] += dpx * Scalar(lev.w);
                  dl[si * 2 + 1] += dpy * Scalar(lev.h);
                }
              }
            }
      },
      "deform_sample");
}

// Convenience operators.
inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace hoidet
