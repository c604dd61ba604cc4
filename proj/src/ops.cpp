// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "redapt/autodiff.hpp"
#include "redapt/rng.hpp"

namespace redapt {

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape()) return false;
  for (const Tensor* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

Tensor make_output(Shape shape, bool grad) { return Tensor::zeros(std::move(shape), grad); }

void record(std::string_view op, std::vector<ImplPtr> inputs, const Tensor& out,
            Tape::BackwardFn fn) {
  active_tape()->record(op, std::move(inputs), out.impl(), std::move(fn));
}

// C[m,n] += A[m,k] B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[m,n] += A[k,m]^T B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

std::size_t last_dim(const Tensor& t) { return t.rank() == 0 ? 1 : t.shape().back(); }

}  // namespace

std::size_t reduced_length(std::size_t n, const ReductionSpec& spec) {
  if (spec.kernel == 0 || spec.stride == 0) {
    throw ConfigError("reduction spec needs kernel >= 1 and stride >= 1 (k=" +
                      std::to_string(spec.kernel) + ", s=" + std::to_string(spec.stride) +
                      ")");
  }
  if (n + 2 * spec.padding < spec.kernel) {
    throw LengthError("sequence shorter than kernel: n=" + std::to_string(n) +
                      ", k=" + std::to_string(spec.kernel) +
                      ", p=" + std::to_string(spec.padding));
  }
  return (n + 2 * spec.padding - spec.kernel) / spec.stride + 1;
}

double gelu_scalar(double x) {
  const double inner = kGeluTanhCoeff * (x + kGeluCubicCoeff * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_grad_scalar(double x) {
  const double inner = kGeluTanhCoeff * (x + kGeluCubicCoeff * x * x * x);
  const double t = std::tanh(inner);
  const double dinner = kGeluTanhCoeff * (1.0 + 3.0 * kGeluCubicCoeff * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const bool grad = needs_grad({&a, &b});
  Tensor out = make_output({m, n}, grad);
  gemm_nn(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  detail::count_macs("matmul", static_cast<std::uint64_t>(m) * n * k);
  if (grad) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    record("matmul", {ai, bi}, out, [ai, bi, oi, m, k, n] {
      const double* dy = oi->grad->data();
      if (ai->requires_grad) gemm_nt(dy, bi->data.data(), ai->grad_buffer().data(), m, n, k);
      if (bi->requires_grad) gemm_tn(ai->data.data(), dy, bi->grad_buffer().data(), k, m, n);
    });
  }
  return out;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw ShapeError("bmm: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  const bool grad = needs_grad({&a, &b});
  Tensor out = make_output({batch, m, n}, grad);
  for (std::size_t i = 0; i < batch; ++i) {
    gemm_nn(a.data().data() + i * m * k, b.data().data() + i * k * n,
            out.data().data() + i * m * n, m, k, n);
  }
  detail::count_macs("bmm", static_cast<std::uint64_t>(batch) * m * n * k);
  if (grad) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    record("bmm", {ai, bi}, out, [ai, bi, oi, batch, m, k, n] {
      const double* dy = oi->grad->data();
      for (std::size_t i = 0; i < batch; ++i) {
        const double* dyi = dy + i * m * n;
        if (ai->requires_grad) {
          gemm_nt(dyi, bi->data.data() + i * k * n, ai->grad_buffer().data() + i * m * k, m,
                  n, k);
        }
        if (bi->requires_grad) {
          gemm_tn(ai->data.data() + i * m * k, dyi, bi->grad_buffer().data() + i * k * n, k,
                  m, n);
        }
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() == 0 || w.rank() != 2 || last_dim(x) != w.dim(0)) {
    throw ShapeError("linear: incompatible shapes " + shape_str(x.shape()) + " x " +
                     shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0), outd = w.dim(1);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != outd)) {
    throw ShapeError("linear: bias shape " + shape_str(bias.shape()) + " for output width " +
                     std::to_string(outd));
  }
  const std::size_t rows = x.numel() / in;
  Shape oshape = x.shape();
  oshape.back() = outd;
  const bool grad = needs_grad({&x, &w, &bias});
  Tensor out = make_output(oshape, grad);
  double* y = out.data().data();
  if (bias.defined()) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bias.data().begin(), bias.data().end(), y + r * outd);
    }
    detail::count_other("bias_add", static_cast<std::uint64_t>(rows) * outd);
  }
  gemm_nn(x.data().data(), w.data().data(), y, rows, in, outd);
  detail::count_macs("matmul", static_cast<std::uint64_t>(rows) * in * outd);
  if (grad) {
    ImplPtr xi = x.impl(), wi = w.impl(), oi = out.impl();
    ImplPtr bi = bias.defined() ? bias.impl() : nullptr;
    std::vector<ImplPtr> inputs{xi, wi};
    if (bi) inputs.push_back(bi);
    record("linear", std::move(inputs), out, [xi, wi, bi, oi, rows, in, outd] {
      const double* dy = oi->grad->data();
      if (xi->requires_grad) gemm_nt(dy, wi->data.data(), xi->grad_buffer().data(), rows, outd, in);
      if (wi->requires_grad) gemm_tn(xi->data.data(), dy, wi->grad_buffer().data(), in, rows, outd);
      if (bi && bi->requires_grad) {
        double* db = bi->grad_buffer().data();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < outd; ++j) db[j] += dy[r * outd + j];
        }
      }
    });
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, const ReductionSpec& spec) {
  if (x.rank() != 3 || w.rank() != 3 || w.dim(0) != spec.kernel || w.dim(1) != x.dim(2)) {
    throw ShapeError("conv1d: input " + shape_str(x.shape()) + " incompatible with weight " +
                     shape_str(w.shape()) + " for kernel " + std::to_string(spec.kernel));
  }
  const std::size_t batch = x.dim(0), t_in = x.dim(1), cin = x.dim(2), cout = w.dim(2);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw ShapeError("conv1d: bias shape " + shape_str(bias.shape()));
  }
  const std::size_t t_out = reduced_length(t_in, spec);
  const std::size_t k = spec.kernel, s = spec.stride, p = spec.padding;
  const bool grad = needs_grad({&x, &w, &bias});
  Tensor out = make_output({batch, t_out, cout}, grad);
  const double* xd = x.data().data();
  const double* wd = w.data().data();
  double* yd = out.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < t_out; ++o) {
      double* yrow = yd + (b * t_out + o) * cout;
      if (bias.defined()) std::copy(bias.data().begin(), bias.data().end(), yrow);
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pos = o * s + j;
        if (pos < p || pos - p >= t_in) continue;
        const double* xrow = xd + (b * t_in + (pos - p)) * cin;
        gemm_nn(xrow, wd + j * cin * cout, yrow, 1, cin, cout);
      }
    }
  }
  detail::count_macs("conv1d", static_cast<std::uint64_t>(batch) * t_out * k * cin * cout);
  if (bias.defined()) detail::count_other("bias_add", static_cast<std::uint64_t>(batch) * t_out * cout);
  if (grad) {
    ImplPtr xi = x.impl(), wi = w.impl(), oi = out.impl();
    ImplPtr bi = bias.defined() ? bias.impl() : nullptr;
    std::vector<ImplPtr> inputs{xi, wi};
    if (bi) inputs.push_back(bi);
    record("conv1d", std::move(inputs), out,
           [xi, wi, bi, oi, batch, t_in, t_out, cin, cout, k, s, p] {
             const double* dy = oi->grad->data();
             double* dx = xi->requires_grad ? xi->grad_buffer().data() : nullptr;
             double* dw = wi->requires_grad ? wi->grad_buffer().data() : nullptr;
             for (std::size_t b = 0; b < batch; ++b) {
               for (std::size_t o = 0; o < t_out; ++o) {
                 const double* dyrow = dy + (b * t_out + o) * cout;
                 for (std::size_t j = 0; j < k; ++j) {
                   const std::size_t pos = o * s + j;
                   if (pos < p || pos - p >= t_in) continue;
                   const std::size_t row = b * t_in + (pos - p);
                   if (dx) gemm_nt(dyrow, wi->data.data() + j * cin * cout, dx + row * cin, 1, cout, cin);
                   if (dw) gemm_tn(xi->data.data() + row * cin, dyrow, dw + j * cin * cout, cin, 1, cout);
                 }
               }
             }
             if (bi && bi->requires_grad) {
               double* db = bi->grad_buffer().data();
               for (std::size_t r = 0; r < batch * t_out; ++r) {
                 for (std::size_t c = 0; c < cout; ++c) db[c] += dy[r * cout + c];
               }
             }
           });
  }
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t c = last_dim(x);
  if (gain.rank() != 1 || gain.dim(0) != c || bias.rank() != 1 || bias.dim(0) != c) {
    throw ShapeError("layernorm: affine shapes " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " for input " + shape_str(x.shape()));
  }
  if (!(eps > 0.0)) throw ConfigError("layernorm: eps must be positive");
  const std::size_t rows = x.numel() / c;
  const bool grad = needs_grad({&x, &gain, &bias});
  Tensor out = make_output(x.shape(), grad);
  // Normalized values and inverse std are kept for the backward rule.
  std::vector<double> xhat(grad ? x.numel() : 0);
  std::vector<double> rstd(grad ? rows : 0);
  const double* xd = x.data().data();
  const double* g = gain.data().data();
  const double* bb = bias.data().data();
  double* yd = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd + r * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xr[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xr[j] - mu) * rs;
      yd[r * c + j] = h * g[j] + bb[j];
      if (grad) xhat[r * c + j] = h;
    }
    if (grad) rstd[r] = rs;
  }
  detail::count_other("layernorm", flop_cost::kLayerNorm * x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), gi = gain.impl(), bi = bias.impl(), oi = out.impl();
    record("layernorm", {xi, gi, bi}, out,
           [xi, gi, bi, oi, rows, c, xhat = std::move(xhat), rstd = std::move(rstd)] {
             const double* dy = oi->grad->data();
             const double* gd = gi->data.data();
             if (gi->requires_grad || bi->requires_grad) {
               double* dg = gi->requires_grad ? gi->grad_buffer().data() : nullptr;
               double* db = bi->requires_grad ? bi->grad_buffer().data() : nullptr;
               for (std::size_t r = 0; r < rows; ++r) {
                 for (std::size_t j = 0; j < c; ++j) {
                   if (dg) dg[j] += dy[r * c + j] * xhat[r * c + j];
                   if (db) db[j] += dy[r * c + j];
                 }
               }
             }
             if (xi->requires_grad) {
               double* dx = xi->grad_buffer().data();
               const double inv_c = 1.0 / static_cast<double>(c);
               for (std::size_t r = 0; r < rows; ++r) {
                 double m1 = 0.0, m2 = 0.0;
                 for (std::size_t j = 0; j < c; ++j) {
                   const double dh = dy[r * c + j] * gd[j];
                   m1 += dh;
                   m2 += dh * xhat[r * c + j];
                 }
                 m1 *= inv_c;
                 m2 *= inv_c;
                 for (std::size_t j = 0; j < c; ++j) {
                   const double dh = dy[r * c + j] * gd[j];
                   dx[r * c + j] += rstd[r] * (dh - m1 - xhat[r * c + j] * m2);
                 }
               }
             }
           });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  const bool grad = needs_grad({&x});
  Tensor out = make_output(x.shape(), grad);
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = gelu_scalar(x.data()[i]);
  detail::count_other("gelu", flop_cost::kGelu * x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("gelu", {xi}, out, [xi, oi] {
      const double* dy = oi->grad->data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t i = 0; i < xi->data.size(); ++i) {
        dx[i] += dy[i] * gelu_grad_scalar(xi->data.data()[i]);
      }
    });
  }
  return out;
}

Tensor softmax_lastaxis(const Tensor& x) {
  const std::size_t c = last_dim(x);
  const std::size_t rows = x.numel() / c;
  const bool grad = needs_grad({&x});
  Tensor out = make_output(x.shape(), grad);
  const double* xd = x.data().data();
  double* yd = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd + r * c;
    double* yr = yd + r * c;
    const double mx = *std::max_element(xr, xr + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      z += yr[j];
    }
    const double inv = 1.0 / z;
    for (std::size_t j = 0; j < c; ++j) yr[j] *= inv;
  }
  detail::count_other("softmax", flop_cost::kSoftmax * x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("softmax", {xi}, out, [xi, oi, rows, c] {
      const double* dy = oi->grad->data();
      const double* y = oi->data.data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += dy[r * c + j] * y[r * c + j];
        for (std::size_t j = 0; j < c; ++j) dx[r * c + j] += y[r * c + j] * (dy[r * c + j] - dot);
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool suffix =
      sb.size() <= sa.size() && std::equal(sb.begin(), sb.end(), sa.end() - sb.size());
  if (!suffix) {
    throw ShapeError("add: cannot broadcast " + shape_str(sb) + " onto " + shape_str(sa));
  }
  const std::size_t nb = b.numel();
  const bool grad = needs_grad({&a, &b});
  Tensor out = make_output(sa, grad);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i % nb];
  detail::count_other("add", a.numel());
  if (grad) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    record("add", {ai, bi}, out, [ai, bi, oi, nb] {
      const double* dy = oi->grad->data();
      const std::size_t n = oi->data.size();
      if (ai->requires_grad) {
        double* da = ai->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) da[i] += dy[i];
      }
      if (bi->requires_grad) {
        double* db = bi->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) db[i % nb] += dy[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const bool grad = needs_grad({&a, &b});
  Tensor out = make_output(a.shape(), grad);
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  detail::count_other("mul", a.numel());
  if (grad) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    record("mul", {ai, bi}, out, [ai, bi, oi] {
      const double* dy = oi->grad->data();
      const std::size_t n = oi->data.size();
      // Read both inputs before writing: a and b may alias (x * x).
      std::vector<double> da(n), db(n);
      for (std::size_t i = 0; i < n; ++i) {
        da[i] = dy[i] * bi->data.data()[i];
        db[i] = dy[i] * ai->data.data()[i];
      }
      if (ai->requires_grad) {
        double* g = ai->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) g[i] += da[i];
      }
      if (bi->requires_grad) {
        double* g = bi->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) g[i] += db[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  const bool grad = needs_grad({&x});
  Tensor out = make_output(x.shape(), grad);
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = x.data()[i] * factor;
  detail::count_other("scale", x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("scale", {xi}, out, [xi, oi, factor] {
      const double* dy = oi->grad->data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t i = 0; i < xi->data.size(); ++i) dx[i] += dy[i] * factor;
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  const bool grad = needs_grad({&x});
  Tensor out = make_output({}, grad);
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.data()[0] = acc;
  detail::count_other("sum", x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("sum", {xi}, out, [xi, oi] {
      const double g = oi->grad->data()[0];
      double* dx = xi->grad_buffer().data();
      for (std::size_t i = 0; i < xi->data.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("mean_axis: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(axis);
  Shape oshape = x.shape();
  oshape.erase(oshape.begin() + static_cast<std::ptrdiff_t>(axis));
  const bool grad = needs_grad({&x});
  Tensor out = make_output(oshape, grad);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* src = x.data().data() + (o * len + l) * inner;
      double* dst = out.data().data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
    for (std::size_t i = 0; i < inner; ++i) out.data()[o * inner + i] *= inv;
  }
  detail::count_other("mean", x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("mean_axis", {xi}, out, [xi, oi, outer, inner, len, inv] {
      const double* dy = oi->grad->data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t l = 0; l < len; ++l) {
          for (std::size_t i = 0; i < inner; ++i) {
            dx[(o * len + l) * inner + i] += dy[o * inner + i] * inv;
          }
        }
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  const bool grad = needs_grad({&x});
  Tensor out = make_output(std::move(shape), grad);
  std::copy(x.data().begin(), x.data().end(), out.data().begin());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("reshape", {xi}, out, [xi, oi] {
      const double* dy = oi->grad->data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t i = 0; i < xi->data.size(); ++i) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  std::vector<bool> seen(r, false);
  if (axes.size() != r) throw ShapeError("permute: axes rank mismatch");
  for (std::size_t a : axes) {
    if (a >= r || seen[a]) throw ShapeError("permute: invalid axes");
    seen[a] = true;
  }
  Shape oshape(r);
  for (std::size_t i = 0; i < r; ++i) oshape[i] = x.dim(axes[i]);
  // Strides of the input expressed in output axis order.
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * x.dim(i);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) src_stride[i] = in_stride[axes[i]];
  const std::size_t n = x.numel();
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < r; ++i) src += idx[i] * src_stride[i];
    map[flat] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < oshape[i]) break;
      idx[i] = 0;
    }
  }
  const bool grad = needs_grad({&x});
  Tensor out = make_output(oshape, grad);
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[map[i]];
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("permute", {xi}, out, [xi, oi, map = std::move(map)] {
      const double* dy = oi->grad->data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t i = 0; i < map.size(); ++i) dx[map[i]] += dy[i];
    });
  }
  return out;
}

Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1) {
  std::vector<std::size_t> axes(x.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  if (axis0 >= axes.size() || axis1 >= axes.size()) throw ShapeError("transpose: axis out of range");
  std::swap(axes[axis0], axes[axis1]);
  return permute(x, axes);
}

Tensor dropout(const Tensor& x, double p, bool train, const DropoutKey& key) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  const bool grad = needs_grad({&x});
  Tensor out = make_output(x.shape(), grad);
  const double keep_scale = 1.0 / (1.0 - p);
  const std::uint64_t base = hash_words(key.seed, key.stream, key.step);
  std::vector<double> mask(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    mask[i] = unit_double(splitmix64(base ^ (i * 0xd1b54a32d192ed03ULL))) >= p ? keep_scale : 0.0;
    out.data()[i] = x.data()[i] * mask[i];
  }
  detail::count_other("dropout", x.numel());
  if (grad) {
    ImplPtr xi = x.impl(), oi = out.impl();
    record("dropout", {xi}, out, [xi, oi, mask = std::move(mask)] {
      const double* dy = oi->grad->data();
      double* dx = xi->grad_buffer().data();
      for (std::size_t i = 0; i < mask.size(); ++i) dx[i] += dy[i] * mask[i];
    });
  }
  return out;
}

Tensor cross_entropy_label_smoothed(const Tensor& logits, std::span<const std::size_t> targets,
                                    double smoothing) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size()) {
    throw ShapeError("cross_entropy: logits " + shape_str(logits.shape()) + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (smoothing < 0.0 || smoothing > 1.0) throw ConfigError("cross_entropy: smoothing must be in [0, 1]");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  for (std::size_t t : targets) {
    if (t >= c) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) +
                              " out of range for " + std::to_string(c) + " classes");
    }
  }
  const bool grad = needs_grad({&logits});
  Tensor out = make_output({}, grad);
  std::vector<double> probs(n * c);
  double total = 0.0;
  const double off = smoothing / static_cast<double>(c);
  for (std::size_t r = 0; r < n; ++r) {
    const double* z = logits.data().data() + r * c;
    const double mx = *std::max_element(z, z + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(z[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) {
      const double logp = z[j] - lse;
      probs[r * c + j] = std::exp(logp);
      const double q = (j == targets[r] ? 1.0 - smoothing : 0.0) + off;
      total -= q * logp;
    }
  }
  out.data()[0] = total / static_cast<double>(n);
  detail::count_other("cross_entropy", flop_cost::kSoftmax * n * c);
  if (grad) {
    ImplPtr li = logits.impl(), oi = out.impl();
    std::vector<std::size_t> tgt(targets.begin(), targets.end());
    record("cross_entropy", {li}, out,
           [li, oi, n, c, off, smoothing, probs = std::move(probs), tgt = std::move(tgt)] {
             const double g = oi->grad->data()[0] / static_cast<double>(n);
             double* dz = li->grad_buffer().data();
             for (std::size_t r = 0; r < n; ++r) {
               for (std::size_t j = 0; j < c; ++j) {
                 const double q = (j == tgt[r] ? 1.0 - smoothing : 0.0) + off;
                 dz[r * c + j] += g * (probs[r * c + j] - q);
               }
             }
           });
  }
  return out;
}

}  // namespace redapt
