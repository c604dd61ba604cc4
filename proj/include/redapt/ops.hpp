// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_OPS_HPP_
#define REDAPT_OPS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "redapt/tensor.hpp"

namespace redapt {

/// Kernel k, stride s and zero padding p of a 1-D convolution over time.
struct ReductionSpec {
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t padding = 1;

  friend bool operator==(const ReductionSpec&, const ReductionSpec&) = default;
};

/// Output length floor((n + 2p - k) / s) + 1. Throws LengthError when
/// n + 2p < k and ConfigError when k or s is zero.
std::size_t reduced_length(std::size_t n, const ReductionSpec& spec);

// Non-MAC flop charges per element, shared by the instrumented ops and the
// closed-form cost model.
namespace flop_cost {
inline constexpr std::uint64_t kLayerNorm = 8;
inline constexpr std::uint64_t kGelu = 8;
inline constexpr std::uint64_t kSoftmax = 4;
inline constexpr std::uint64_t kElementwise = 1;
}  // namespace flop_cost

/// sqrt(2/pi) as used by the tanh GELU approximation.
inline constexpr double kGeluTanhCoeff = 0.7978845608;
inline constexpr double kGeluCubicCoeff = 0.044715;

// Scalar GELU and its derivative (tanh approximation).
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

/// Identifies one dropout site invocation; the mask is a pure function of
/// (seed, stream, step, element index).
struct DropoutKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t step = 0;
};

// A[m,k] x B[k,n] -> [m,n]; counts m*n*k MACs under "matmul".
Tensor matmul(const Tensor& a, const Tensor& b);
// Batched product A[B,m,k] x B[B,k,n] -> [B,m,n].
Tensor bmm(const Tensor& a, const Tensor& b);
// x[..., in] * w[in, out] (+ bias[out]); MACs counted as a matmul.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});

// x[b,t,c_in] conv w[k,c_in,c_out] + bias[c_out] -> [b,t',c_out] with zero padding.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
              const ReductionSpec& spec);

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps = 1e-5);
Tensor gelu(const Tensor& x);
Tensor softmax_lastaxis(const Tensor& x);

// Elementwise a + b; b may also match a trailing suffix of a's shape (bias broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mean_axis(const Tensor& x, std::size_t axis);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1);

/// Inverted dropout; returns x unchanged when !train or p == 0.
Tensor dropout(const Tensor& x, double p, bool train, const DropoutKey& key);

/// Mean over rows of -sum_c q_c log softmax(logits)_c with
/// q = (1 - smoothing) * onehot(target) + smoothing / C.
Tensor cross_entropy_label_smoothed(const Tensor& logits,
                                    std::span<const std::size_t> targets,
                                    double smoothing);

}  // namespace redapt

#endif  // REDAPT_OPS_HPP_
