// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_REDAPT_BLOCK_HPP_
#define REDAPT_REDAPT_BLOCK_HPP_

#include <cstdint>
#include <string>

#include "redapt/ops.hpp"
#include "redapt/param_set.hpp"
#include "redapt/rng.hpp"
#include "redapt/tensor.hpp"

namespace redapt {

/// Reducer adaptor: a strided pooling convolution followed by a
/// length-preserving restoration convolution with a residual connection.
///
///   a'  = GELU(Norm(Conv1(a)))           length n -> reduced_length(n, block1)
///   a'' = a' + GELU(Norm(Conv2(a')))     length preserved
///
/// The ablation flags remove the second convolution (returning a'), every
/// LayerNorm, or every GELU in the block.
struct RedAptSpec {
  std::size_t channels = 0;
  ReductionSpec block1{3, 2, 1};
  ReductionSpec block2{3, 1, 1};
  bool enable_second_cnn = true;
  bool enable_layernorm = true;
  bool enable_gelu = true;

  /// Throws ConfigError for zero channels, zero kernel/stride, or a
  /// non-length-preserving block2.
  void validate() const;
  friend bool operator==(const RedAptSpec&, const RedAptSpec&) = default;
};

struct RedAptParams {
  Tensor conv1_w, conv1_b, ln1_gain, ln1_bias;
  Tensor conv2_w, conv2_b, ln2_gain, ln2_bias;

  /// Fan-in scaled uniform conv weights, zero biases, unit LayerNorm gains.
  /// Tensors for disabled components are left undefined.
  static RedAptParams init(const RedAptSpec& spec, Rng& rng);
  void collect(ParamSet& out, const std::string& prefix) const;
};

/// Closed-form parameter count: k1*d^2 + d + k2*d^2 + d plus 2d per LayerNorm.
std::uint64_t param_count(const RedAptSpec& spec);

/// a [b, n, d] -> [b, reduced_length(n, block1), d].
Tensor redapt_forward(const Tensor& a, const RedAptParams& params, const RedAptSpec& spec);

}  // namespace redapt

#endif  // REDAPT_REDAPT_BLOCK_HPP_
