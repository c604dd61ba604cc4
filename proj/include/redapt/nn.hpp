// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_NN_HPP_
#define REDAPT_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "redapt/ops.hpp"
#include "redapt/param_set.hpp"
#include "redapt/rng.hpp"
#include "redapt/tensor.hpp"

namespace redapt {

/// Per-call execution flags shared by every block.
struct ForwardContext {
  bool train = false;
  double dropout_p = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  DropoutKey key(std::uint64_t stream) const { return {seed, stream, step}; }
};

/// Pre-norm Transformer encoder layer weights.
struct TransformerLayerParams {
  std::size_t d_model = 0;
  std::size_t n_heads = 0;
  std::size_t d_ffn = 0;

  Tensor ln1_gain, ln1_bias;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gain, ln2_bias;
  Tensor w1, b1, w2, b2;

  /// Throws ConfigError unless d_model is a positive multiple of n_heads.
  static TransformerLayerParams init(std::size_t d_model, std::size_t n_heads,
                                     std::size_t d_ffn, Rng& rng);
  void collect(ParamSet& out, const std::string& prefix) const;
  std::size_t head_dim() const { return d_model / n_heads; }
};

/// Optional capture of attention probabilities [b, heads, t, t].
struct AttentionProbe {
  Tensor weights;
};

/// x + O(softmax(Q K^T / sqrt(d_h)) V) over LayerNorm(x). dropout_stream
/// distinguishes dropout sites of different layers.
Tensor mhsa_forward(const Tensor& x, const TransformerLayerParams& params,
                    const ForwardContext& ctx = {}, std::uint64_t dropout_stream = 0,
                    AttentionProbe* probe = nullptr);

/// Attention sublayer followed by the GELU feed-forward sublayer, both pre-norm
/// with residuals. Output shape equals input shape.
Tensor transformer_layer_forward(const Tensor& x, const TransformerLayerParams& params,
                                 const ForwardContext& ctx = {},
                                 std::uint64_t dropout_stream = 0);

/// Strided CNN stack turning raw samples into frames.
struct FeatureExtractorConfig {
  std::vector<std::size_t> kernels{10, 3, 3, 3, 3, 2, 2};
  std::vector<std::size_t> strides{5, 2, 2, 2, 2, 2, 2};
  std::size_t channels = 512;
  std::size_t downsample = 320;  // must equal the product of strides

  void validate() const;
  std::size_t receptive_field() const;
  /// Frames produced for a raw input; throws LengthError when too short.
  std::size_t output_length(std::size_t samples) const;
  /// Lengths after each conv layer.
  std::vector<std::size_t> layer_lengths(std::size_t samples) const;
};

struct FeatureExtractorParams {
  struct Layer {
    Tensor w, b, ln_gain, ln_bias;
  };
  std::vector<Layer> layers;

  static FeatureExtractorParams init(const FeatureExtractorConfig& cfg, Rng& rng);
  void collect(ParamSet& out, const std::string& prefix) const;
};

/// wave [b, samples] -> [b, frames, channels]; each layer is conv -> LayerNorm -> GELU.
Tensor feature_extractor_forward(const Tensor& wave, const FeatureExtractorConfig& cfg,
                                 const FeatureExtractorParams& params);

}  // namespace redapt

#endif  // REDAPT_NN_HPP_
