// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_ENCODER_HPP_
#define REDAPT_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "redapt/nn.hpp"
#include "redapt/param_set.hpp"
#include "redapt/redapt_block.hpp"
#include "redapt/tensor.hpp"

namespace redapt {

/// 0-based indices of Transformer layers whose OUTPUT is pooled by a RedApt block.
struct PositionConfig {
  std::vector<std::size_t> positions;

  std::size_t m() const { return positions.size(); }
  bool contains(std::size_t layer) const;
  /// Throws ConfigError unless strictly increasing and all < layers.
  void validate(std::size_t layers) const;

  friend bool operator==(const PositionConfig&, const PositionConfig&) = default;
  friend auto operator<=>(const PositionConfig&, const PositionConfig&) = default;
};

struct EncoderConfig {
  std::size_t layers = 8;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 256;
  FeatureExtractorConfig feature_extractor{};
  RedAptSpec redapt{};  // channels are forced to d_model
  PositionConfig positions{};
  std::size_t reinit_top_k = 0;

  /// Runnable desk-scale model: 8 layers, width 64, 4 heads, FFN 256,
  /// 32-channel feature extractor.
  static EncoderConfig desk();
  /// wav2vec2-large shape (24 layers, 1024 wide, 16 heads, FFN 4096,
  /// 512-channel extractor). Used by the analytical cost model only.
  static EncoderConfig w2v2_large();

  RedAptSpec block_spec() const;
  void validate() const;
};

/// Sequence lengths through the encoder: n0 from the feature extractor, the
/// input length of every Transformer layer, and the final output length.
struct LengthTrace {
  std::size_t raw_samples = 0;
  std::size_t n0 = 0;
  std::vector<std::size_t> layer_input;
  std::size_t final_length = 0;
};

LengthTrace length_trace(const EncoderConfig& cfg, std::size_t raw_samples);

struct EncoderParams {
  FeatureExtractorParams feature_extractor;
  Tensor feature_ln_gain, feature_ln_bias;
  Tensor proj_w, proj_b;
  std::vector<TransformerLayerParams> layers;
  std::vector<RedAptParams> blocks;  // one per entry of cfg.positions
  Tensor final_ln_gain, final_ln_bias;

  /// Each component draws from its own seed-derived stream, so adding or
  /// removing RedApt blocks leaves every other tensor unchanged.
  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);
  EncoderParams clone() const;

  void collect(ParamSet& out, const std::string& prefix = "encoder.") const;
  /// Feature extractor weights only.
  void collect_feature_extractor(ParamSet& out, const std::string& prefix = "encoder.") const;
  /// Everything except the feature extractor.
  void collect_trainable(ParamSet& out, const std::string& prefix = "encoder.") const;
};

/// wave [b, samples] -> [b, length_trace(cfg).final_length, d_model].
/// MAC counts are labelled "fe.", "proj.", "layer<i>.", "redapt<i>.".
Tensor encoder_forward(const Tensor& wave, const EncoderParams& params, const EncoderConfig& cfg,
                       const ForwardContext& ctx = {});

/// The two halves of encoder_forward: feature extractor output [b, frames, channels],
/// then everything after it.
Tensor encoder_features(const Tensor& wave, const EncoderParams& params, const EncoderConfig& cfg);
Tensor encoder_forward_from_features(const Tensor& features, const EncoderParams& params,
                                     const EncoderConfig& cfg, const ForwardContext& ctx = {});

/// Copy of params with the top k Transformer layers re-drawn from the
/// initializer stream keyed by seed; other tensors are bit-identical.
EncoderParams reinit_top_layers(const EncoderParams& params, const EncoderConfig& cfg,
                                std::size_t k, std::uint64_t seed);

}  // namespace redapt

#endif  // REDAPT_ENCODER_HPP_
