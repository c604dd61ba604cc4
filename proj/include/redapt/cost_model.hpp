// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_COST_MODEL_HPP_
#define REDAPT_COST_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "redapt/encoder.hpp"

namespace redapt {

// Conventions:
//  * FLOPs = 2 x MACs. Only matmul/conv multiply-accumulates enter total_flops.
//  * Elementwise work (norms, softmax, GELU, bias and residual adds) is
//    reported separately in elementwise_flops using the flop_cost constants.
//  * Memory is a count of activation elements retained by a forward pass, not
//    bytes; per Transformer layer it is alpha*n*d + heads*n^2.
//  * The model is encoder-only.

struct CostModelOptions {
  /// Multiplier applied to feature-extractor FLOPs (calibration knob).
  double fe_cost_scale = 1.0;
  /// Activation elements retained per token and channel in each Transformer layer.
  double activation_retention = 12.0;
};

/// Feature-extractor scale for the wav2vec2-large preset, obtained once from
/// calibrate_feature_share() at positions [15,18,19], 88,000 samples, target
/// FLOPs ratio 0.81. Reproduced by a unit test.
inline constexpr double kW2v2LargeFeatureCostScale = 1.1345787574908681;

CostModelOptions w2v2_large_cost_options();

struct CostRow {
  std::string label;  // "fe", "proj", "layer<i>", "redapt<i>", "final"
  std::size_t n = 0;  // sequence length entering the component
  std::uint64_t macs = 0;
  double flops = 0.0;  // 2 * macs (times fe_cost_scale for the "fe" row)
  double memory = 0.0;
  double elementwise_flops = 0.0;
};

struct CostReport {
  PositionConfig positions;
  std::size_t raw_samples = 0;
  std::size_t batch = 1;
  std::vector<CostRow> rows;
  std::uint64_t total_macs = 0;
  double total_flops = 0.0;
  double activation_memory_elements = 0.0;
  double elementwise_flops = 0.0;
  std::uint64_t param_count = 0;
  // Relative to the same model with no RedApt blocks.
  double flops_ratio = 1.0;
  double memory_ratio = 1.0;
  double param_ratio = 1.0;
};

/// Closed-form cost of cfg with the given positions (cfg.positions is ignored).
CostReport estimate(const EncoderConfig& cfg, const PositionConfig& positions,
                    std::size_t raw_samples, std::size_t batch = 1,
                    const CostModelOptions& options = {});

/// Total parameters of the encoder (feature extractor through final norm).
std::uint64_t encoder_param_count(const EncoderConfig& cfg, const PositionConfig& positions);

/// fe_cost_scale making estimate(...).flops_ratio equal target_ratio.
/// Throws ConfigError when no positive scale achieves it.
double calibrate_feature_share(const EncoderConfig& cfg, const PositionConfig& positions,
                               std::size_t raw_samples, double target_ratio,
                               const CostModelOptions& base = {});

struct RatioRow {
  PositionConfig positions;
  double flops_ratio = 1.0;
  double memory_ratio = 1.0;
};

/// One row per configuration, sorted by flops_ratio (ties by positions).
std::vector<RatioRow> ratio_table(const EncoderConfig& cfg,
                                  const std::vector<PositionConfig>& configs,
                                  std::size_t raw_samples, const CostModelOptions& options = {});

/// CSV with header "layer,n_i,flops,mem".
std::string cost_report_csv(const CostReport& report);
/// JSON document with a schema_version field.
std::string cost_report_json(const CostReport& report);

}  // namespace redapt

#endif  // REDAPT_COST_MODEL_HPP_
