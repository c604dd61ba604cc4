// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_TRAINING_HPP_
#define REDAPT_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "redapt/audio.hpp"
#include "redapt/checkpoint.hpp"
#include "redapt/encoder.hpp"
#include "redapt/param_set.hpp"

namespace redapt {

struct OptimizerConfig {
  double lr = 5e-4;
  double beta1 = 0.99;
  double beta2 = 0.98;
  double eps = 1e-8;
  double clip_norm = 20.0;
  double label_smoothing = 0.2;
  double dropout = 0.1;
  // Learning rate is multiplied by plateau_factor after plateau_patience
  // evaluations without a new best validation loss.
  std::size_t plateau_patience = 3;
  double plateau_factor = 0.5;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ParamSet& params);
};

struct ClipReport {
  double norm_before = 0.0;
  double norm_after = 0.0;
  double scale = 1.0;
};

double global_norm(const std::vector<Tensor>& grads);
/// Scales grads in place so their global norm is at most max_norm.
ClipReport clip_by_global_norm(std::vector<Tensor>& grads, double max_norm);

/// Current gradient of each parameter (zeros where none was accumulated).
std::vector<Tensor> gather_grads(const ParamSet& params);

/// Clip, then one bias-corrected Adam update of params in place.
/// Throws ShapeError if grads or state do not match params.
ClipReport adam_step(const ParamSet& params, std::vector<Tensor> grads, AdamState& state,
                     const OptimizerConfig& cfg, double lr);

struct ToyTaskConfig {
  double clip_seconds = 0.5;
  std::size_t train_clips = 256;
  std::size_t val_clips = 128;
  std::size_t batch = 8;
  std::size_t eval_every = 25;
  double noise_std = 0.1;
  bool augment = false;
  AugmentPolicy policy{};
  bool freeze_head = false;
  bool freeze_feature_extractor = true;
};

struct MetricsRow {
  std::size_t step = 0;
  double loss = 0.0;      // validation loss (label-smoothed)
  double accuracy = 0.0;  // validation accuracy in [0, 1]
  double lr = 0.0;
};

struct TrainResult {
  std::vector<MetricsRow> history;
  EncoderParams params;
  Tensor head_w, head_b;
  AdamState optimizer;
  Checkpoint checkpoint;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trains encoder + linear head on the 4-class tone task. Validation metrics
/// are recorded at step 0, every eval_every steps and at the last step.
/// Throws TrainingError if the loss becomes non-finite.
TrainResult train_toy(const EncoderConfig& cfg, const OptimizerConfig& opt, std::size_t steps,
                      std::uint64_t seed, const ToyTaskConfig& task = {});

/// "step,loss,accuracy,lr" with full precision.
std::string metrics_csv(const std::vector<MetricsRow>& history);

/// Negative final validation loss of a short toy run with the given positions.
double toy_quality(const EncoderConfig& cfg, const PositionConfig& positions,
                   const OptimizerConfig& opt, std::size_t steps, std::uint64_t seed,
                   const ToyTaskConfig& task = {});

}  // namespace redapt

#endif  // REDAPT_TRAINING_HPP_
