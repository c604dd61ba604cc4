// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_POSITION_SEARCH_HPP_
#define REDAPT_POSITION_SEARCH_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "redapt/cost_model.hpp"
#include "redapt/encoder.hpp"

namespace redapt {

/// Inclusive layer range [lo, hi] a replacement position may be drawn from.
struct Bucket {
  std::size_t lo = 0;
  std::size_t hi = 0;

  bool contains(std::size_t layer) const { return layer >= lo && layer <= hi; }
  friend bool operator==(const Bucket&, const Bucket&) = default;
};

/// low-mid and mid-top halves of [0, layers-1]; for 24 layers: [0,11], [12,23].
std::vector<Bucket> default_buckets(std::size_t layers);

/// Remove-one variants plus replace-one variants whose new position lies in
/// the bucket and keeps the list strictly increasing. Sorted, deduplicated,
/// never contains config itself.
std::vector<PositionConfig> neighbors(const PositionConfig& config, const Bucket& bucket);
/// Union over several buckets.
std::vector<PositionConfig> neighbors(const PositionConfig& config, std::span<const Bucket> buckets);

using QualityFn = std::function<double(const PositionConfig&)>;
using FlopsRatioFn = std::function<double(const PositionConfig&)>;

/// Cost-model FLOPs ratio of each configuration at a fixed input length.
FlopsRatioFn make_flops_ratio_fn(const EncoderConfig& cfg, std::size_t raw_samples,
                                 const CostModelOptions& options = {});

struct SearchOptions {
  std::size_t max_rounds = 10;
  std::vector<Bucket> buckets;  // empty: default_buckets(layers)
  std::size_t layers = 24;
  /// Worker threads for neighbor evaluation; the evaluator must then be
  /// safe to call concurrently. Results do not depend on this value.
  unsigned threads = 1;
};

struct SearchRecord {
  std::size_t round = 0;
  PositionConfig config;
  double quality = 0.0;
  double flops_ratio = 1.0;
};

struct SearchResult {
  PositionConfig best;
  double best_quality = 0.0;
  double best_flops_ratio = 1.0;
  std::size_t rounds = 0;
  std::vector<SearchRecord> trace;  // one record per evaluation, in order
};

/// Greedy backward selection. Each round evaluates every unseen neighbor of
/// the incumbent and moves to the best one (highest quality, then lowest
/// FLOPs ratio, then lexicographically smallest) only if its quality is
/// strictly higher; ties keep the incumbent.
SearchResult backward_select(const PositionConfig& start, const QualityFn& evaluator,
                             const FlopsRatioFn& flops_ratio, const SearchOptions& options);

/// One JSON object per line with schema_version, round, positions, quality, flops_ratio.
std::string search_trace_jsonl(const SearchResult& result);

}  // namespace redapt

#endif  // REDAPT_POSITION_SEARCH_HPP_
