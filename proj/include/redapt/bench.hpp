// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_BENCH_HPP_
#define REDAPT_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "redapt/encoder.hpp"

namespace redapt {

/// Largest d_model * layers benchmarked without allow_large.
inline constexpr std::size_t kBenchWidthDepthCap = 4096;

class BenchRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchOptions {
  std::size_t batch = 1;
  std::size_t raw_len = 16000;
  std::size_t warmup = 1;
  std::size_t iters = 5;
  std::uint64_t seed = 0;
  bool allow_large = false;
};

struct BenchReport {
  std::string config_digest;
  PositionConfig positions;
  std::size_t batch = 0;
  std::size_t raw_len = 0;
  std::size_t warmup = 0;
  std::size_t iters = 0;
  std::vector<double> seconds;  // one inference forward per entry
  double throughput = 0.0;      // sequences per second: batch * iters / sum(seconds)
  double mean_s = 0.0, p50_s = 0.0, p95_s = 0.0;
  // Peak tracked elements above the pre-call baseline during one forward
  // that records a tape, i.e. with activations kept for a backward pass.
  std::int64_t peak_tracked_elements = 0;
};

/// Times inference forwards of a seeded random model on a seeded random batch.
/// Throws BenchRefused when d_model * layers exceeds the cap without allow_large.
BenchReport run_bench(const EncoderConfig& cfg, const BenchOptions& options);

/// Nearest-rank percentile of the samples, q in [0, 100].
double percentile(std::vector<double> samples, double q);

std::string bench_report_json(const BenchReport& report);
/// One row per batch size: batch,throughput,mean_s,p50_s,p95_s,peak_elements.
std::string bench_sweep_csv(const std::vector<BenchReport>& reports);

}  // namespace redapt

#endif  // REDAPT_BENCH_HPP_
