// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "redapt/autodiff.hpp"
#include "redapt/config_io.hpp"
#include "redapt/rng.hpp"

namespace redapt {

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("percentile of no samples");
  std::sort(samples.begin(), samples.end());
  const double rank = std::ceil(q / 100.0 * static_cast<double>(samples.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(samples.size()))) - 1;
  return samples[idx];
}

BenchReport run_bench(const EncoderConfig& cfg, const BenchOptions& opt) {
  cfg.validate();
  if (opt.iters == 0) throw ConfigError("bench needs at least one measured iteration");
  if (opt.batch == 0) throw ConfigError("bench batch must be positive");
  if (cfg.d_model * cfg.layers > kBenchWidthDepthCap && !opt.allow_large) {
    throw BenchRefused("d_model*layers = " + std::to_string(cfg.d_model * cfg.layers) +
                       " exceeds the benchmark cap of " + std::to_string(kBenchWidthDepthCap) +
                       "; pass --allow-large to run anyway");
  }
  length_trace(cfg, opt.raw_len);

  const EncoderParams params = EncoderParams::init(cfg, opt.seed);
  Tensor wave = Tensor::zeros({opt.batch, opt.raw_len});
  {
    Rng rng(hash_words(opt.seed, 0x77617665ULL));
    for (double& x : wave.data()) x = rng.normal();
  }

  BenchReport rep;
  rep.config_digest = config_digest(cfg);
  rep.positions = cfg.positions;
  rep.batch = opt.batch;
  rep.raw_len = opt.raw_len;
  rep.warmup = opt.warmup;
  rep.iters = opt.iters;

  {
    NoGradScope no_grad;
    for (std::size_t i = 0; i < opt.warmup; ++i) encoder_forward(wave, params, cfg);
    for (std::size_t i = 0; i < opt.iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const Tensor out = encoder_forward(wave, params, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      rep.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
  }

  {
    ParamSet ps;
    const EncoderParams trained = params.clone();
    trained.collect(ps);
    ps.set_requires_grad(true);
    Tape tape;
    const std::int64_t base = alloc_tracker::live_elements();
    alloc_tracker::reset_peak();
    {
      TapeScope scope(tape);
      const Tensor out = encoder_forward(wave, trained, cfg);
    }
    rep.peak_tracked_elements = alloc_tracker::peak_elements() - base;
  }

  const double total = std::accumulate(rep.seconds.begin(), rep.seconds.end(), 0.0);
  rep.throughput = static_cast<double>(opt.batch * opt.iters) / total;
  rep.mean_s = total / static_cast<double>(rep.seconds.size());
  rep.p50_s = percentile(rep.seconds, 50.0);
  rep.p95_s = percentile(rep.seconds, 95.0);
  return rep;
}

std::string bench_report_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config_digest"] = r.config_digest;
  j["positions"] = r.positions.positions;
  j["batch"] = r.batch;
  j["raw_len"] = r.raw_len;
  j["warmup"] = r.warmup;
  j["iters"] = r.iters;
  j["seconds"] = r.seconds;
  j["throughput_seq_per_s"] = r.throughput;
  j["mean_s"] = r.mean_s;
  j["p50_s"] = r.p50_s;
  j["p95_s"] = r.p95_s;
  j["peak_tracked_elements"] = r.peak_tracked_elements;
  return j.dump(2);
}

std::string bench_sweep_csv(const std::vector<BenchReport>& reports) {
  std::ostringstream os;
  os << std::setprecision(10) << "batch,throughput,mean_s,p50_s,p95_s,peak_elements\n";
  for (const auto& r : reports) {
    os << r.batch << ',' << r.throughput << ',' << r.mean_s << ',' << r.p50_s << ',' << r.p95_s << ','
       << r.peak_tracked_elements << '\n';
  }
  return os.str();
}

}  // namespace redapt
