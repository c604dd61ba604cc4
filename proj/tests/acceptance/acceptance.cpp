// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_cases.hpp"
#include "redapt/audio.hpp"
#include "redapt/autodiff.hpp"
#include "redapt/bench.hpp"
#include "redapt/checkpoint.hpp"
#include "redapt/config_io.hpp"
#include "redapt/cost_model.hpp"
#include "redapt/ops.hpp"
#include "redapt/redapt_block.hpp"
#include "redapt/training.hpp"

using namespace redapt;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(-1.0, 1.0);
  return t;
}

// Block positions used for m = 0..3 in the desk-scale measurements.
const std::vector<PositionConfig> kDeskLadder{{{}}, {{4}}, {{1, 4}}, {{0, 1, 2}}};

Outcome flops_ratios() {
  const auto t0 = Clock::now();
  const EncoderConfig cfg = EncoderConfig::w2v2_large();
  CostModelOptions opt;
  opt.fe_cost_scale = calibrate_feature_share(cfg, {{15, 18, 19}}, 88000, 0.81);
  const std::vector<std::pair<PositionConfig, double>> table{
      {{{15}}, 0.86}, {{{15, 20}}, 0.84}, {{{15, 18, 19}}, 0.81}, {{{14, 15, 18, 19}}, 0.76}};
  bool ok = true;
  std::string detail = "scale=" + fmt(opt.fe_cost_scale, 6);
  for (const auto& [pc, target] : table) {
    const double r = estimate(cfg, pc, 88000, 1, opt).flops_ratio;
    ok &= std::abs(r - target) <= 0.05;
    detail += " " + positions_str(pc) + "=" + fmt(r) + "/" + fmt(target);
  }
  const double secs = seconds_since(t0);
  ok &= secs < 1.0;
  return {ok, detail};
}

Outcome position_ordering() {
  const auto t0 = Clock::now();
  const EncoderConfig cfg = EncoderConfig::w2v2_large();
  const auto opt = w2v2_large_cost_options();
  const std::vector<PositionConfig> expected{{{2, 5, 6}},    {{7, 9, 11}},   {{13, 15, 20}}, {{14, 18, 20}},
                                             {{15, 18, 19}}, {{16, 18, 20}}, {{17, 19, 20}}};
  bool ok = true;
  std::string detail;
  double prev = -1.0;
  for (const auto& pc : expected) {
    const double r = estimate(cfg, pc, 88000, 1, opt).flops_ratio;
    ok &= r > prev;
    prev = r;
    detail += positions_str(pc) + "=" + fmt(r) + " ";
  }
  ok &= seconds_since(t0) < 1.0;
  return {ok, detail + (ok ? "strictly increasing" : "ORDER BROKEN")};
}

Outcome length_algebra() {
  EncoderConfig cfg = EncoderConfig::w2v2_large();
  const std::size_t n0 = length_trace(cfg, 88000).n0;
  cfg.positions = {{13, 15, 20}};
  const std::size_t final_len = length_trace(cfg, 88000).final_length;
  Rng rng(31337);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t start = 1 + rng.below(100000);
    const std::size_t m = rng.below(10);
    std::size_t n = start;
    for (std::size_t i = 0; i < m; ++i) n = reduced_length(n, {3, 2, 1});
    const std::size_t lo = start >> m;
    if (n < lo || n > lo + m) ++violations;
  }
  const bool ok = n0 == 274 && final_len == 35 && violations == 0;
  return {ok, "n0=" + std::to_string(n0) + " final[13,15,20]=" + std::to_string(final_len) +
                  " law violations=" + std::to_string(violations) + "/1000"};
}

Outcome mac_oracle() {
  const auto t0 = Clock::now();
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ffn = 64;
  cfg.feature_extractor.channels = 8;
  const std::size_t raw = 20560;  // 64 frames
  if (cfg.feature_extractor.output_length(raw) != 64) return {false, "n0 != 64"};
  bool exact = true;
  double worst = 0.0;
  for (const PositionConfig& pc : {PositionConfig{}, PositionConfig{{0}}, PositionConfig{{1}}, PositionConfig{{0, 1}}}) {
    cfg.positions = pc;
    const auto params = EncoderParams::init(cfg, 3);
    MacCounter counter;
    {
      MacCounterScope scope(counter);
      NoGradScope no_grad;
      encoder_forward(Tensor::zeros({1, raw}), params, cfg);
    }
    const CostReport rep = estimate(cfg, pc, raw, 1);
    exact &= rep.total_macs == counter.total_macs();
    const double model = 2.0 * static_cast<double>(rep.total_macs) + rep.elementwise_flops;
    const double measured =
        2.0 * static_cast<double>(counter.total_macs()) + static_cast<double>(counter.total_other_flops());
    worst = std::max(worst, std::abs(model - measured) / measured);
  }
  const double secs = seconds_since(t0);
  return {exact && worst < 0.02 && secs < 10.0,
          std::string("MACs ") + (exact ? "exact" : "MISMATCH") + ", with non-MAC ops max rel diff " +
              fmt(100.0 * worst, 3) + "%"};
}

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t count = 0;
  for (const auto& c : gradcheck::all_cases()) {
    const double e = gradcheck::worst_error(c, 10);
    ++count;
    if (e >= worst) {
      worst = e;
      worst_name = c.name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0, std::to_string(count) + " cases x 10 seeds, max rel error " +
                                            fmt(worst, 3) + " (" + worst_name + ")"};
}

struct TrainingRun {
  TrainResult result;
  double seconds = 0.0;
};

std::vector<TrainingRun> training_runs;

Outcome trainability() {
  bool ok = true;
  std::string detail;
  for (std::size_t m = 0; m < kDeskLadder.size(); ++m) {
    EncoderConfig cfg = EncoderConfig::desk();
    cfg.positions = kDeskLadder[m];
    const auto t0 = Clock::now();
    TrainingRun tr{train_toy(cfg, OptimizerConfig{}, 500, 7), 0.0};
    tr.seconds = seconds_since(t0);
    const auto& h = tr.result.history;
    const double initial = h.front().loss;
    long halved_at = -1, acc_at = -1;
    for (const auto& row : h) {
      if (halved_at < 0 && row.step <= 200 && row.loss <= 0.5 * initial) halved_at = static_cast<long>(row.step);
      if (acc_at < 0 && row.step <= 500 && row.accuracy >= 0.9) acc_at = static_cast<long>(row.step);
    }
    const bool this_ok = halved_at >= 0 && acc_at >= 0 && tr.seconds < 300.0;
    ok &= this_ok;
    detail += "m=" + std::to_string(m) + positions_str(cfg.positions) + " loss " + fmt(initial, 3) + "->" +
              fmt(h.back().loss, 3) + " halved@" + std::to_string(halved_at) + " acc90@" +
              std::to_string(acc_at) + " " + fmt(tr.seconds, 3) + "s; ";
    training_runs.push_back(std::move(tr));
  }
  return {ok, detail};
}

Outcome measured_trend() {
  constexpr int kRounds = 5;
  const EncoderConfig base = EncoderConfig::desk();
  std::vector<double> best_tp(kDeskLadder.size(), 0.0);
  std::vector<std::uint64_t> peak(kDeskLadder.size(), 0);
  BenchOptions opt;
  opt.raw_len = 88000;
  opt.warmup = 1;
  opt.iters = 3;
  for (int round = 0; round < kRounds; ++round) {
    for (std::size_t m = 0; m < kDeskLadder.size(); ++m) {
      EncoderConfig cfg = base;
      cfg.positions = kDeskLadder[m];
      const BenchReport r = run_bench(cfg, opt);
      best_tp[m] = std::max(best_tp[m], r.throughput);
      peak[m] = r.peak_tracked_elements;
    }
  }
  bool ok = true;
  std::string detail = "throughput(seq/s)";
  for (std::size_t m = 0; m < kDeskLadder.size(); ++m) {
    if (m > 0) ok &= best_tp[m] > best_tp[m - 1] && peak[m] < peak[m - 1];
    detail += " " + positions_str(kDeskLadder[m]) + "=" + fmt(best_tp[m], 4);
  }
  detail += "; peak elements";
  for (std::uint64_t p : peak) detail += " " + std::to_string(p);
  return {ok, detail};
}

Outcome ablation_structure() {
  const EncoderConfig desk = EncoderConfig::desk();
  RedAptSpec full = desk.block_spec();
  RedAptSpec no2 = full;
  no2.enable_second_cnn = false;
  const std::uint64_t k = full.block2.kernel, d = full.channels;
  const bool count_ok = param_count(full) - param_count(no2) == k * d * d + 3 * d;

  Rng rng(11);
  const RedAptParams p = RedAptParams::init(full, rng);
  const Tensor a = random_tensor({2, 20, d}, 12);
  const Tensor ref = redapt_forward(a, p, full);
  auto differs = [&](const RedAptSpec& s) {
    const Tensor y = redapt_forward(a, p, s);
    if (y.shape() != ref.shape()) return true;
    double diff = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) diff = std::max(diff, std::abs(y.data()[i] - ref.data()[i]));
    return diff > 0.0;
  };
  RedAptSpec no_ln = full;
  no_ln.enable_layernorm = false;
  RedAptSpec no_gelu = full;
  no_gelu.enable_gelu = false;
  const bool outputs_ok = differs(no2) && differs(no_ln) && differs(no_gelu);

  // The four ablation rows: full, without the second CNN, without LayerNorm,
  // without LayerNorm and GELU. Each must build and train a few steps.
  struct Row {
    bool second_cnn, layernorm, gelu;
  };
  const Row rows[] = {{true, true, true}, {false, true, true}, {true, false, true}, {true, false, false}};
  ToyTaskConfig task;
  task.train_clips = 32;
  task.val_clips = 16;
  task.eval_every = 5;
  std::size_t runnable = 0;
  for (const Row& row : rows) {
    EncoderConfig cfg = desk;
    cfg.positions = {{2}};
    cfg.redapt.enable_second_cnn = row.second_cnn;
    cfg.redapt.enable_layernorm = row.layernorm;
    cfg.redapt.enable_gelu = row.gelu;
    const TrainResult r = train_toy(cfg, OptimizerConfig{}, 5, 3, task);
    if (r.history.size() == 2 && std::isfinite(r.history.back().loss)) ++runnable;
  }
  return {count_ok && outputs_ok && runnable == 4,
          "param diff " + std::to_string(param_count(full) - param_count(no2)) + " == k*d^2+3d " +
              std::to_string(k * d * d + 3 * d) + ", outputs change: " + (outputs_ok ? "yes" : "NO") +
              ", rows runnable " + std::to_string(runnable) + "/4"};
}

Outcome augmentation_laws() {
  std::size_t bad_echo = 0, bad_tempo = 0, bad_pitch = 0, bad_norm = 0;
  Rng rng(99);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const AudioClip clip = synth_clip(i % kToneClasses, 0.05 + 0.3 * rng.uniform(), i);
    if (echo(clip, rng.uniform(20.0, 200.0), 0.0).samples != clip.samples) ++bad_echo;
    const double rate = rng.uniform(0.85, 1.3);
    if (tempo(clip, rate).size() != static_cast<std::size_t>(std::llround(clip.size() / rate))) ++bad_tempo;
    const auto shifted = pitch(clip, rng.uniform(-300.0, 300.0));
    if (std::abs(static_cast<long>(shifted.size()) - static_cast<long>(clip.size())) > 1) ++bad_pitch;
    AudioClip skewed = clip;
    for (double& v : skewed.samples) v = 5.0 * v + 3.0;
    const auto n = normalize(skewed);
    double mean = 0.0, var = 0.0;
    for (double v : n.samples) mean += v;
    mean /= static_cast<double>(n.size());
    for (double v : n.samples) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n.size()));
    if (!(std::abs(mean) < 1e-9 && std::abs(sd - 1.0) < 1e-9)) ++bad_norm;
  }
  const AugmentPolicy policy;
  std::size_t applied = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) applied += draw_augmentation(policy, s).applied;
  const double rate = static_cast<double>(applied) / 10000.0;
  const bool ok = bad_echo + bad_tempo + bad_pitch + bad_norm == 0 && rate >= 0.78 && rate <= 0.82;
  return {ok, "violations echo=" + std::to_string(bad_echo) + " tempo=" + std::to_string(bad_tempo) +
                  " pitch=" + std::to_string(bad_pitch) + " normalize=" + std::to_string(bad_norm) +
                  " over 200 clips; augmentation rate " + fmt(rate)};
}

Outcome persistence() {
  Checkpoint ckpt;
  if (!training_runs.empty()) {
    ckpt = training_runs.front().result.checkpoint;
  } else {
    ckpt.add("w", random_tensor({4, 4}, 1));
  }
  const auto path = std::filesystem::temp_directory_path() / "redapt_acceptance.rapt";
  save_checkpoint(ckpt, path.string());
  const bool round_trip = bit_equal(load_checkpoint(path.string()), ckpt);
  std::filesystem::remove(path);

  const auto bytes = encode_checkpoint(ckpt);
  auto kind_of = [](const std::vector<std::uint8_t>& b) -> int {
    try {
      decode_checkpoint(b);
    } catch (const CheckpointError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  auto magic = bytes;
  magic[1] ^= 0xff;
  auto version = bytes;
  version[4] = 9;
  const int k_magic = kind_of(magic), k_version = kind_of(version);
  bool truncation_ok = true;
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    truncation_ok &= kind_of({bytes.begin(), bytes.begin() + static_cast<long>(n)}) ==
                     static_cast<int>(CheckpointError::Kind::kTruncated);
  }
  const int k_trunc = static_cast<int>(CheckpointError::Kind::kTruncated);
  const bool distinct = k_magic == static_cast<int>(CheckpointError::Kind::kBadMagic) &&
                        k_version == static_cast<int>(CheckpointError::Kind::kBadVersion) && k_magic != k_version &&
                        k_magic != k_trunc && k_version != k_trunc;
  return {round_trip && distinct && truncation_ok,
          std::to_string(ckpt.entries.size()) + " entries, " + std::to_string(bytes.size()) + " bytes, round trip " +
              (round_trip ? "bit-exact" : "DIFFERS") + ", header/truncation errors " +
              (distinct && truncation_ok ? "distinct" : "NOT DISTINCT")};
}

}  // namespace

int main() {
  run(1, "FLOPs ratios (w2v2-large, 88000 samples)", flops_ratios);
  run(2, "FLOPs ordering of seven position configs", position_ordering);
  run(3, "length algebra", length_algebra);
  run(4, "closed-form vs instrumented MACs", mac_oracle);
  run(5, "finite-difference gradients", gradients);
  run(6, "toy-task trainability m=0..3", trainability);
  run(7, "measured throughput and peak memory trend m=0..3", measured_trend);
  run(8, "ablation structure", ablation_structure);
  run(9, "augmentation laws", augmentation_laws);
  run(10, "checkpoint persistence", persistence);
  std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
