// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "redapt/bench.hpp"
#include "redapt/config_io.hpp"
#include "redapt/cost_model.hpp"
#include "redapt/position_search.hpp"
#include "redapt/training.hpp"

namespace redapt {

namespace {

struct Common {
  std::string config = "desk";
  std::string positions;
  bool positions_set = false;
  std::size_t raw_len = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, std::size_t default_raw_len) {
  c.raw_len = default_raw_len;
  cmd->add_option("--config", c.config, "preset name (desk, w2v2-large) or JSON config path")
      ->capture_default_str();
  cmd->add_option("--positions", c.positions, "layer indices, e.g. 15,18,19; ';' separates configs");
  cmd->add_option("--raw-len", c.raw_len, "raw waveform length in samples")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output directory for CSV/JSON artifacts");
}

EncoderConfig resolve(const Common& c) {
  EncoderConfig cfg = load_config(c.config);
  if (c.positions_set) cfg.positions = parse_positions(c.positions);
  cfg.validate();
  return cfg;
}

void write_artifact(const Common& c, const std::string& name, const std::string& content) {
  if (c.out.empty()) return;
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / name;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

int cmd_flops(const Common& c, std::size_t batch, double fe_scale, std::ostream& out) {
  EncoderConfig cfg = load_config(c.config);
  CostModelOptions opt;
  opt.fe_cost_scale = fe_scale > 0.0 ? fe_scale
                      : (c.config.rfind("w2v2-large", 0) == 0 ? kW2v2LargeFeatureCostScale : 1.0);
  const auto configs = c.positions_set ? parse_position_list(c.positions)
                                       : std::vector<PositionConfig>{cfg.positions};
  if (configs.size() == 1) {
    const CostReport rep = estimate(cfg, configs.front(), c.raw_len, batch, opt);
    const std::string json = cost_report_json(rep);
    write_artifact(c, "flops.csv", cost_report_csv(rep));
    write_artifact(c, "flops.json", json);
    out << json << '\n';
    return kExitOk;
  }
  std::ostringstream csv;
  csv << std::setprecision(17) << "positions,m,flops_ratio,memory_ratio,param_ratio\n";
  for (const auto& pc : configs) {
    const CostReport rep = estimate(cfg, pc, c.raw_len, batch, opt);
    csv << '"' << positions_str(pc) << "\"," << pc.m() << ',' << rep.flops_ratio << ','
        << rep.memory_ratio << ',' << rep.param_ratio << '\n';
  }
  write_artifact(c, "ratios.csv", csv.str());
  out << csv.str();
  return kExitOk;
}

int cmd_bench(const Common& c, BenchOptions opt, const std::string& sweep, std::ostream& out) {
  const EncoderConfig cfg = resolve(c);
  opt.raw_len = c.raw_len;
  opt.seed = c.seed;
  if (sweep.empty()) {
    const std::string json = bench_report_json(run_bench(cfg, opt));
    write_artifact(c, "bench.json", json);
    out << json << '\n';
    return kExitOk;
  }
  std::vector<BenchReport> reports;
  std::stringstream ss(sweep);
  std::string item;
  while (std::getline(ss, item, ',')) {
    opt.batch = std::stoul(item);
    reports.push_back(run_bench(cfg, opt));
  }
  const std::string csv = bench_sweep_csv(reports);
  write_artifact(c, "bench_sweep.csv", csv);
  out << csv;
  return kExitOk;
}

struct SearchArgs {
  std::string evaluator = "toy";
  std::string start = "[]";
  std::size_t max_rounds = 10;
  std::size_t steps = 60;
  unsigned threads = 1;
};

int cmd_search(const Common& c, const SearchArgs& a, std::ostream& out) {
  EncoderConfig cfg = load_config(c.config);
  const PositionConfig start = parse_positions(a.start);
  QualityFn quality;
  if (a.evaluator == "constant") {
    quality = [](const PositionConfig&) { return 0.0; };
  } else if (a.evaluator == "sum") {
    quality = [](const PositionConfig& pc) {
      return static_cast<double>(std::accumulate(pc.positions.begin(), pc.positions.end(), std::size_t{0}));
    };
  } else if (a.evaluator == "toy") {
    ToyTaskConfig task;
    task.clip_seconds = static_cast<double>(c.raw_len) / kDefaultSampleRate;
    const std::size_t steps = a.steps;
    const std::uint64_t seed = c.seed;
    quality = [cfg, task, steps, seed](const PositionConfig& pc) {
      return toy_quality(cfg, pc, OptimizerConfig{}, steps, seed, task);
    };
  } else {
    throw CLI::ValidationError("--evaluator", "must be constant, sum or toy");
  }
  SearchOptions so;
  so.max_rounds = a.max_rounds;
  so.layers = cfg.layers;
  so.threads = a.threads;
  const SearchResult r = backward_select(start, quality, make_flops_ratio_fn(cfg, c.raw_len), so);
  const std::string trace = search_trace_jsonl(r);
  write_artifact(c, "search.jsonl", trace);
  nlohmann::ordered_json summary;
  summary["schema_version"] = 1;
  summary["evaluator"] = a.evaluator;
  summary["start"] = start.positions;
  summary["best"] = r.best.positions;
  summary["best_quality"] = r.best_quality;
  summary["best_flops_ratio"] = r.best_flops_ratio;
  summary["rounds"] = r.rounds;
  summary["evaluations"] = r.trace.size();
  write_artifact(c, "search_summary.json", summary.dump(2));
  out << trace << summary.dump() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::size_t steps = 500;
  double lr = 0.0;
  std::size_t batch = 8;
  bool augment = false;
  bool freeze_head = false;
};

OptimizerConfig optimizer_for(const TrainArgs& a) {
  OptimizerConfig opt;
  if (a.lr > 0.0) opt.lr = a.lr;
  return opt;
}

ToyTaskConfig task_for(const TrainArgs& a, std::size_t raw_len) {
  ToyTaskConfig task;
  task.clip_seconds = static_cast<double>(raw_len) / kDefaultSampleRate;
  task.batch = a.batch;
  task.augment = a.augment;
  task.freeze_head = a.freeze_head;
  return task;
}

int cmd_train(const Common& c, const TrainArgs& a, std::ostream& out) {
  const EncoderConfig cfg = resolve(c);
  const TrainResult r = train_toy(cfg, optimizer_for(a), a.steps, c.seed, task_for(a, c.raw_len));
  const std::string csv = metrics_csv(r.history);
  write_artifact(c, "metrics.csv", csv);
  if (!c.out.empty()) save_checkpoint(r.checkpoint, (std::filesystem::path(c.out) / "checkpoint.rapt").string());
  out << csv;
  return kExitOk;
}

int cmd_ablate(const Common& c, const TrainArgs& a, std::ostream& out) {
  EncoderConfig base = resolve(c);
  if (base.positions.m() == 0) base.positions = {{2}};
  struct Row {
    const char* name;
    bool second_cnn, layernorm, gelu;
  };
  const Row rows[] = {{"full", true, true, true},
                      {"no_second_cnn", false, true, true},
                      {"no_layernorm", true, false, true},
                      {"no_layernorm_no_gelu", true, false, false}};
  std::ostringstream csv;
  csv << std::setprecision(17)
      << "variant,second_cnn,layernorm,gelu,config_digest,block_params,final_loss,final_accuracy\n";
  for (const Row& row : rows) {
    EncoderConfig cfg = base;
    cfg.redapt.enable_second_cnn = row.second_cnn;
    cfg.redapt.enable_layernorm = row.layernorm;
    cfg.redapt.enable_gelu = row.gelu;
    const TrainResult r = train_toy(cfg, optimizer_for(a), a.steps, c.seed, task_for(a, c.raw_len));
    csv << row.name << ',' << row.second_cnn << ',' << row.layernorm << ',' << row.gelu << ','
        << config_digest(cfg) << ',' << param_count(cfg.block_spec()) << ','
        << r.history.back().loss << ',' << r.history.back().accuracy << '\n';
  }
  write_artifact(c, "ablation.csv", csv.str());
  out << csv.str();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RedApt encoder toolkit: cost model, benchmarks, position search, ablations, training"};
  app.require_subcommand(1);

  Common flops_c, bench_c, search_c, ablate_c, train_c;
  std::size_t flops_batch = 1;
  double fe_scale = 0.0;
  auto* flops = app.add_subcommand("flops", "analytical FLOPs / memory report");
  add_common(flops, flops_c, 88000);
  flops->add_option("--batch", flops_batch, "batch size")->capture_default_str();
  flops->add_option("--fe-scale", fe_scale,
                    "feature-extractor FLOPs multiplier (default: calibrated for w2v2-large, else 1)");

  BenchOptions bench_opt;
  std::string sweep;
  auto* bench = app.add_subcommand("bench", "throughput and peak tracked memory");
  add_common(bench, bench_c, 16000);
  bench->add_option("--batch", bench_opt.batch)->capture_default_str();
  bench->add_option("--warmup", bench_opt.warmup)->capture_default_str();
  bench->add_option("--iters", bench_opt.iters)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--sweep", sweep, "comma-separated batch sizes; emits CSV");
  bench->add_flag("--allow-large", bench_opt.allow_large, "lift the d_model*layers cap");

  SearchArgs search_args;
  auto* search = app.add_subcommand("search", "backward selection over block positions");
  add_common(search, search_c, 8000);
  search->add_option("--evaluator", search_args.evaluator, "constant, sum or toy")->capture_default_str();
  search->add_option("--start", search_args.start, "starting positions")->capture_default_str();
  search->add_option("--max-rounds", search_args.max_rounds)->capture_default_str();
  search->add_option("--steps", search_args.steps, "training steps per toy evaluation")->capture_default_str();
  search->add_option("--threads", search_args.threads)->capture_default_str();

  TrainArgs ablate_args, train_args;
  ablate_args.steps = 200;
  auto add_train = [](CLI::App* cmd, TrainArgs& a) {
    cmd->add_option("--steps", a.steps)->capture_default_str();
    cmd->add_option("--lr", a.lr, "learning rate (default 5e-4)");
    cmd->add_option("--batch", a.batch)->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--augment", a.augment, "apply tempo/pitch/echo augmentation");
    cmd->add_flag("--freeze-head", a.freeze_head, "keep the classification head fixed");
  };
  auto* ablate = app.add_subcommand("ablate", "train each block-component ablation row");
  add_common(ablate, ablate_c, 8000);
  add_train(ablate, ablate_args);
  auto* train = app.add_subcommand("train", "train on the synthetic tone task");
  add_common(train, train_c, 8000);
  add_train(train, train_args);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  auto mark = [](CLI::App* cmd, Common& c) { c.positions_set = cmd->count("--positions") > 0; };
  mark(flops, flops_c);
  mark(bench, bench_c);
  mark(search, search_c);
  mark(ablate, ablate_c);
  mark(train, train_c);

  try {
    if (*flops) return cmd_flops(flops_c, flops_batch, fe_scale, out);
    if (*bench) return cmd_bench(bench_c, bench_opt, sweep, out);
    if (*search) return cmd_search(search_c, search_args, out);
    if (*ablate) return cmd_ablate(ablate_c, ablate_args, out);
    if (*train) return cmd_train(train_c, train_args, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace redapt
