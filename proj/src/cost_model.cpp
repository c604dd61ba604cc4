// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/cost_model.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "redapt/ops.hpp"

namespace redapt {

namespace {

using u64 = std::uint64_t;

CostRow layer_row(std::size_t index, std::size_t n, std::size_t batch, const EncoderConfig& cfg,
                  const CostModelOptions& opt) {
  const u64 b = batch, t = n, d = cfg.d_model, f = cfg.d_ffn, h = cfg.n_heads;
  CostRow r;
  r.label = "layer" + std::to_string(index);
  r.n = n;
  // Q/K/V/O projections, attention scores + context, two FFN matrices.
  r.macs = b * (4 * t * d * d + 2 * t * t * d + 2 * t * d * f);
  r.flops = 2.0 * static_cast<double>(r.macs);
  r.memory = static_cast<double>(b) * (opt.activation_retention * static_cast<double>(t * d) +
                                       static_cast<double>(h * t * t));
  const u64 ew = 2 * flop_cost::kLayerNorm * t * d  // two pre-norms
                 + 4 * t * d                         // q/k/v/o bias
                 + (1 + flop_cost::kSoftmax) * h * t * t  // score scaling + softmax
                 + 2 * t * d                         // residual adds
                 + t * f + flop_cost::kGelu * t * f  // FFN bias + GELU
                 + t * d;                            // FFN output bias
  r.elementwise_flops = static_cast<double>(b * ew);
  return r;
}

CostRow block_row(std::size_t position, std::size_t n_in, std::size_t batch,
                  const RedAptSpec& spec) {
  const u64 b = batch, d = spec.channels;
  const u64 n_out = reduced_length(n_in, spec.block1);
  CostRow r;
  r.label = "redapt" + std::to_string(position);
  r.n = n_in;
  r.macs = b * n_out * spec.block1.kernel * d * d;
  const u64 wrapper = 1 + (spec.enable_layernorm ? flop_cost::kLayerNorm : 0) +
                      (spec.enable_gelu ? flop_cost::kGelu : 0);
  const u64 stored = 1 + (spec.enable_layernorm ? 1 : 0) + (spec.enable_gelu ? 1 : 0);
  u64 ew = wrapper * n_out * d;
  u64 mem = stored * n_out * d;
  if (spec.enable_second_cnn) {
    r.macs += b * n_out * spec.block2.kernel * d * d;
    ew += wrapper * n_out * d + n_out * d;  // second wrapper + residual
    mem += stored * n_out * d + n_out * d;
  }
  r.flops = 2.0 * static_cast<double>(r.macs);
  r.memory = static_cast<double>(b * mem);
  r.elementwise_flops = static_cast<double>(b * ew);
  return r;
}

CostReport estimate_raw(const EncoderConfig& cfg_in, const PositionConfig& positions,
                        std::size_t raw_samples, std::size_t batch, const CostModelOptions& opt) {
  EncoderConfig cfg = cfg_in;
  cfg.positions = positions;
  cfg.validate();
  if (batch == 0) throw ConfigError("batch must be positive");
  const LengthTrace trace = length_trace(cfg, raw_samples);
  const auto& fe = cfg.feature_extractor;
  const u64 b = batch, c = fe.channels, d = cfg.d_model;

  CostReport rep;
  rep.positions = positions;
  rep.raw_samples = raw_samples;
  rep.batch = batch;

  CostRow fe_row;
  fe_row.label = "fe";
  fe_row.n = raw_samples;
  const auto lens = fe.layer_lengths(raw_samples);
  u64 cin = 1;
  double fe_mem = static_cast<double>(b * raw_samples);
  double fe_ew = 0.0;
  for (std::size_t j = 0; j < lens.size(); ++j) {
    fe_row.macs += b * lens[j] * fe.kernels[j] * cin * c;
    fe_mem += 3.0 * static_cast<double>(b * lens[j] * c);  // conv, norm, GELU outputs
    fe_ew += static_cast<double>(b * lens[j] * c * (1 + flop_cost::kLayerNorm + flop_cost::kGelu));
    cin = c;
  }
  fe_row.flops = 2.0 * static_cast<double>(fe_row.macs) * opt.fe_cost_scale;
  fe_row.memory = fe_mem;
  fe_row.elementwise_flops = fe_ew;
  rep.rows.push_back(fe_row);

  CostRow proj;
  proj.label = "proj";
  proj.n = trace.n0;
  proj.macs = b * trace.n0 * c * d;
  proj.flops = 2.0 * static_cast<double>(proj.macs);
  proj.memory = static_cast<double>(b * trace.n0 * (c + d));
  proj.elementwise_flops = static_cast<double>(b * trace.n0 * (flop_cost::kLayerNorm * c + d));
  rep.rows.push_back(proj);

  const RedAptSpec spec = cfg.block_spec();
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    rep.rows.push_back(layer_row(i, trace.layer_input[i], batch, cfg, opt));
    if (positions.contains(i)) rep.rows.push_back(block_row(i, trace.layer_input[i], batch, spec));
  }

  CostRow fin;
  fin.label = "final";
  fin.n = trace.final_length;
  fin.memory = static_cast<double>(b * trace.final_length * d);
  fin.elementwise_flops = static_cast<double>(b * flop_cost::kLayerNorm * trace.final_length * d);
  rep.rows.push_back(fin);

  for (const auto& r : rep.rows) {
    rep.total_macs += r.macs;
    rep.total_flops += r.flops;
    rep.activation_memory_elements += r.memory;
    rep.elementwise_flops += r.elementwise_flops;
  }
  rep.param_count = encoder_param_count(cfg, positions);
  return rep;
}

}  // namespace

CostModelOptions w2v2_large_cost_options() {
  CostModelOptions o;
  o.fe_cost_scale = kW2v2LargeFeatureCostScale;
  return o;
}

std::uint64_t encoder_param_count(const EncoderConfig& cfg, const PositionConfig& positions) {
  const auto& fe = cfg.feature_extractor;
  const u64 c = fe.channels, d = cfg.d_model, f = cfg.d_ffn;
  u64 n = 0;
  u64 cin = 1;
  for (std::size_t k : fe.kernels) {
    n += k * cin * c + c + 2 * c;
    cin = c;
  }
  n += 2 * c + c * d + d;  // feature norm + projection
  n += cfg.layers * (4 * (d * d + d) + 2 * (2 * d) + d * f + f + f * d + d);
  n += positions.m() * param_count(cfg.block_spec());
  n += 2 * d;  // final norm
  return n;
}

CostReport estimate(const EncoderConfig& cfg, const PositionConfig& positions,
                    std::size_t raw_samples, std::size_t batch, const CostModelOptions& options) {
  CostReport rep = estimate_raw(cfg, positions, raw_samples, batch, options);
  if (positions.m() == 0) return rep;
  const CostReport base = estimate_raw(cfg, {}, raw_samples, batch, options);
  rep.flops_ratio = rep.total_flops / base.total_flops;
  rep.memory_ratio = rep.activation_memory_elements / base.activation_memory_elements;
  rep.param_ratio = static_cast<double>(rep.param_count) / static_cast<double>(base.param_count);
  return rep;
}

double calibrate_feature_share(const EncoderConfig& cfg, const PositionConfig& positions,
                               std::size_t raw_samples, double target_ratio,
                               const CostModelOptions& base_opt) {
  CostModelOptions unit = base_opt;
  unit.fe_cost_scale = 1.0;
  const CostReport with = estimate_raw(cfg, positions, raw_samples, 1, unit);
  const CostReport base = estimate_raw(cfg, {}, raw_samples, 1, unit);
  const double fe = base.rows.front().flops;
  const double t_with = with.total_flops - fe;
  const double t_base = base.total_flops - fe;
  // (t_with + s*fe) / (t_base + s*fe) = target
  const double scale = (target_ratio * t_base - t_with) / ((1.0 - target_ratio) * fe);
  if (!(scale > 0.0) || !(target_ratio < 1.0)) {
    throw ConfigError("no positive feature-extractor scale reaches FLOPs ratio " +
                      std::to_string(target_ratio));
  }
  return scale;
}

std::vector<RatioRow> ratio_table(const EncoderConfig& cfg, const std::vector<PositionConfig>& configs,
                                  std::size_t raw_samples, const CostModelOptions& options) {
  std::vector<RatioRow> rows;
  for (const auto& pc : configs) {
    const CostReport r = estimate(cfg, pc, raw_samples, 1, options);
    rows.push_back({pc, r.flops_ratio, r.memory_ratio});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const RatioRow& a, const RatioRow& b) {
    if (a.flops_ratio != b.flops_ratio) return a.flops_ratio < b.flops_ratio;
    return a.positions < b.positions;
  });
  return rows;
}

std::string cost_report_csv(const CostReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "layer,n_i,flops,mem\n";
  for (const auto& r : report.rows) {
    os << r.label << ',' << r.n << ',' << r.flops << ',' << r.memory << '\n';
  }
  return os.str();
}

std::string cost_report_json(const CostReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["flops_convention"] = "2 x MACs";
  j["positions"] = report.positions.positions;
  j["raw_samples"] = report.raw_samples;
  j["batch"] = report.batch;
  j["total_macs"] = report.total_macs;
  j["total_flops"] = report.total_flops;
  j["activation_memory_elements"] = report.activation_memory_elements;
  j["elementwise_flops"] = report.elementwise_flops;
  j["param_count"] = report.param_count;
  j["flops_ratio"] = report.flops_ratio;
  j["memory_ratio"] = report.memory_ratio;
  j["param_ratio"] = report.param_ratio;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"layer", r.label},
                    {"n_i", r.n},
                    {"macs", r.macs},
                    {"flops", r.flops},
                    {"mem", r.memory},
                    {"elementwise_flops", r.elementwise_flops}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2);
}

}  // namespace redapt
