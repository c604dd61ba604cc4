// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/position_search.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace redapt {

std::vector<Bucket> default_buckets(std::size_t layers) {
  if (layers < 2) return {{0, layers == 0 ? 0 : layers - 1}};
  const std::size_t half = layers / 2;
  return {{0, half - 1}, {half, layers - 1}};
}

std::vector<PositionConfig> neighbors(const PositionConfig& config, const Bucket& bucket) {
  const Bucket one[] = {bucket};
  return neighbors(config, one);
}

std::vector<PositionConfig> neighbors(const PositionConfig& config, std::span<const Bucket> buckets) {
  const auto& pos = config.positions;
  std::vector<PositionConfig> out;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    PositionConfig removed = config;
    removed.positions.erase(removed.positions.begin() + static_cast<std::ptrdiff_t>(i));
    out.push_back(std::move(removed));
    // The replacement must sit strictly between its neighbors.
    const std::size_t lo = i == 0 ? 0 : pos[i - 1] + 1;
    for (const Bucket& b : buckets) {
      for (std::size_t v = std::max(lo, b.lo); v <= b.hi; ++v) {
        if (i + 1 < pos.size() && v >= pos[i + 1]) break;
        if (v == pos[i]) continue;
        PositionConfig replaced = config;
        replaced.positions[i] = v;
        out.push_back(std::move(replaced));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::erase(out, config);
  return out;
}

FlopsRatioFn make_flops_ratio_fn(const EncoderConfig& cfg, std::size_t raw_samples,
                                 const CostModelOptions& options) {
  return [cfg, raw_samples, options](const PositionConfig& pc) {
    return estimate(cfg, pc, raw_samples, 1, options).flops_ratio;
  };
}

namespace {

struct Score {
  double quality;
  double flops_ratio;
};

// True when a ranks strictly ahead of b.
bool better(const PositionConfig& a, const Score& sa, const PositionConfig& b, const Score& sb) {
  if (sa.quality != sb.quality) return sa.quality > sb.quality;
  if (sa.flops_ratio != sb.flops_ratio) return sa.flops_ratio < sb.flops_ratio;
  return a < b;
}

std::vector<Score> evaluate_all(const std::vector<PositionConfig>& configs, const QualityFn& quality,
                                const FlopsRatioFn& flops, unsigned threads) {
  std::vector<Score> scores(configs.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < configs.size(); i += step) {
      scores[i] = {quality(configs[i]), flops(configs[i])};
    }
  };
  if (threads <= 1 || configs.size() <= 1) {
    work(0, 1);
    return scores;
  }
  const std::size_t n = std::min<std::size_t>(threads, configs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work, t, n);
  }
  return scores;
}

}  // namespace

SearchResult backward_select(const PositionConfig& start, const QualityFn& evaluator,
                             const FlopsRatioFn& flops_ratio, const SearchOptions& options) {
  start.validate(options.layers);
  const std::vector<Bucket> buckets =
      options.buckets.empty() ? default_buckets(options.layers) : options.buckets;

  std::map<PositionConfig, Score> seen;
  SearchResult result;
  Score current_score{evaluator(start), flops_ratio(start)};
  seen.emplace(start, current_score);
  result.trace.push_back({0, start, current_score.quality, current_score.flops_ratio});
  PositionConfig current = start;

  for (std::size_t round = 1; round <= options.max_rounds; ++round) {
    const auto cands = neighbors(current, buckets);
    if (cands.empty()) break;
    std::vector<PositionConfig> fresh;
    for (const auto& c : cands) {
      if (!seen.contains(c)) fresh.push_back(c);
    }
    const auto scores = evaluate_all(fresh, evaluator, flops_ratio, options.threads);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      seen.emplace(fresh[i], scores[i]);
      result.trace.push_back({round, fresh[i], scores[i].quality, scores[i].flops_ratio});
    }
    result.rounds = round;

    const PositionConfig* best = nullptr;
    Score best_score{};
    for (const auto& c : cands) {
      const Score& s = seen.at(c);
      if (!best || better(c, s, *best, best_score)) {
        best = &c;
        best_score = s;
      }
    }
    if (!(best_score.quality > current_score.quality)) break;
    current = *best;
    current_score = best_score;
  }
  result.best = current;
  result.best_quality = current_score.quality;
  result.best_flops_ratio = current_score.flops_ratio;
  return result;
}

std::string search_trace_jsonl(const SearchResult& result) {
  std::ostringstream os;
  for (const auto& r : result.trace) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["round"] = r.round;
    j["positions"] = r.config.positions;
    j["quality"] = r.quality;
    j["flops_ratio"] = r.flops_ratio;
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace redapt
