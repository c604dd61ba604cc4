// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "redapt/position_search.hpp"

using namespace redapt;

namespace {

// All strictly increasing index lists of a given size drawn from [0, layers).
void subsets(std::size_t layers, std::size_t size, std::size_t from, std::vector<std::size_t>& cur,
             std::vector<PositionConfig>& out) {
  if (cur.size() == size) {
    out.push_back({cur});
    return;
  }
  for (std::size_t v = from; v < layers; ++v) {
    cur.push_back(v);
    subsets(layers, size, v + 1, cur, out);
    cur.pop_back();
  }
}

bool is_neighbor(const PositionConfig& base, const PositionConfig& c, const Bucket& b) {
  const auto& x = base.positions;
  const auto& y = c.positions;
  if (y.size() + 1 == x.size()) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto r = x;
      r.erase(r.begin() + static_cast<std::ptrdiff_t>(i));
      if (r == y) return true;
    }
    return false;
  }
  if (y.size() != x.size()) return false;
  std::size_t diffs = 0, at = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) {
      ++diffs;
      at = i;
    }
  }
  return diffs == 1 && b.contains(y[at]);
}

std::vector<PositionConfig> brute_neighbors(const PositionConfig& base, const Bucket& b, std::size_t layers) {
  std::vector<PositionConfig> all, out;
  std::vector<std::size_t> cur;
  if (base.m() > 0) subsets(layers, base.m() - 1, 0, cur, all);
  subsets(layers, base.m(), 0, cur, all);
  for (const auto& c : all) {
    if (c != base && is_neighbor(base, c, b)) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double sum_quality(const PositionConfig& pc) {
  return static_cast<double>(std::accumulate(pc.positions.begin(), pc.positions.end(), std::size_t{0}));
}

}  // namespace

TEST_CASE("default buckets partition the layers") {
  const auto b = default_buckets(24);
  REQUIRE(b.size() == 2);
  CHECK(b[0] == Bucket{0, 11});
  CHECK(b[1] == Bucket{12, 23});
  const auto d = default_buckets(8);
  CHECK(d[0] == Bucket{0, 3});
  CHECK(d[1] == Bucket{4, 7});
}

TEST_CASE("neighbors: worked examples") {
  const auto n = neighbors({{15}}, Bucket{12, 23});
  CHECK(n.size() == 1 + 11);
  CHECK(n.front() == PositionConfig{});
  CHECK(std::find(n.begin(), n.end(), PositionConfig{{15}}) == n.end());
  CHECK(neighbors({}, Bucket{0, 23}).empty());
  CHECK(neighbors({{14, 15, 18, 19}}, Bucket{12, 23}).size() == 14);
}

TEST_CASE("neighbors agree with brute-force enumeration") {
  const std::vector<PositionConfig> starts{{{14, 15, 18, 19}}, {{15}}, {{0, 11, 12, 23}}, {{3, 4, 5}}, {{12, 13}}};
  for (const auto& s : starts) {
    for (const Bucket b : default_buckets(24)) {
      CHECK(neighbors(s, b) == brute_neighbors(s, b, 24));
    }
  }
  // Union over buckets.
  const auto buckets = default_buckets(24);
  auto both = brute_neighbors({{5, 14}}, buckets[0], 24);
  const auto second = brute_neighbors({{5, 14}}, buckets[1], 24);
  both.insert(both.end(), second.begin(), second.end());
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());
  CHECK(neighbors({{5, 14}}, buckets) == both);
}

TEST_CASE("constant evaluator keeps the start after one round") {
  SearchOptions opt;
  const PositionConfig start{{14, 15, 18, 19}};
  const auto r = backward_select(start, [](const PositionConfig&) { return 1.0; },
                                 [](const PositionConfig&) { return 1.0; }, opt);
  CHECK(r.best == start);
  CHECK(r.rounds == 1);
  CHECK(r.trace.front().config == start);
}

TEST_CASE("sum evaluator reaches the best greedy-reachable configuration") {
  SearchOptions opt;
  opt.max_rounds = 100;
  const PositionConfig start{{14, 15, 18, 19}};
  const auto buckets = default_buckets(24);
  const auto r = backward_select(start, sum_quality, [](const PositionConfig&) { return 0.0; }, opt);

  std::set<PositionConfig> seen{start};
  std::vector<PositionConfig> frontier{start};
  while (!frontier.empty()) {
    const PositionConfig c = frontier.back();
    frontier.pop_back();
    for (const auto& n : neighbors(c, buckets)) {
      if (seen.insert(n).second) frontier.push_back(n);
    }
  }
  double best = -1.0;
  for (const auto& c : seen) best = std::max(best, sum_quality(c));
  CHECK(r.best_quality == best);
  CHECK(r.best == PositionConfig{{20, 21, 22, 23}});
  CHECK(r.best_quality >= sum_quality(start));
}

TEST_CASE("search is memoized, monotone and replayable") {
  const EncoderConfig cfg = EncoderConfig::w2v2_large();
  const auto flops = make_flops_ratio_fn(cfg, 88000, w2v2_large_cost_options());
  // Quality peaks at m = 2 with late positions, so the walk both removes and replaces.
  auto quality = [](const PositionConfig& pc) {
    double q = -std::abs(static_cast<double>(pc.m()) - 2.0) * 100.0;
    for (std::size_t p : pc.positions) q += static_cast<double>(p);
    return q;
  };
  SearchOptions opt;
  opt.max_rounds = 50;
  const PositionConfig start{{14, 15, 18, 19}};
  const auto a = backward_select(start, quality, flops, opt);
  std::set<PositionConfig> unique;
  for (const auto& rec : a.trace) CHECK(unique.insert(rec.config).second);
  CHECK(a.best_quality >= quality(start));
  CHECK(a.best.m() == 2);

  opt.threads = 4;
  const auto b = backward_select(start, quality, flops, opt);
  CHECK(search_trace_jsonl(a) == search_trace_jsonl(b));
  CHECK(a.best == b.best);
}

TEST_CASE("ties on quality are broken by lower FLOPs ratio") {
  SearchOptions opt;
  opt.layers = 8;
  opt.max_rounds = 1;
  const EncoderConfig cfg = EncoderConfig::desk();
  const auto flops = make_flops_ratio_fn(cfg, 16000);
  // Everything except the start scores 1; the cheapest neighbor must win.
  const PositionConfig start{{3, 5}};
  const auto r = backward_select(start, [&](const PositionConfig& pc) { return pc == start ? 0.0 : 1.0; },
                                 flops, opt);
  double cheapest = 1e9;
  for (const auto& n : neighbors(start, default_buckets(8))) cheapest = std::min(cheapest, flops(n));
  CHECK(r.best_flops_ratio == cheapest);
}

TEST_CASE("trace serializes as JSON lines") {
  SearchOptions opt;
  opt.layers = 8;
  const auto r = backward_select({{2, 5}}, sum_quality, [](const PositionConfig&) { return 0.5; }, opt);
  std::istringstream in(search_trace_jsonl(r));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["schema_version"] == 1);
    CHECK(j.contains("positions"));
    ++n;
  }
  CHECK(n == r.trace.size());
}
