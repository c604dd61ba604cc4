// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "gradcheck.hpp"
#include "reference.hpp"
#include "redapt/autodiff.hpp"
#include "redapt/encoder.hpp"

using namespace redapt;

TEST_CASE("transformer layer matches the scalar reference") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    auto p = TransformerLayerParams::init(8, 2, 12, rng);
    const Tensor x = gradcheck::random({2, 5, 8}, seed + 10);
    const Tensor y = transformer_layer_forward(x, p);
    for (std::size_t b = 0; b < 2; ++b) {
      CHECK(ref::max_abs_diff(ref::transformer_layer(ref::batch_item(x, b), p), y, b) < 1e-10);
    }
  }
}

TEST_CASE("attention rows sum to one and the layer preserves shape") {
  Rng rng(3);
  auto p = TransformerLayerParams::init(8, 4, 16, rng);
  AttentionProbe probe;
  const Tensor x = gradcheck::random({2, 6, 8}, 4);
  const Tensor y = mhsa_forward(x, p, {}, 0, &probe);
  CHECK(y.shape() == x.shape());
  CHECK(probe.weights.shape() == Shape{2, 4, 6, 6});
  for (std::size_t r = 0; r < 2 * 4 * 6; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < 6; ++j) s += probe.weights.data()[r * 6 + j];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Rng bad(1);
  CHECK_THROWS_AS(TransformerLayerParams::init(10, 4, 16, bad), ConfigError);
}

TEST_CASE("feature extractor lengths and receptive field") {
  FeatureExtractorConfig fe;
  CHECK(fe.receptive_field() == 400);
  CHECK(fe.output_length(88000) == 274);
  CHECK(fe.output_length(400) == 1);
  CHECK_THROWS_AS(fe.output_length(399), LengthError);
  const auto lens = fe.layer_lengths(88000);
  CHECK(lens.front() == 17599);
  for (std::size_t i = 0; i < lens.size(); ++i) {
    CHECK(lens[i] == ref::conv_out_len(i == 0 ? 88000 : lens[i - 1], fe.kernels[i], fe.strides[i], 0));
  }
  FeatureExtractorConfig broken = fe;
  broken.downsample = 300;
  CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("feature extractor matches the scalar reference") {
  FeatureExtractorConfig fe;
  fe.channels = 6;
  Rng rng(9);
  auto p = FeatureExtractorParams::init(fe, rng);
  const Tensor wave = gradcheck::random({1, 1000}, 5);
  const Tensor y = feature_extractor_forward(wave, fe, p);
  std::vector<double> w(wave.data().begin(), wave.data().end());
  CHECK(ref::max_abs_diff(ref::feature_extractor(w, fe, p), y, 0) < 1e-10);
}

TEST_CASE("RedApt block: parameter count") {
  RedAptSpec spec;
  spec.channels = 1024;
  CHECK(param_count(spec) == 6'297'600);
  RedAptSpec no2 = spec;
  no2.enable_second_cnn = false;
  CHECK(param_count(spec) - param_count(no2) == 3 * 1024 * 1024 + 3 * 1024);
  RedAptSpec small;
  small.channels = 4;
  Rng rng(1);
  ParamSet ps;
  RedAptParams::init(small, rng).collect(ps, "b.");
  CHECK(ps.numel() == param_count(small));
}

TEST_CASE("RedApt block: 1x4x2 worked case against the scalar reference") {
  RedAptSpec spec;
  spec.channels = 2;
  Rng rng(42);
  const auto p = RedAptParams::init(spec, rng);
  const Tensor a = Tensor::from({1, 4, 2}, {0.5, -1.0, 1.5, 0.25, -0.75, 2.0, 1.0, -0.5});
  const Tensor y = redapt_forward(a, p, spec);
  CHECK(y.shape() == Shape{1, 2, 2});
  CHECK(ref::max_abs_diff(ref::redapt_block(ref::batch_item(a, 0), p, spec), y, 0) < 1e-10);
}

TEST_CASE("RedApt block: every ablation variant matches the reference and halves length") {
  for (int mask = 0; mask < 8; ++mask) {
    RedAptSpec spec;
    spec.channels = 6;
    spec.enable_second_cnn = mask & 1;
    spec.enable_layernorm = mask & 2;
    spec.enable_gelu = mask & 4;
    Rng rng(mask + 1);
    const auto p = RedAptParams::init(spec, rng);
    for (std::size_t n : {1, 2, 5, 9, 16}) {
      const Tensor a = gradcheck::random({2, n, 6}, n * 7 + mask);
      const Tensor y = redapt_forward(a, p, spec);
      CHECK(y.dim(1) == (n + 1) / 2);
      for (std::size_t b = 0; b < 2; ++b) {
        CHECK(ref::max_abs_diff(ref::redapt_block(ref::batch_item(a, b), p, spec), y, b) < 1e-10);
      }
    }
  }
}

TEST_CASE("RedApt block: disabling the second CNN changes outputs") {
  RedAptSpec full;
  full.channels = 8;
  RedAptSpec no2 = full;
  no2.enable_second_cnn = false;
  Rng rng(5);
  const auto p = RedAptParams::init(full, rng);
  const Tensor a = gradcheck::random({1, 10, 8}, 77);
  CHECK(max_abs_diff(redapt_forward(a, p, full), redapt_forward(a, p, no2)) > 1e-3);
}

TEST_CASE("RedApt spec validation") {
  RedAptSpec s;
  s.channels = 4;
  s.block2 = {3, 2, 1};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.block2 = {5, 1, 2};
  CHECK_NOTHROW(s.validate());
  s.channels = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}
