// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/encoder.hpp"

#include <algorithm>
#include <string>

#include "redapt/autodiff.hpp"
#include "redapt/rng.hpp"

namespace redapt {

namespace {

constexpr std::uint64_t kStreamFeatures = 1;
constexpr std::uint64_t kStreamProjection = 2;
constexpr std::uint64_t kStreamLayerBase = 100;
constexpr std::uint64_t kStreamBlockBase = 10000;
constexpr std::uint64_t kReinitTag = 0x7265696e6974ULL;

Tensor copy_or_empty(const Tensor& t) { return t.defined() ? t.clone() : Tensor{}; }

TransformerLayerParams clone_layer(const TransformerLayerParams& p) {
  TransformerLayerParams c = p;
  for (Tensor* t : {&c.ln1_gain, &c.ln1_bias, &c.wq, &c.bq, &c.wk, &c.bk, &c.wv, &c.bv, &c.wo,
                    &c.bo, &c.ln2_gain, &c.ln2_bias, &c.w1, &c.b1, &c.w2, &c.b2}) {
    *t = t->clone();
  }
  return c;
}

}  // namespace

bool PositionConfig::contains(std::size_t layer) const {
  return std::binary_search(positions.begin(), positions.end(), layer);
}

void PositionConfig::validate(std::size_t layers) const {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= layers) {
      throw ConfigError("position " + std::to_string(positions[i]) + " outside [0, " +
                        std::to_string(layers - 1) + "]");
    }
    if (i > 0 && positions[i] <= positions[i - 1]) {
      throw ConfigError("positions must be strictly increasing");
    }
  }
}

EncoderConfig EncoderConfig::desk() {
  EncoderConfig c;
  c.layers = 8;
  c.d_model = 64;
  c.n_heads = 4;
  c.d_ffn = 256;
  c.feature_extractor.channels = 32;
  return c;
}

EncoderConfig EncoderConfig::w2v2_large() {
  EncoderConfig c;
  c.layers = 24;
  c.d_model = 1024;
  c.n_heads = 16;
  c.d_ffn = 4096;
  c.feature_extractor.channels = 512;
  return c;
}

RedAptSpec EncoderConfig::block_spec() const {
  RedAptSpec s = redapt;
  s.channels = d_model;
  return s;
}

void EncoderConfig::validate() const {
  if (layers == 0) throw ConfigError("encoder needs at least one layer");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) +
                      ") must be a positive multiple of n_heads (" + std::to_string(n_heads) + ")");
  }
  if (d_ffn == 0) throw ConfigError("d_ffn must be positive");
  if (reinit_top_k > layers) throw ConfigError("reinit_top_k exceeds layer count");
  feature_extractor.validate();
  block_spec().validate();
  positions.validate(layers);
}

LengthTrace length_trace(const EncoderConfig& cfg, std::size_t raw_samples) {
  cfg.validate();
  LengthTrace tr;
  tr.raw_samples = raw_samples;
  tr.n0 = cfg.feature_extractor.output_length(raw_samples);
  std::size_t n = tr.n0;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    tr.layer_input.push_back(n);
    if (cfg.positions.contains(i)) n = reduced_length(n, cfg.redapt.block1);
  }
  tr.final_length = n;
  return tr;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EncoderParams p;
  {
    Rng rng(hash_words(seed, kStreamFeatures));
    p.feature_extractor = FeatureExtractorParams::init(cfg.feature_extractor, rng);
  }
  const std::size_t c = cfg.feature_extractor.channels;
  p.feature_ln_gain = Tensor::full({c}, 1.0);
  p.feature_ln_bias = Tensor::zeros({c});
  {
    Rng rng(hash_words(seed, kStreamProjection));
    p.proj_w = fan_in_init({c, cfg.d_model}, c, rng);
    p.proj_b = Tensor::zeros({cfg.d_model});
  }
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    Rng rng(hash_words(seed, kStreamLayerBase + i));
    p.layers.push_back(TransformerLayerParams::init(cfg.d_model, cfg.n_heads, cfg.d_ffn, rng));
  }
  for (std::size_t pos : cfg.positions.positions) {
    Rng rng(hash_words(seed, kStreamBlockBase + pos));
    p.blocks.push_back(RedAptParams::init(cfg.block_spec(), rng));
  }
  p.final_ln_gain = Tensor::full({cfg.d_model}, 1.0);
  p.final_ln_bias = Tensor::zeros({cfg.d_model});
  return p;
}

EncoderParams EncoderParams::clone() const {
  EncoderParams c;
  for (const auto& l : feature_extractor.layers) {
    c.feature_extractor.layers.push_back({l.w.clone(), l.b.clone(), l.ln_gain.clone(), l.ln_bias.clone()});
  }
  c.feature_ln_gain = feature_ln_gain.clone();
  c.feature_ln_bias = feature_ln_bias.clone();
  c.proj_w = proj_w.clone();
  c.proj_b = proj_b.clone();
  for (const auto& l : layers) c.layers.push_back(clone_layer(l));
  for (const auto& b : blocks) {
    c.blocks.push_back({copy_or_empty(b.conv1_w), copy_or_empty(b.conv1_b), copy_or_empty(b.ln1_gain),
                        copy_or_empty(b.ln1_bias), copy_or_empty(b.conv2_w), copy_or_empty(b.conv2_b),
                        copy_or_empty(b.ln2_gain), copy_or_empty(b.ln2_bias)});
  }
  c.final_ln_gain = final_ln_gain.clone();
  c.final_ln_bias = final_ln_bias.clone();
  return c;
}

void EncoderParams::collect_feature_extractor(ParamSet& out, const std::string& prefix) const {
  feature_extractor.collect(out, prefix + "fe.");
}

void EncoderParams::collect_trainable(ParamSet& out, const std::string& prefix) const {
  out.add(prefix + "fe_ln.gain", feature_ln_gain);
  out.add(prefix + "fe_ln.bias", feature_ln_bias);
  out.add(prefix + "proj.w", proj_w);
  out.add(prefix + "proj.b", proj_b);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(out, prefix + "layer" + std::to_string(i) + ".");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + "redapt" + std::to_string(i) + ".");
  }
  out.add(prefix + "final_ln.gain", final_ln_gain);
  out.add(prefix + "final_ln.bias", final_ln_bias);
}

void EncoderParams::collect(ParamSet& out, const std::string& prefix) const {
  collect_feature_extractor(out, prefix);
  collect_trainable(out, prefix);
}

Tensor encoder_features(const Tensor& wave, const EncoderParams& params, const EncoderConfig& cfg) {
  MacLabel label("fe.");
  return feature_extractor_forward(wave, cfg.feature_extractor, params.feature_extractor);
}

Tensor encoder_forward_from_features(const Tensor& features, const EncoderParams& params,
                                     const EncoderConfig& cfg, const ForwardContext& ctx) {
  cfg.validate();
  if (params.layers.size() != cfg.layers || params.blocks.size() != cfg.positions.m()) {
    throw ConfigError("encoder params do not match config (layers/blocks)");
  }
  Tensor h;
  {
    MacLabel label("proj.");
    h = linear(layernorm(features, params.feature_ln_gain, params.feature_ln_bias), params.proj_w,
               params.proj_b);
  }
  const RedAptSpec spec = cfg.block_spec();
  std::size_t block = 0;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    {
      MacLabel label("layer" + std::to_string(i) + ".");
      h = transformer_layer_forward(h, params.layers[i], ctx, i + 1);
    }
    if (cfg.positions.contains(i)) {
      MacLabel label("redapt" + std::to_string(i) + ".");
      h = redapt_forward(h, params.blocks[block++], spec);
    }
  }
  MacLabel label("final.");
  return layernorm(h, params.final_ln_gain, params.final_ln_bias);
}

Tensor encoder_forward(const Tensor& wave, const EncoderParams& params, const EncoderConfig& cfg,
                       const ForwardContext& ctx) {
  cfg.validate();
  if (params.layers.size() != cfg.layers || params.blocks.size() != cfg.positions.m()) {
    throw ConfigError("encoder params do not match config (layers/blocks)");
  }
  return encoder_forward_from_features(encoder_features(wave, params, cfg), params, cfg, ctx);
}

EncoderParams reinit_top_layers(const EncoderParams& params, const EncoderConfig& cfg,
                                std::size_t k, std::uint64_t seed) {
  if (k > cfg.layers) {
    throw ConfigError("cannot re-initialize " + std::to_string(k) + " of " +
                      std::to_string(cfg.layers) + " layers");
  }
  EncoderParams out = params.clone();
  for (std::size_t i = cfg.layers - k; i < cfg.layers; ++i) {
    Rng rng(hash_words(seed, kReinitTag, i));
    out.layers[i] = TransformerLayerParams::init(cfg.d_model, cfg.n_heads, cfg.d_ffn, rng);
  }
  return out;
}

}  // namespace redapt
