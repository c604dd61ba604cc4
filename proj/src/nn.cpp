// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/nn.hpp"

#include <cmath>
#include <string>

#include "redapt/autodiff.hpp"

namespace redapt {

namespace {

Tensor ones(std::size_t n) { return Tensor::full({n}, 1.0); }
Tensor zeros(std::size_t n) { return Tensor::zeros({n}); }

// [b, t, d] -> [b*h, t, dh]
Tensor split_heads(const Tensor& x, std::size_t heads) {
  const std::size_t b = x.dim(0), t = x.dim(1), d = x.dim(2), dh = d / heads;
  Tensor r = reshape(x, {b, t, heads, dh});
  r = permute(r, {0, 2, 1, 3});
  return reshape(r, {b * heads, t, dh});
}

// [b*h, t, dh] -> [b, t, d]
Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t heads) {
  const std::size_t t = x.dim(1), dh = x.dim(2);
  Tensor r = reshape(x, {batch, heads, t, dh});
  r = permute(r, {0, 2, 1, 3});
  return reshape(r, {batch, t, heads * dh});
}

}  // namespace

TransformerLayerParams TransformerLayerParams::init(std::size_t d_model, std::size_t n_heads,
                                                    std::size_t d_ffn, Rng& rng) {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) + ") must be a positive multiple of n_heads (" +
                      std::to_string(n_heads) + ")");
  }
  if (d_ffn == 0) throw ConfigError("d_ffn must be positive");
  TransformerLayerParams p;
  p.d_model = d_model;
  p.n_heads = n_heads;
  p.d_ffn = d_ffn;
  p.ln1_gain = ones(d_model);
  p.ln1_bias = zeros(d_model);
  p.wq = fan_in_init({d_model, d_model}, d_model, rng);
  p.bq = zeros(d_model);
  p.wk = fan_in_init({d_model, d_model}, d_model, rng);
  p.bk = zeros(d_model);
  p.wv = fan_in_init({d_model, d_model}, d_model, rng);
  p.bv = zeros(d_model);
  p.wo = fan_in_init({d_model, d_model}, d_model, rng);
  p.bo = zeros(d_model);
  p.ln2_gain = ones(d_model);
  p.ln2_bias = zeros(d_model);
  p.w1 = fan_in_init({d_model, d_ffn}, d_model, rng);
  p.b1 = zeros(d_ffn);
  p.w2 = fan_in_init({d_ffn, d_model}, d_ffn, rng);
  p.b2 = zeros(d_model);
  return p;
}

void TransformerLayerParams::collect(ParamSet& out, const std::string& prefix) const {
  out.add(prefix + "ln1.gain", ln1_gain);
  out.add(prefix + "ln1.bias", ln1_bias);
  out.add(prefix + "attn.wq", wq);
  out.add(prefix + "attn.bq", bq);
  out.add(prefix + "attn.wk", wk);
  out.add(prefix + "attn.bk", bk);
  out.add(prefix + "attn.wv", wv);
  out.add(prefix + "attn.bv", bv);
  out.add(prefix + "attn.wo", wo);
  out.add(prefix + "attn.bo", bo);
  out.add(prefix + "ln2.gain", ln2_gain);
  out.add(prefix + "ln2.bias", ln2_bias);
  out.add(prefix + "ffn.w1", w1);
  out.add(prefix + "ffn.b1", b1);
  out.add(prefix + "ffn.w2", w2);
  out.add(prefix + "ffn.b2", b2);
}

Tensor mhsa_forward(const Tensor& x, const TransformerLayerParams& p, const ForwardContext& ctx,
                    std::uint64_t dropout_stream, AttentionProbe* probe) {
  if (x.rank() != 3 || x.dim(2) != p.d_model) {
    throw ShapeError("mhsa_forward: input " + shape_str(x.shape()) + " for d_model " +
                     std::to_string(p.d_model));
  }
  if (x.dim(1) == 0) throw LengthError("mhsa_forward: empty sequence");
  const std::size_t b = x.dim(0), h = p.n_heads;
  Tensor normed = layernorm(x, p.ln1_gain, p.ln1_bias);
  Tensor q = split_heads(linear(normed, p.wq, p.bq), h);
  Tensor k = split_heads(linear(normed, p.wk, p.bk), h);
  Tensor v = split_heads(linear(normed, p.wv, p.bv), h);
  Tensor scores = scale(bmm(q, transpose(k, 1, 2)), 1.0 / std::sqrt(static_cast<double>(p.head_dim())));
  Tensor attn = softmax_lastaxis(scores);
  if (probe) probe->weights = reshape(attn, {b, h, x.dim(1), x.dim(1)});
  Tensor context = merge_heads(bmm(attn, v), b, h);
  Tensor out = linear(context, p.wo, p.bo);
  out = dropout(out, ctx.dropout_p, ctx.train, ctx.key(dropout_stream * 4 + 0));
  return add(x, out);
}

Tensor transformer_layer_forward(const Tensor& x, const TransformerLayerParams& p,
                                 const ForwardContext& ctx, std::uint64_t dropout_stream) {
  Tensor hidden = mhsa_forward(x, p, ctx, dropout_stream);
  Tensor normed = layernorm(hidden, p.ln2_gain, p.ln2_bias);
  Tensor inner = gelu(linear(normed, p.w1, p.b1));
  inner = dropout(inner, ctx.dropout_p, ctx.train, ctx.key(dropout_stream * 4 + 1));
  Tensor out = linear(inner, p.w2, p.b2);
  out = dropout(out, ctx.dropout_p, ctx.train, ctx.key(dropout_stream * 4 + 2));
  return add(hidden, out);
}

void FeatureExtractorConfig::validate() const {
  if (kernels.empty() || kernels.size() != strides.size()) {
    throw ConfigError("feature extractor needs matching, non-empty kernel and stride lists");
  }
  if (channels == 0) throw ConfigError("feature extractor channel width must be positive");
  std::size_t product = 1;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels[i] == 0) throw ConfigError("feature extractor kernel must be >= 1");
    if (strides[i] == 0) throw ConfigError("feature extractor stride must be >= 1");
    product *= strides[i];
  }
  if (product != downsample) {
    throw ConfigError("feature extractor strides multiply to " + std::to_string(product) +
                      " but downsample is declared as " + std::to_string(downsample));
  }
}

std::size_t FeatureExtractorConfig::receptive_field() const {
  std::size_t r = 1;
  for (std::size_t i = kernels.size(); i-- > 0;) r = (r - 1) * strides[i] + kernels[i];
  return r;
}

std::vector<std::size_t> FeatureExtractorConfig::layer_lengths(std::size_t samples) const {
  std::vector<std::size_t> out;
  std::size_t n = samples;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    n = reduced_length(n, {kernels[i], strides[i], 0});
    out.push_back(n);
  }
  return out;
}

std::size_t FeatureExtractorConfig::output_length(std::size_t samples) const {
  return layer_lengths(samples).back();
}

FeatureExtractorParams FeatureExtractorParams::init(const FeatureExtractorConfig& cfg, Rng& rng) {
  cfg.validate();
  FeatureExtractorParams p;
  std::size_t cin = 1;
  for (std::size_t k : cfg.kernels) {
    Layer l;
    l.w = fan_in_init({k, cin, cfg.channels}, k * cin, rng);
    l.b = zeros(cfg.channels);
    l.ln_gain = ones(cfg.channels);
    l.ln_bias = zeros(cfg.channels);
    p.layers.push_back(std::move(l));
    cin = cfg.channels;
  }
  return p;
}

void FeatureExtractorParams::collect(ParamSet& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string pre = prefix + "conv" + std::to_string(i) + ".";
    out.add(pre + "w", layers[i].w);
    out.add(pre + "b", layers[i].b);
    out.add(pre + "ln.gain", layers[i].ln_gain);
    out.add(pre + "ln.bias", layers[i].ln_bias);
  }
}

Tensor feature_extractor_forward(const Tensor& wave, const FeatureExtractorConfig& cfg,
                                 const FeatureExtractorParams& params) {
  cfg.validate();
  if (wave.rank() != 2) {
    throw ShapeError("feature extractor expects [batch, samples], got " + shape_str(wave.shape()));
  }
  if (params.layers.size() != cfg.kernels.size()) {
    throw ConfigError("feature extractor params do not match config depth");
  }
  Tensor h = reshape(wave, {wave.dim(0), wave.dim(1), 1});
  for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
    const auto& l = params.layers[i];
    h = conv1d(h, l.w, l.b, {cfg.kernels[i], cfg.strides[i], 0});
    h = gelu(layernorm(h, l.ln_gain, l.ln_bias));
  }
  return h;
}

}  // namespace redapt
