// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/redapt_block.hpp"

#include <string>

namespace redapt {

void RedAptSpec::validate() const {
  if (channels == 0) throw ConfigError("RedApt channel width must be positive");
  for (const ReductionSpec* r : {&block1, &block2}) {
    if (r->kernel == 0 || r->stride == 0) {
      throw ConfigError("RedApt convolution needs kernel >= 1 and stride >= 1");
    }
  }
  if (enable_second_cnn && (block2.stride != 1 || block2.kernel != 2 * block2.padding + 1)) {
    throw ConfigError("RedApt second convolution must preserve length (s=1, k=2p+1), got <" +
                      std::to_string(block2.kernel) + "," + std::to_string(block2.stride) +
                      "," + std::to_string(block2.padding) + ">");
  }
}

RedAptParams RedAptParams::init(const RedAptSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t d = spec.channels;
  RedAptParams p;
  p.conv1_w = fan_in_init({spec.block1.kernel, d, d}, spec.block1.kernel * d, rng);
  p.conv1_b = Tensor::zeros({d});
  if (spec.enable_layernorm) {
    p.ln1_gain = Tensor::full({d}, 1.0);
    p.ln1_bias = Tensor::zeros({d});
  }
  if (spec.enable_second_cnn) {
    p.conv2_w = fan_in_init({spec.block2.kernel, d, d}, spec.block2.kernel * d, rng);
    p.conv2_b = Tensor::zeros({d});
    if (spec.enable_layernorm) {
      p.ln2_gain = Tensor::full({d}, 1.0);
      p.ln2_bias = Tensor::zeros({d});
    }
  }
  return p;
}

void RedAptParams::collect(ParamSet& out, const std::string& prefix) const {
  auto put = [&](const char* name, const Tensor& t) {
    if (t.defined()) out.add(prefix + name, t);
  };
  put("conv1.w", conv1_w);
  put("conv1.b", conv1_b);
  put("ln1.gain", ln1_gain);
  put("ln1.bias", ln1_bias);
  put("conv2.w", conv2_w);
  put("conv2.b", conv2_b);
  put("ln2.gain", ln2_gain);
  put("ln2.bias", ln2_bias);
}

std::uint64_t param_count(const RedAptSpec& spec) {
  const std::uint64_t d = spec.channels;
  const std::uint64_t norm = spec.enable_layernorm ? 2 * d : 0;
  std::uint64_t n = spec.block1.kernel * d * d + d + norm;
  if (spec.enable_second_cnn) n += spec.block2.kernel * d * d + d + norm;
  return n;
}

Tensor redapt_forward(const Tensor& a, const RedAptParams& p, const RedAptSpec& spec) {
  spec.validate();
  if (a.rank() != 3 || a.dim(2) != spec.channels) {
    throw ShapeError("redapt_forward: input " + shape_str(a.shape()) + " for width " +
                     std::to_string(spec.channels));
  }
  auto wrap = [&](Tensor h, const Tensor& gain, const Tensor& bias) {
    if (spec.enable_layernorm) h = layernorm(h, gain, bias);
    if (spec.enable_gelu) h = gelu(h);
    return h;
  };
  Tensor pooled = wrap(conv1d(a, p.conv1_w, p.conv1_b, spec.block1), p.ln1_gain, p.ln1_bias);
  if (!spec.enable_second_cnn) return pooled;
  Tensor restored = wrap(conv1d(pooled, p.conv2_w, p.conv2_b, spec.block2), p.ln2_gain, p.ln2_bias);
  return add(pooled, restored);
}

}  // namespace redapt
