// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "reference.hpp"

#include <cmath>
#include <numbers>

namespace ref {

using redapt::Tensor;

namespace {

double get(const Tensor& t, std::size_t i) { return t.data()[i]; }

}  // namespace

Mat batch_item(const Tensor& x, std::size_t b) {
  const std::size_t t = x.dim(1), c = x.dim(2);
  Mat m(t, std::vector<double>(c));
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < c; ++j) m[i][j] = get(x, (b * t + i) * c + j);
  }
  return m;
}

double max_abs_diff(const Mat& a, const Tensor& x, std::size_t b) {
  const Mat m = batch_item(x, b);
  if (m.size() != a.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (m[i].size() != a[i].size()) return INFINITY;
    for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, std::abs(a[i][j] - m[i][j]));
  }
  return worst;
}

std::size_t conv_out_len(std::size_t n, std::size_t k, std::size_t s, std::size_t p) {
  std::size_t count = 0;
  for (std::size_t start = 0; start + k <= n + 2 * p; start += s) ++count;
  return count;
}

Mat conv1d(const Mat& x, const Tensor& w, const Tensor& bias, std::size_t k, std::size_t s,
           std::size_t p) {
  const std::size_t n = x.size(), cin = w.dim(1), cout = w.dim(2);
  const std::size_t m = conv_out_len(n, k, s, p);
  Mat y(m, std::vector<double>(cout, 0.0));
  for (std::size_t o = 0; o < m; ++o) {
    for (std::size_t co = 0; co < cout; ++co) {
      double acc = bias.defined() ? get(bias, co) : 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const long pos = static_cast<long>(o * s + j) - static_cast<long>(p);
        if (pos < 0 || pos >= static_cast<long>(n)) continue;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          acc += x[static_cast<std::size_t>(pos)][ci] * get(w, (j * cin + ci) * cout + co);
        }
      }
      y[o][co] = acc;
    }
  }
  return y;
}

Mat layernorm(const Mat& x, const Tensor& gain, const Tensor& bias) {
  Mat y = x;
  for (auto& row : y) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(row.size());
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean) * inv * get(gain, j) + get(bias, j);
  }
  return y;
}

Mat gelu(Mat x) {
  for (auto& row : x) {
    for (double& v : row) v = 0.5 * v * (1.0 + std::tanh(0.7978845608 * (v + 0.044715 * v * v * v)));
  }
  return x;
}

Mat linear(const Mat& x, const Tensor& w, const Tensor& bias) {
  const std::size_t din = w.dim(0), dout = w.dim(1);
  Mat y(x.size(), std::vector<double>(dout));
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (std::size_t o = 0; o < dout; ++o) {
      double acc = bias.defined() ? get(bias, o) : 0.0;
      for (std::size_t i = 0; i < din; ++i) acc += x[t][i] * get(w, i * dout + o);
      y[t][o] = acc;
    }
  }
  return y;
}

Mat add(const Mat& a, const Mat& b) {
  Mat y = a;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y[i].size(); ++j) y[i][j] += b[i][j];
  }
  return y;
}

Mat redapt_block(const Mat& a, const redapt::RedAptParams& p, const redapt::RedAptSpec& spec) {
  auto wrap = [&](Mat h, const Tensor& g, const Tensor& b) {
    if (spec.enable_layernorm) h = layernorm(h, g, b);
    if (spec.enable_gelu) h = gelu(std::move(h));
    return h;
  };
  const auto& b1 = spec.block1;
  const auto& b2 = spec.block2;
  Mat first = wrap(conv1d(a, p.conv1_w, p.conv1_b, b1.kernel, b1.stride, b1.padding), p.ln1_gain, p.ln1_bias);
  if (!spec.enable_second_cnn) return first;
  Mat second = wrap(conv1d(first, p.conv2_w, p.conv2_b, b2.kernel, b2.stride, b2.padding), p.ln2_gain, p.ln2_bias);
  return add(first, second);
}

Mat transformer_layer(const Mat& x, const redapt::TransformerLayerParams& p) {
  const std::size_t t = x.size(), d = p.d_model, h = p.n_heads, dh = d / h;
  const Mat normed = layernorm(x, p.ln1_gain, p.ln1_bias);
  const Mat q = linear(normed, p.wq, p.bq);
  const Mat k = linear(normed, p.wk, p.bk);
  const Mat v = linear(normed, p.wv, p.bv);
  Mat context(t, std::vector<double>(d, 0.0));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t head = 0; head < h; ++head) {
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<double> s(t);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < t; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q[i][head * dh + c] * k[j][head * dh + c];
        s[j] = dot * scale;
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < t; ++j) {
        for (std::size_t c = 0; c < dh; ++c) context[i][head * dh + c] += s[j] / z * v[j][head * dh + c];
      }
    }
  }
  const Mat hidden = add(x, linear(context, p.wo, p.bo));
  const Mat inner = gelu(linear(layernorm(hidden, p.ln2_gain, p.ln2_bias), p.w1, p.b1));
  return add(hidden, linear(inner, p.w2, p.b2));
}

Mat feature_extractor(const std::vector<double>& wave, const redapt::FeatureExtractorConfig& cfg,
                      const redapt::FeatureExtractorParams& p) {
  Mat h(wave.size(), std::vector<double>(1));
  for (std::size_t i = 0; i < wave.size(); ++i) h[i][0] = wave[i];
  for (std::size_t l = 0; l < cfg.kernels.size(); ++l) {
    const auto& layer = p.layers[l];
    h = gelu(layernorm(conv1d(h, layer.w, layer.b, cfg.kernels[l], cfg.strides[l], 0), layer.ln_gain,
                       layer.ln_bias));
  }
  return h;
}

Mat encoder(const std::vector<double>& wave, const redapt::EncoderParams& p,
            const redapt::EncoderConfig& cfg) {
  Mat h = feature_extractor(wave, cfg.feature_extractor, p.feature_extractor);
  h = linear(layernorm(h, p.feature_ln_gain, p.feature_ln_bias), p.proj_w, p.proj_b);
  const redapt::RedAptSpec spec = cfg.block_spec();
  std::size_t block = 0;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    h = transformer_layer(h, p.layers[i]);
    for (std::size_t pos : cfg.positions.positions) {
      if (pos == i) h = redapt_block(h, p.blocks[block++], spec);
    }
  }
  return layernorm(h, p.final_ln_gain, p.final_ln_bias);
}

std::size_t dominant_bin(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      re += x[t] * std::cos(a);
      im -= x[t] * std::sin(a);
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

}  // namespace ref
