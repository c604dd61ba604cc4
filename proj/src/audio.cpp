// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "redapt/rng.hpp"

namespace redapt {

namespace {

constexpr std::array<double, kToneClasses> kClassHz = {220.0, 520.0, 1250.0, 2900.0};
constexpr std::uint64_t kSynthTag = 0x73796e7468ULL;
constexpr std::uint64_t kAugmentTag = 0x6175676dULL;

// x at fractional index pos, linear interpolation, clamped at the ends.
double sample_at(const std::vector<double>& x, double pos) {
  if (pos <= 0.0) return x.front();
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= x.size()) return x.back();
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0) return x[i];
  return x[i] + frac * (x[i + 1] - x[i]);
}

void require_nonempty(const AudioClip& clip, const char* op) {
  if (clip.samples.empty()) throw AudioError(std::string(op) + ": empty clip");
}

// Waveform-similarity overlap-add time stretch to round(n * factor) samples.
std::vector<double> wsola_stretch(const std::vector<double>& x, double factor) {
  const std::size_t n = x.size();
  const std::size_t out_len = static_cast<std::size_t>(std::llround(static_cast<double>(n) * factor));
  std::size_t frame = 512;
  while (frame > 16 && frame * 2 > n) frame /= 2;
  const std::size_t hop = frame / 2;
  const auto tolerance = static_cast<std::ptrdiff_t>(hop / 2);
  const double analysis_hop = static_cast<double>(hop) / factor;

  std::vector<double> window(frame);
  for (std::size_t i = 0; i < frame; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(frame));
  }
  auto at = [&](std::ptrdiff_t i) {
    return i >= 0 && static_cast<std::size_t>(i) < n ? x[static_cast<std::size_t>(i)] : 0.0;
  };

  std::vector<double> out(out_len + frame, 0.0);
  std::vector<double> weight(out_len + frame, 0.0);
  std::ptrdiff_t prev = 0;
  for (std::size_t k = 0; k * hop < out_len; ++k) {
    std::ptrdiff_t pos = 0;
    if (k > 0) {
      const auto nominal = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(k) * analysis_hop));
      const std::ptrdiff_t natural = prev + static_cast<std::ptrdiff_t>(hop);
      const auto last = static_cast<std::ptrdiff_t>(n > frame ? n - frame : 0);
      double best = -INFINITY;
      pos = std::clamp<std::ptrdiff_t>(nominal, 0, last);
      for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, nominal - tolerance);
           c <= std::min(last, nominal + tolerance); ++c) {
        double corr = 0.0;
        for (std::size_t i = 0; i < frame; i += 2) {
          corr += at(c + static_cast<std::ptrdiff_t>(i)) * at(natural + static_cast<std::ptrdiff_t>(i));
        }
        if (corr > best) {
          best = corr;
          pos = c;
        }
      }
    }
    for (std::size_t i = 0; i < frame; ++i) {
      out[k * hop + i] += window[i] * at(pos + static_cast<std::ptrdiff_t>(i));
      weight[k * hop + i] += window[i];
    }
    prev = pos;
  }
  out.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    if (weight[i] > 1e-6) out[i] /= weight[i];
  }
  return out;
}

}  // namespace

double class_frequency(std::size_t class_id) {
  if (class_id >= kToneClasses) {
    throw AudioError("class id " + std::to_string(class_id) + " out of range");
  }
  return kClassHz[class_id];
}

AudioClip synth_clip(std::size_t class_id, double duration_s, std::uint64_t seed,
                     const SynthOptions& options) {
  const double f0 = class_frequency(class_id);
  if (!(duration_s > 0.0)) throw AudioError("duration must be positive");
  Rng rng(hash_words(seed, class_id, kSynthTag));
  const double detune = rng.uniform(0.98, 1.02);
  const double gain = rng.uniform(0.6, 1.0);
  const double phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);

  AudioClip clip;
  clip.sample_rate = options.sample_rate;
  clip.label = class_id;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * options.sample_rate));
  clip.samples.resize(n);
  const double w = 2.0 * std::numbers::pi * f0 * detune / options.sample_rate;
  for (std::size_t t = 0; t < n; ++t) {
    const double tt = static_cast<double>(t);
    double v = gain * (std::sin(w * tt + phase1) + 0.3 * std::sin(2.0 * w * tt + phase2));
    if (options.noise_std > 0.0) v += options.noise_std * rng.normal();
    clip.samples[t] = std::clamp(v, -10.0, 10.0);
  }
  return clip;
}

AudioClip tempo(const AudioClip& clip, double rate) {
  if (!(rate > 0.0)) throw AudioError("tempo rate must be positive, got " + std::to_string(rate));
  require_nonempty(clip, "tempo");
  AudioClip out = clip;
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(clip.size()) / rate));
  out.samples.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    out.samples[j] = sample_at(clip.samples, static_cast<double>(j) * rate);
  }
  return out;
}

AudioClip pitch(const AudioClip& clip, double cents) {
  if (std::abs(cents) > 1200.0) throw AudioError("pitch shift limited to +-1200 cents");
  require_nonempty(clip, "pitch");
  if (cents == 0.0) return clip;
  const double factor = std::exp2(cents / 1200.0);
  const std::vector<double> stretched = wsola_stretch(clip.samples, factor);
  AudioClip out = clip;
  const double step = static_cast<double>(stretched.size()) / static_cast<double>(clip.size());
  for (std::size_t j = 0; j < clip.size(); ++j) {
    out.samples[j] = sample_at(stretched, static_cast<double>(j) * step);
  }
  return out;
}

AudioClip echo(const AudioClip& clip, double delay_ms, double decay) {
  if (delay_ms < 0.0 || decay < 0.0) throw AudioError("echo delay and decay must be non-negative");
  AudioClip out = clip;
  if (decay == 0.0) return out;
  const auto d = static_cast<std::size_t>(std::llround(delay_ms * clip.sample_rate / 1000.0));
  for (std::size_t t = d; t < clip.size(); ++t) out.samples[t] += decay * clip.samples[t - d];
  return out;
}

AudioClip normalize(const AudioClip& clip) {
  require_nonempty(clip, "normalize");
  const auto n = static_cast<double>(clip.size());
  AudioClip out = clip;
  auto mean_of = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / n;
  };
  const double mean = mean_of(out.samples);
  for (double& x : out.samples) x -= mean;
  double var = 0.0;
  for (double x : out.samples) var += x * x;
  var /= n;
  if (!(var > 1e-24)) throw AudioError("cannot normalize a constant clip");
  const double inv = 1.0 / std::sqrt(var);
  for (double& x : out.samples) x *= inv;
  // Second centring pass removes rounding residue of the first.
  const double residue = mean_of(out.samples);
  for (double& x : out.samples) x -= residue;
  return out;
}

AugmentDraw draw_augmentation(const AugmentPolicy& policy, std::uint64_t seed) {
  Rng rng(hash_words(seed, kAugmentTag));
  AugmentDraw d;
  d.applied = rng.bernoulli(policy.probability);
  d.rate = rng.uniform(policy.tempo_lo, policy.tempo_hi);
  d.cents = rng.uniform(policy.cents_lo, policy.cents_hi);
  d.delay_ms = rng.uniform(policy.delay_ms_lo, policy.delay_ms_hi);
  d.decay = rng.uniform(policy.decay_lo, policy.decay_hi);
  return d;
}

AudioClip apply_augmentation(const AudioClip& clip, const AugmentDraw& draw) {
  if (!draw.applied) return normalize(clip);
  AudioClip out = tempo(clip, draw.rate);
  out = pitch(out, draw.cents);
  out = echo(out, draw.delay_ms, draw.decay);
  return normalize(out);
}

AudioClip augment(const AudioClip& clip, const AugmentPolicy& policy, std::uint64_t seed) {
  return apply_augmentation(clip, draw_augmentation(policy, seed));
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& f, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const AudioClip& clip, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw AudioError("cannot open " + path + " for writing");
  const auto data_bytes = static_cast<std::uint32_t>(clip.size() * 2);
  const auto rate = static_cast<std::uint32_t>(std::llround(clip.sample_rate));
  f.write("RIFF", 4);
  put_u32(f, 36 + data_bytes);
  f.write("WAVEfmt ", 8);
  put_u32(f, 16);
  put_u16(f, 1);  // PCM
  put_u16(f, 1);  // mono
  put_u32(f, rate);
  put_u32(f, rate * 2);
  put_u16(f, 2);
  put_u16(f, 16);
  f.write("data", 4);
  put_u32(f, data_bytes);
  for (double s : clip.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
    put_u16(f, static_cast<std::uint16_t>(q));
  }
  if (!f) throw AudioError("write failed for " + path);
}

AudioClip read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw AudioError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw AudioError(path + ": not a RIFF/WAVE file");
  }
  AudioClip clip;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t size = get_u32(buf.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw AudioError(path + ": truncated chunk");
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      if (size < 16 || get_u16(buf.data() + body) != 1 || get_u16(buf.data() + body + 2) != 1 ||
          get_u16(buf.data() + body + 14) != 16) {
        throw AudioError(path + ": only mono 16-bit PCM is supported");
      }
      clip.sample_rate = get_u32(buf.data() + body + 4);
      have_fmt = true;
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw AudioError(path + ": data chunk before fmt chunk");
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto q = static_cast<std::int16_t>(get_u16(buf.data() + body + 2 * i));
        clip.samples[i] = q / 32767.0;
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw AudioError(path + ": no data chunk");
}

}  // namespace redapt
