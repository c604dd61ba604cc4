// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_AUDIO_HPP_
#define REDAPT_AUDIO_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace redapt {

inline constexpr std::size_t kToneClasses = 4;
inline constexpr double kDefaultSampleRate = 16000.0;

class AudioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AudioClip {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;
  std::size_t label = 0;

  std::size_t size() const { return samples.size(); }
};

/// Fundamental frequency (Hz) of a tone class.
double class_frequency(std::size_t class_id);

struct SynthOptions {
  double noise_std = 0.1;
  double sample_rate = kDefaultSampleRate;
};

/// Fundamental plus a weaker second harmonic with a seeded phase, gain and
/// slight detune, plus Gaussian noise. Length round(duration_s * rate).
AudioClip synth_clip(std::size_t class_id, double duration_s, std::uint64_t seed,
                     const SynthOptions& options = {});

/// Speed change by linear interpolation; output length round(n / rate).
AudioClip tempo(const AudioClip& clip, double rate);

/// Shift by cents: time-stretch by 2^(cents/1200) with waveform-similarity
/// overlap-add, then resample back to the original length. An approximation
/// of true pitch shifting.
AudioClip pitch(const AudioClip& clip, double cents);

/// y[t] = x[t] + decay * x[t - d] with d = round(delay_ms * rate / 1000).
AudioClip echo(const AudioClip& clip, double delay_ms, double decay);

/// Zero mean, unit (population) variance. Throws AudioError on a constant clip.
AudioClip normalize(const AudioClip& clip);

struct AugmentPolicy {
  double probability = 0.8;
  double tempo_lo = 0.85, tempo_hi = 1.3;
  double cents_lo = -300.0, cents_hi = 300.0;
  double delay_ms_lo = 20.0, delay_ms_hi = 200.0;
  double decay_lo = 0.05, decay_hi = 0.2;
};

struct AugmentDraw {
  bool applied = false;
  double rate = 1.0;
  double cents = 0.0;
  double delay_ms = 0.0;
  double decay = 0.0;
};

/// One Bernoulli draw gates all three effects; parameters uniform in range.
AugmentDraw draw_augmentation(const AugmentPolicy& policy, std::uint64_t seed);

/// tempo, pitch, echo (when drawn), then normalize.
AudioClip augment(const AudioClip& clip, const AugmentPolicy& policy, std::uint64_t seed);
AudioClip apply_augmentation(const AudioClip& clip, const AugmentDraw& draw);

/// Mono PCM 16-bit little-endian. Samples are clamped to [-1, 1] on write.
void write_wav(const AudioClip& clip, const std::string& path);
AudioClip read_wav(const std::string& path);

}  // namespace redapt

#endif  // REDAPT_AUDIO_HPP_
