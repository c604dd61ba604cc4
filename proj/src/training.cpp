// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <utility>

#include "redapt/autodiff.hpp"
#include "redapt/ops.hpp"
#include "redapt/rng.hpp"

namespace redapt {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing must lie in [0, 1)");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(plateau_factor > 0.0 && plateau_factor <= 1.0)) {
    throw ConfigError("plateau_factor must lie in (0, 1]");
  }
}

AdamState AdamState::zeros_like(const ParamSet& params) {
  AdamState s;
  for (const auto& [name, t] : params) {
    s.m.push_back(Tensor::zeros(t.shape()));
    s.v.push_back(Tensor::zeros(t.shape()));
  }
  return s;
}

double global_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g.data()) sq += x * x;
  }
  return std::sqrt(sq);
}

ClipReport clip_by_global_norm(std::vector<Tensor>& grads, double max_norm) {
  ClipReport r;
  r.norm_before = global_norm(grads);
  r.norm_after = r.norm_before;
  if (r.norm_before > max_norm) {
    r.scale = max_norm / r.norm_before;
    for (auto& g : grads) {
      for (double& x : g.data()) x *= r.scale;
    }
    r.norm_after = global_norm(grads);
  }
  return r;
}

std::vector<Tensor> gather_grads(const ParamSet& params) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : params) {
    Tensor g = Tensor::zeros(t.shape());
    if (t.has_grad()) std::ranges::copy(t.grad(), g.data().begin());
    out.push_back(std::move(g));
  }
  return out;
}

ClipReport adam_step(const ParamSet& params, std::vector<Tensor> grads, AdamState& state,
                     const OptimizerConfig& cfg, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " grads and " + std::to_string(state.m.size()) +
                     " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i].second.shape();
    if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s) {
      throw ShapeError("adam_step: shape mismatch for '" + params[i].first + "', expected " +
                       shape_str(s) + " got grad " + shape_str(grads[i].shape()));
    }
  }
  const ClipReport clip = clip_by_global_norm(grads, cfg.clip_norm);
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].second;
    auto pd = p.data();
    auto md = state.m[i].data();
    auto vd = state.v[i].data();
    const auto gd = std::as_const(grads[i]).data();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      md[j] = cfg.beta1 * md[j] + (1.0 - cfg.beta1) * gd[j];
      vd[j] = cfg.beta2 * vd[j] + (1.0 - cfg.beta2) * gd[j] * gd[j];
      const double mhat = md[j] / c1;
      const double vhat = vd[j] / c2;
      pd[j] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  return clip;
}

namespace {

constexpr std::uint64_t kTrainSplit = 1;
constexpr std::uint64_t kValSplit = 2;
constexpr std::uint64_t kBatchTag = 3;
constexpr std::uint64_t kAugmentStream = 4;
constexpr std::uint64_t kHeadTag = 0x68656164ULL;
constexpr std::size_t kEvalChunk = 32;

struct Dataset {
  std::vector<AudioClip> clips;
  std::vector<std::size_t> labels;
  Tensor features;  // [N, frames, channels] when cached
};

Dataset make_split(std::uint64_t split, std::size_t count, std::uint64_t seed, const ToyTaskConfig& task) {
  Dataset d;
  SynthOptions so;
  so.noise_std = task.noise_std;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t cls = i % kToneClasses;
    d.clips.push_back(normalize(synth_clip(cls, task.clip_seconds, hash_words(seed, split, i), so)));
    d.labels.push_back(cls);
  }
  return d;
}

// Crops or zero-pads to n samples.
void fit_length(AudioClip& clip, std::size_t n) { clip.samples.resize(n, 0.0); }

Tensor stack_waves(const std::vector<const AudioClip*>& clips) {
  const std::size_t n = clips.front()->size();
  Tensor w = Tensor::zeros({clips.size(), n});
  for (std::size_t i = 0; i < clips.size(); ++i) {
    std::ranges::copy(clips[i]->samples, w.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return w;
}

Tensor gather_rows(const Tensor& features, const std::vector<std::size_t>& rows) {
  const std::size_t per = features.numel() / features.dim(0);
  Shape s = features.shape();
  s[0] = rows.size();
  Tensor out = Tensor::zeros(s);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = features.data().subspan(rows[i] * per, per);
    std::ranges::copy(src, out.data().begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return out;
}

void cache_features(Dataset& d, const EncoderParams& params, const EncoderConfig& cfg) {
  NoGradScope no_grad;
  std::vector<Tensor> parts;
  for (std::size_t start = 0; start < d.clips.size(); start += kEvalChunk) {
    std::vector<const AudioClip*> chunk;
    for (std::size_t i = start; i < std::min(d.clips.size(), start + kEvalChunk); ++i) {
      chunk.push_back(&d.clips[i]);
    }
    parts.push_back(encoder_features(stack_waves(chunk), params, cfg));
  }
  Shape s = parts.front().shape();
  s[0] = d.clips.size();
  d.features = Tensor::zeros(s);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::ranges::copy(p.data(), d.features.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.numel();
  }
}

struct Model {
  const EncoderConfig& cfg;
  EncoderParams& params;
  Tensor head_w, head_b;

  Tensor logits(const Tensor& features, const ForwardContext& ctx) const {
    const Tensor h = encoder_forward_from_features(features, params, cfg, ctx);
    return linear(mean_axis(h, 1), head_w, head_b);
  }
};

Tensor batch_features(const Dataset& d, const std::vector<std::size_t>& rows, const Model& model,
                      const std::vector<AudioClip>* augmented) {
  if (d.features.defined() && augmented == nullptr) return gather_rows(d.features, rows);
  std::vector<const AudioClip*> clips;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    clips.push_back(augmented ? &(*augmented)[i] : &d.clips[rows[i]]);
  }
  return encoder_features(stack_waves(clips), model.params, model.cfg);
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalResult evaluate(const Dataset& val, const Model& model, double smoothing) {
  NoGradScope no_grad;
  EvalResult r;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < val.clips.size(); start += kEvalChunk) {
    std::vector<std::size_t> rows;
    for (std::size_t i = start; i < std::min(val.clips.size(), start + kEvalChunk); ++i) rows.push_back(i);
    const Tensor logits = model.logits(batch_features(val, rows, model, nullptr), {});
    std::vector<std::size_t> targets;
    for (std::size_t i : rows) targets.push_back(val.labels[i]);
    r.loss += cross_entropy_label_smoothed(logits, targets, smoothing).item() *
              static_cast<double>(rows.size());
    const std::size_t c = logits.dim(1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = logits.data().subspan(i * c, c);
      const auto pred = static_cast<std::size_t>(std::ranges::max_element(row) - row.begin());
      if (pred == targets[i]) ++correct;
    }
  }
  r.loss /= static_cast<double>(val.clips.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(val.clips.size());
  return r;
}

void check_finite(double loss, std::size_t step, const char* where) {
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "training diverged: " << where << " loss is " << loss << " at step " << step;
    throw TrainingError(os.str());
  }
}

}  // namespace

TrainResult train_toy(const EncoderConfig& cfg, const OptimizerConfig& opt, std::size_t steps,
                      std::uint64_t seed, const ToyTaskConfig& task) {
  cfg.validate();
  opt.validate();
  if (task.batch == 0 || task.train_clips == 0 || task.val_clips == 0 || task.eval_every == 0) {
    throw ConfigError("toy task needs positive batch, clip counts and eval interval");
  }
  const std::size_t samples = static_cast<std::size_t>(std::llround(task.clip_seconds * kDefaultSampleRate));
  length_trace(cfg, samples);  // throws if clips are too short for the model

  TrainResult result;
  result.params = EncoderParams::init(cfg, seed);
  if (cfg.reinit_top_k > 0) {
    result.params = reinit_top_layers(result.params, cfg, cfg.reinit_top_k, seed);
  }
  {
    Rng rng(hash_words(seed, kHeadTag));
    result.head_w = fan_in_init({cfg.d_model, kToneClasses}, cfg.d_model, rng);
    result.head_b = Tensor::zeros({kToneClasses});
  }
  Model model{cfg, result.params, result.head_w, result.head_b};

  ParamSet trainable;
  if (!task.freeze_feature_extractor) result.params.collect_feature_extractor(trainable);
  result.params.collect_trainable(trainable);
  if (!task.freeze_head) {
    trainable.add("head.w", result.head_w);
    trainable.add("head.b", result.head_b);
  }
  ParamSet everything;
  result.params.collect(everything);
  everything.add("head.w", result.head_w);
  everything.add("head.b", result.head_b);
  everything.set_requires_grad(false);
  trainable.set_requires_grad(true);

  Dataset train = make_split(kTrainSplit, task.train_clips, seed, task);
  Dataset val = make_split(kValSplit, task.val_clips, seed, task);
  if (task.freeze_feature_extractor) {
    if (!task.augment) cache_features(train, result.params, cfg);
    cache_features(val, result.params, cfg);
  }

  result.optimizer = AdamState::zeros_like(trainable);
  double lr = opt.lr;
  double best = INFINITY;
  std::size_t stalled = 0;
  auto record_eval = [&](std::size_t step) {
    const EvalResult e = evaluate(val, model, opt.label_smoothing);
    check_finite(e.loss, step, "validation");
    result.history.push_back({step, e.loss, e.accuracy, lr});
    if (step == 0) {
      best = e.loss;
      return;
    }
    if (e.loss < best) {
      best = e.loss;
      stalled = 0;
    } else if (++stalled >= opt.plateau_patience) {
      lr *= opt.plateau_factor;
      stalled = 0;
    }
  };
  record_eval(0);

  for (std::size_t step = 1; step <= steps; ++step) {
    Rng rng(hash_words(seed, kBatchTag, step));
    std::vector<std::size_t> rows(task.batch);
    for (auto& r : rows) r = rng.below(train.clips.size());
    std::vector<std::size_t> targets;
    for (std::size_t r : rows) targets.push_back(train.labels[r]);

    std::vector<AudioClip> augmented;
    if (task.augment) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        AudioClip c = augment(train.clips[rows[i]], task.policy, hash_words(seed, kAugmentStream, step, i));
        fit_length(c, samples);
        augmented.push_back(std::move(c));
      }
    }

    trainable.zero_grad();
    Tape tape;
    Tensor loss;
    {
      Tensor feats;
      if (task.freeze_feature_extractor) {
        NoGradScope no_grad;
        feats = batch_features(train, rows, model, task.augment ? &augmented : nullptr);
      }
      TapeScope scope(tape);
      if (!task.freeze_feature_extractor) {
        feats = batch_features(train, rows, model, task.augment ? &augmented : nullptr);
      }
      const ForwardContext ctx{true, opt.dropout, seed, step};
      loss = cross_entropy_label_smoothed(model.logits(feats, ctx), targets, opt.label_smoothing);
    }
    check_finite(loss.item(), step, "training");
    tape.backward(loss);
    adam_step(trainable, gather_grads(trainable), result.optimizer, opt, lr);

    if (step % task.eval_every == 0 || step == steps) record_eval(step);
  }
  trainable.set_requires_grad(false);

  for (const auto& [name, t] : everything) result.checkpoint.add(name, t);
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    result.checkpoint.add("adam.m." + trainable[i].first, result.optimizer.m[i]);
    result.checkpoint.add("adam.v." + trainable[i].first, result.optimizer.v[i]);
  }
  result.checkpoint.add("adam.step", Tensor::scalar(static_cast<double>(result.optimizer.step)));
  result.checkpoint.add("train.lr", Tensor::scalar(lr));
  return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& history) {
  std::ostringstream os;
  os << std::setprecision(17) << "step,loss,accuracy,lr\n";
  for (const auto& r : history) os << r.step << ',' << r.loss << ',' << r.accuracy << ',' << r.lr << '\n';
  return os.str();
}

double toy_quality(const EncoderConfig& cfg, const PositionConfig& positions, const OptimizerConfig& opt,
                   std::size_t steps, std::uint64_t seed, const ToyTaskConfig& task) {
  EncoderConfig c = cfg;
  c.positions = positions;
  return -train_toy(c, opt, steps, seed, task).history.back().loss;
}

}  // namespace redapt
