// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_AUTODIFF_HPP_
#define REDAPT_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redapt/tensor.hpp"

namespace redapt {

/// Ordered record of differentiable operations.
///
/// A tape belongs to the thread that activates it (see TapeScope). Each entry
/// keeps its inputs and output alive, so the tape also owns the activations
/// retained for the backward pass.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Entry {
    std::string op;
    std::vector<std::uint64_t> input_ids;
    std::uint64_t output_id = 0;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::shared_ptr<TensorImpl> output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string_view op, std::vector<std::shared_ptr<TensorImpl>> inputs,
              std::shared_ptr<TensorImpl> output, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and runs recorded backward rules in exact
  /// reverse order. Grads accumulate into every requires_grad tensor.
  void backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  /// Order in which the last backward() invoked entries (indices into entries()).
  std::span<const std::size_t> last_backward_order() const { return visited_; }
  void clear();

 private:
  std::vector<Entry> entries_;
  std::vector<std::size_t> visited_;
};

/// Activates a tape on the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Disables recording on the current thread (inference).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Counts multiply-accumulates (and, separately, other elementwise flops) of
/// forward operations executed while the counter is active on this thread.
class MacCounter {
 public:
  void add_macs(const std::string& op, std::uint64_t macs);
  void add_other_flops(const std::string& op, std::uint64_t flops);

  std::uint64_t total_macs() const { return total_macs_; }
  std::uint64_t total_other_flops() const { return total_other_; }
  const std::map<std::string, std::uint64_t>& per_op() const { return per_op_; }
  const std::map<std::string, std::uint64_t>& other_per_op() const {
    return other_per_op_;
  }
  /// Sum of per_op entries whose key starts with prefix.
  std::uint64_t macs_with_prefix(std::string_view prefix) const;
  void reset();

 private:
  std::uint64_t total_macs_ = 0;
  std::uint64_t total_other_ = 0;
  std::map<std::string, std::uint64_t> per_op_;
  std::map<std::string, std::uint64_t> other_per_op_;
};

class MacCounterScope {
 public:
  explicit MacCounterScope(MacCounter& counter);
  ~MacCounterScope();
  MacCounterScope(const MacCounterScope&) = delete;
  MacCounterScope& operator=(const MacCounterScope&) = delete;

 private:
  MacCounter* previous_;
};

/// Prefixes op names recorded into the active MacCounter, e.g. "layer3.".
class MacLabel {
 public:
  explicit MacLabel(std::string prefix);
  ~MacLabel();
  MacLabel(const MacLabel&) = delete;
  MacLabel& operator=(const MacLabel&) = delete;

 private:
  std::string previous_;
};

namespace detail {
MacCounter* active_counter();
void count_macs(std::string_view op, std::uint64_t macs);
void count_other(std::string_view op, std::uint64_t flops);
}  // namespace detail

}  // namespace redapt

#endif  // REDAPT_AUTODIFF_HPP_
