// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/autodiff.hpp"

#include <algorithm>
#include <stdexcept>

namespace redapt {

namespace {
thread_local Tape* t_tape = nullptr;
thread_local MacCounter* t_counter = nullptr;
thread_local std::string t_label;
}  // namespace

void Tape::record(std::string_view op, std::vector<std::shared_ptr<TensorImpl>> inputs,
                  std::shared_ptr<TensorImpl> output, BackwardFn backward) {
  Entry e;
  e.op = std::string(op);
  for (const auto& in : inputs) e.input_ids.push_back(in->id);
  e.output_id = output->id;
  e.inputs = std::move(inputs);
  e.output = std::move(output);
  e.backward = std::move(backward);
  entries_.push_back(std::move(e));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  // Locate the op that produced the loss; later entries cannot contribute.
  std::size_t end = entries_.size();
  while (end > 0 && entries_[end - 1].output_id != loss.id()) --end;
  if (end == 0 && !loss.requires_grad()) {
    throw std::logic_error("backward(): loss is not on the tape");
  }
  loss.impl()->grad_buffer()[0] += 1.0;
  visited_.clear();
  for (std::size_t i = end; i-- > 0;) {
    Entry& e = entries_[i];
    if (!e.output->grad) continue;
    e.backward();
    visited_.push_back(i);
  }
}

void Tape::clear() {
  entries_.clear();
  visited_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(t_tape) { t_tape = &tape; }
TapeScope::~TapeScope() { t_tape = previous_; }

NoGradScope::NoGradScope() : previous_(t_tape) { t_tape = nullptr; }
NoGradScope::~NoGradScope() { t_tape = previous_; }

Tape* active_tape() { return t_tape; }

void MacCounter::add_macs(const std::string& op, std::uint64_t macs) {
  total_macs_ += macs;
  per_op_[op] += macs;
}

void MacCounter::add_other_flops(const std::string& op, std::uint64_t flops) {
  total_other_ += flops;
  other_per_op_[op] += flops;
}

std::uint64_t MacCounter::macs_with_prefix(std::string_view prefix) const {
  std::uint64_t total = 0;
  for (const auto& [k, v] : per_op_) {
    if (std::string_view(k).substr(0, prefix.size()) == prefix) total += v;
  }
  return total;
}

void MacCounter::reset() {
  total_macs_ = 0;
  total_other_ = 0;
  per_op_.clear();
  other_per_op_.clear();
}

MacCounterScope::MacCounterScope(MacCounter& counter) : previous_(t_counter) {
  t_counter = &counter;
}
MacCounterScope::~MacCounterScope() { t_counter = previous_; }

MacLabel::MacLabel(std::string prefix) : previous_(t_label) { t_label += prefix; }
MacLabel::~MacLabel() { t_label = previous_; }

namespace detail {

MacCounter* active_counter() { return t_counter; }

void count_macs(std::string_view op, std::uint64_t macs) {
  if (t_counter) t_counter->add_macs(t_label + std::string(op), macs);
}

void count_other(std::string_view op, std::uint64_t flops) {
  if (t_counter) t_counter->add_other_flops(t_label + std::string(op), flops);
}

}  // namespace detail

}  // namespace redapt
