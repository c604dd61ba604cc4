// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_PARAM_SET_HPP_
#define REDAPT_PARAM_SET_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "redapt/rng.hpp"
#include "redapt/tensor.hpp"

namespace redapt {

/// Ordered (name, tensor) list. Tensors are handles, so a ParamSet views the
/// parameters of a model rather than owning copies of them.
class ParamSet {
 public:
  void add(std::string name, Tensor tensor) { items_.emplace_back(std::move(name), std::move(tensor)); }

  std::size_t size() const { return items_.size(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::pair<std::string, Tensor>& operator[](std::size_t i) const { return items_[i]; }

  /// Total element count across all tensors.
  std::uint64_t numel() const;
  void set_requires_grad(bool flag) const;
  void zero_grad() const;
  /// Throws std::out_of_range when missing.
  Tensor find(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

// Initializers used by every module.
Tensor uniform_init(Shape shape, double bound, Rng& rng);
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor fan_in_init(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace redapt

#endif  // REDAPT_PARAM_SET_HPP_
