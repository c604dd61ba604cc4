// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/param_set.hpp"

#include <cmath>
#include <stdexcept>

namespace redapt {

std::uint64_t ParamSet::numel() const {
  std::uint64_t n = 0;
  for (const auto& [name, t] : items_) n += t.numel();
  return n;
}

void ParamSet::set_requires_grad(bool flag) const {
  for (const auto& [name, t] : items_) {
    Tensor h = t;
    h.set_requires_grad(flag);
  }
}

void ParamSet::zero_grad() const {
  for (const auto& [name, t] : items_) {
    Tensor h = t;
    h.zero_grad();
  }
}

Tensor ParamSet::find(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor fan_in_init(Shape shape, std::size_t fan_in, Rng& rng) {
  return uniform_init(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace redapt
