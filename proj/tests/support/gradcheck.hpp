// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_TESTS_GRADCHECK_HPP_
#define REDAPT_TESTS_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "redapt/tensor.hpp"

namespace gradcheck {

using Fn = std::function<redapt::Tensor(const std::vector<redapt::Tensor>&)>;

struct Result {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares tape gradients of sum(f(inputs) * R), R a seeded random
/// projection, against central differences with step h for every element of
/// every input. Relative error is |a - n| / max(|a|, |n|, floor).
Result check(const Fn& f, std::vector<redapt::Tensor> inputs, std::uint64_t seed, double h = 1e-5,
             double floor = 1e-3);

/// Seeded tensor with entries uniform in [lo, hi].
redapt::Tensor random(redapt::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

}  // namespace gradcheck

#endif  // REDAPT_TESTS_GRADCHECK_HPP_
