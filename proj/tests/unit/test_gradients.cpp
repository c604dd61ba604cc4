// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "gradient_cases.hpp"

TEST_CASE("gradients match central differences over ten seeds") {
  for (const auto& c : gradcheck::all_cases()) {
    SUBCASE(c.name.c_str()) {
      const double worst = gradcheck::worst_error(c, 10);
      INFO(c.name << " worst relative error " << worst);
      CHECK(worst < 1e-4);
    }
  }
}
