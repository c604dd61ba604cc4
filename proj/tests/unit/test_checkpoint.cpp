// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "redapt/checkpoint.hpp"

using namespace redapt;
using Kind = CheckpointError::Kind;

namespace {

Checkpoint sample() {
  Checkpoint c;
  c.add("a.weight", Tensor::from({2, 3}, {1.0, -2.5, 1e-300, std::numeric_limits<double>::denorm_min(), -0.0, 3.141592653589793}));
  c.add("b", Tensor::scalar(std::nan("")));
  c.add("empty", Tensor::from({0, 4}, {}));
  c.add("half", Tensor::from({3}, {0.5, -1.25, 1024.0}), DType::kF32);
  return c;
}

Kind kind_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  FAIL("decode unexpectedly succeeded");
  return Kind::kIo;
}

}  // namespace

TEST_CASE("checkpoint: encode/decode round trip is bit-exact") {
  const Checkpoint c = sample();
  const Checkpoint back = decode_checkpoint(encode_checkpoint(c));
  CHECK(bit_equal(c, back));
  REQUIRE(back.entries.size() == 4);
  CHECK(back.entries[3].dtype == DType::kF32);
  CHECK(back.get("empty").shape() == Shape{0, 4});
  CHECK(std::signbit(back.get("a.weight").data()[4]));
  CHECK(std::isnan(back.get("b").item()));
  CHECK(back.contains("half"));
  CHECK_FALSE(back.contains("missing"));
  CHECK_THROWS_AS(back.get("missing"), std::out_of_range);
}

TEST_CASE("checkpoint: f32 entries round values to float") {
  Checkpoint c;
  c.add("x", Tensor::from({1}, {0.1}), DType::kF32);
  const Checkpoint back = decode_checkpoint(encode_checkpoint(c));
  CHECK(back.get("x").data()[0] == static_cast<double>(0.1f));
}

TEST_CASE("checkpoint: stored copies are independent of the source tensor") {
  Tensor t = Tensor::from({2}, {1.0, 2.0});
  Checkpoint c;
  c.add("t", t);
  t.data()[0] = 99.0;
  CHECK(c.get("t").data()[0] == 1.0);
}

TEST_CASE("checkpoint: file round trip and IO errors") {
  const auto path = std::filesystem::temp_directory_path() / "redapt_test.rapt";
  save_checkpoint(sample(), path.string());
  CHECK(bit_equal(load_checkpoint(path.string()), sample()));
  std::filesystem::remove(path);
  try {
    load_checkpoint(path.string());
    FAIL("expected an IO error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == Kind::kIo);
  }
}

TEST_CASE("checkpoint: corrupt headers are classified") {
  auto bytes = encode_checkpoint(sample());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of(bad_magic) == Kind::kBadMagic);
  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK(kind_of(bad_version) == Kind::kBadVersion);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(kind_of(trailing) == Kind::kMalformed);
  // First entry's dtype byte sits after count, name length and name.
  auto bad_dtype = bytes;
  bad_dtype[12 + 2 + std::strlen("a.weight")] = 7;
  CHECK(kind_of(bad_dtype) == Kind::kMalformed);
}

TEST_CASE("checkpoint: every strict prefix is rejected as truncated") {
  const auto bytes = encode_checkpoint(sample());
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    const std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<long>(n));
    CHECK(kind_of(prefix) == Kind::kTruncated);
  }
}
