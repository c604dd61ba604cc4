// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_CHECKPOINT_HPP_
#define REDAPT_CHECKPOINT_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "redapt/tensor.hpp"

namespace redapt {

// File layout, little-endian:
//   "RAPT" | u32 version (1) | u32 entry count
//   per entry: u16 name length | name bytes | u8 dtype (0 f32, 1 f64) | u8 rank
//              | rank x u64 dims | payload

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::kF64;
  Tensor value;  // f32 entries hold float-representable doubles
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;

  void add(std::string name, const Tensor& value, DType dtype = DType::kF64);
  /// Throws std::out_of_range when missing.
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

/// Same names, dtypes, shapes and bit patterns in the same order.
bool bit_equal(const Checkpoint& a, const Checkpoint& b);

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kMalformed };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Parses the whole buffer; nothing is returned unless every entry is complete.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace redapt

#endif  // REDAPT_CHECKPOINT_HPP_
