// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace redapt {

namespace {

using Kind = CheckpointError::Kind;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(Kind::kTruncated, std::string("checkpoint truncated while reading ") +
                                                  what + " at byte " + std::to_string(pos_));
    }
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(std::string name, const Tensor& value, DType dtype) {
  entries.push_back({std::move(name), dtype, value.clone()});
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e.value;
  }
  throw std::out_of_range("checkpoint has no entry '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

bool bit_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& x = a.entries[i];
    const auto& y = b.entries[i];
    if (x.name != y.name || x.dtype != y.dtype || !bit_equal(x.value, y.value)) return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.put_bytes("RAPT", 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw CheckpointError(Kind::kMalformed, "entry name too long: " + e.name.substr(0, 32));
    }
    if (e.value.rank() > 255) throw CheckpointError(Kind::kMalformed, "rank too large: " + e.name);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.put_bytes(e.name.data(), e.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.dtype));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) w.put<std::uint64_t>(d);
    for (double v : e.value.data()) {
      if (e.dtype == DType::kF64) {
        w.put<std::uint64_t>(std::bit_cast<std::uint64_t>(v));
      } else {
        w.put<std::uint32_t>(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const std::uint8_t* magic = r.take(4, "magic");
  if (std::memcmp(magic, "RAPT", 4) != 0) {
    throw CheckpointError(Kind::kBadMagic, "not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kBadVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("entry count");
  Checkpoint out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("name length");
    const std::uint8_t* name = r.take(len, "name");
    CheckpointEntry e;
    e.name.assign(reinterpret_cast<const char*>(name), len);
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (dtype > 1) {
      throw CheckpointError(Kind::kMalformed, "entry '" + e.name + "' has unknown dtype " +
                                                  std::to_string(dtype));
    }
    e.dtype = static_cast<DType>(dtype);
    const auto rank = r.get<std::uint8_t>("rank");
    Shape shape(rank);
    std::size_t numel = 1;
    const std::size_t width = e.dtype == DType::kF64 ? 8 : 4;
    for (auto& d : shape) {
      d = r.get<std::uint64_t>("dims");
      if (d != 0 && numel > std::numeric_limits<std::size_t>::max() / width / d) {
        throw CheckpointError(Kind::kMalformed, "entry '" + e.name + "' is implausibly large");
      }
      numel *= d;
    }
    r.need(numel * width, "payload");
    std::vector<double> values(numel);
    for (auto& v : values) {
      v = e.dtype == DType::kF64 ? std::bit_cast<double>(r.get<std::uint64_t>("payload"))
                                 : std::bit_cast<float>(r.get<std::uint32_t>("payload"));
    }
    e.value = Tensor::from(shape, std::move(values));
    out.entries.push_back(std::move(e));
  }
  if (!r.done()) throw CheckpointError(Kind::kMalformed, "trailing bytes after last entry");
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(Kind::kIo, "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError(Kind::kIo, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(Kind::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace redapt
