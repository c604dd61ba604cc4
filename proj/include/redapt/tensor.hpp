// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_TENSOR_HPP_
#define REDAPT_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace redapt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised when operand shapes are incompatible.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a sequence is too short for a convolution or reduction.
class LengthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for inconsistent model or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Process-wide accounting of live tensor elements (data and grad buffers).
// Counters are atomic so tensors may be created on any thread.
namespace alloc_tracker {
std::int64_t live_elements();
std::int64_t peak_elements();
/// Resets the peak to the current live count.
void reset_peak();
}  // namespace alloc_tracker

/// Heap buffer of doubles whose lifetime is reported to alloc_tracker.
class TrackedBuffer {
 public:
  TrackedBuffer() = default;
  explicit TrackedBuffer(std::size_t n);  // zero-filled
  TrackedBuffer(const TrackedBuffer& other);
  TrackedBuffer(TrackedBuffer&& other) noexcept;
  TrackedBuffer& operator=(TrackedBuffer other) noexcept;
  ~TrackedBuffer();

  std::size_t size() const { return size_; }
  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }
  std::span<double> span() { return {data_.get(), size_}; }
  std::span<const double> span() const { return {data_.get(), size_}; }

 private:
  std::unique_ptr<double[]> data_;
  std::size_t size_ = 0;
};

struct TensorImpl {
  Shape shape;
  TrackedBuffer data;
  std::optional<TrackedBuffer> grad;
  bool requires_grad = false;
  std::uint64_t id = 0;

  /// Grad buffer, allocated zero-filled on first use.
  std::span<double> grad_buffer();
};

/// Reference-counted handle to a dense row-major fp64 array.
///
/// Copies of a Tensor alias the same storage; use clone() for a deep copy.
/// Operations in ops.hpp produce new tensors and, when a Tape is active and
/// an input requires grad, record themselves for reverse-mode differentiation.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<double> data() { return impl_->data.span(); }
  std::span<const double> data() const { return impl_->data.span(); }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }
  bool has_grad() const { return impl_->grad.has_value(); }
  /// Gradient buffer; throws if none has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return impl_->grad_buffer(); }
  void zero_grad();

  /// Deep copy of the values; the copy is a fresh leaf with no grad.
  Tensor clone() const;
  /// Same values, new leaf that never records to a tape.
  Tensor detach() const;

  std::uint64_t id() const { return impl_->id; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Bitwise equality of shape and data.
bool bit_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace redapt

#endif  // REDAPT_TENSOR_HPP_
