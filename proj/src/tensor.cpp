// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>

namespace redapt {

namespace {

std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};
std::atomic<std::uint64_t> g_next_id{1};

void track(std::int64_t delta) {
  const std::int64_t now = g_live.fetch_add(delta) + delta;
  std::int64_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

std::shared_ptr<TensorImpl> make_impl(Shape shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  const std::size_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->data = TrackedBuffer(n);
  impl->requires_grad = requires_grad;
  impl->id = g_next_id.fetch_add(1);
  return impl;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace alloc_tracker {
std::int64_t live_elements() { return g_live.load(); }
std::int64_t peak_elements() { return g_peak.load(); }
void reset_peak() { g_peak.store(g_live.load()); }
}  // namespace alloc_tracker

TrackedBuffer::TrackedBuffer(std::size_t n)
    : data_(n ? std::make_unique<double[]>(n) : nullptr), size_(n) {
  track(static_cast<std::int64_t>(n));
}

TrackedBuffer::TrackedBuffer(const TrackedBuffer& other)
    : data_(other.size_ ? std::make_unique<double[]>(other.size_) : nullptr),
      size_(other.size_) {
  if (size_) std::memcpy(data_.get(), other.data_.get(), size_ * sizeof(double));
  track(static_cast<std::int64_t>(size_));
}

TrackedBuffer::TrackedBuffer(TrackedBuffer&& other) noexcept
    : data_(std::move(other.data_)), size_(other.size_) {
  other.size_ = 0;
}

TrackedBuffer& TrackedBuffer::operator=(TrackedBuffer other) noexcept {
  std::swap(data_, other.data_);
  std::swap(size_, other.size_);
  return *this;
}

TrackedBuffer::~TrackedBuffer() {
  if (size_) track(-static_cast<std::int64_t>(size_));
}

std::span<double> TensorImpl::grad_buffer() {
  if (!grad) grad.emplace(data.size());
  return grad->span();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("Tensor::from: shape " + shape_str(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  Tensor t = zeros(std::move(shape), requires_grad);
  std::copy(values.begin(), values.end(), t.data().begin());
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return data()[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw ShapeError("at(): rank mismatch");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape()[axis]) throw ShapeError("at(): index out of range");
    flat = flat * shape()[axis] + i;
    ++axis;
  }
  return data()[flat];
}

std::span<const double> Tensor::grad() const {
  if (!impl_->grad) throw std::logic_error("tensor has no gradient");
  return impl_->grad->span();
}

void Tensor::zero_grad() {
  if (impl_->grad) std::fill(impl_->grad->span().begin(), impl_->grad->span().end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t = zeros(shape(), false);
  std::copy(data().begin(), data().end(), t.data().begin());
  return t;
}

Tensor Tensor::detach() const { return clone(); }

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace redapt
