// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slimsplit/error.hpp"

namespace slimsplit {

// NCHW extents. Vectors (biases, batch-norm parameters) use (C, 1, 1, 1).
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
           std::to_string(h) + ", " + std::to_string(w) + ")";
  }
};

inline Shape vector_shape(std::size_t len) { return {len, 1, 1, 1}; }

// Element width of a computation graph.
enum class Precision : std::uint8_t { train64, infer32 };

template <class T>
struct precision_of;
template <>
struct precision_of<double> {
  static constexpr Precision value = Precision::train64;
};
template <>
struct precision_of<float> {
  static constexpr Precision value = Precision::infer32;
};

// Dense rank-4 array in row-major NCHW order.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.numel(), fill) {}
  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw ShapeError("Tensor", "element count", shape_.numel(), data_.size());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t h,
                     std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[offset(n, c, h, w)];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h,
              std::size_t w) const {
    return data_[offset(n, c, h, w)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  template <class U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.storage().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor64 = BasicTensor<double>;
using Tensor32 = BasicTensor<float>;

// Copies channels [0, channels) of every batch element.
template <class T>
BasicTensor<T> channel_prefix(const BasicTensor<T>& t, std::size_t channels) {
  const Shape s = t.shape();
  if (channels > s.c) throw ShapeError("channel_prefix", "channels", s.c, channels);
  BasicTensor<T> out({s.n, channels, s.h, s.w});
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n) {
    std::copy_n(t.data() + n * s.c * plane, channels * plane,
                out.data() + n * channels * plane);
  }
  return out;
}

// Copies batch elements [first, first + count).
template <class T>
BasicTensor<T> batch_slice(const BasicTensor<T>& t, std::size_t first,
                           std::size_t count) {
  const Shape s = t.shape();
  if (first + count > s.n) throw ShapeError("batch_slice", "batch", s.n, first + count);
  const std::size_t per = s.c * s.plane();
  BasicTensor<T> out({count, s.c, s.h, s.w});
  std::copy_n(t.data() + first * per, count * per, out.data());
  return out;
}

}  // namespace slimsplit
