#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "asucnn/errors.hpp"

namespace asucnn {

enum class Precision { kF32, kF64 };

// Up to four positive extents. Feature maps are [height, width, channels].
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const noexcept { return rank_; }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  std::size_t elements() const noexcept { return elements_; }
  std::span<const std::size_t> dims() const noexcept { return {dims_.data(), rank_}; }

  std::string to_string() const;

  friend bool operator==(const Shape& a, const Shape& b) noexcept {
    return a.rank_ == b.rank_ && a.dims_ == b.dims_;
  }

 private:
  void init(std::span<const std::size_t> dims);

  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
  std::size_t elements_ = 0;
};

// Dense row-major array. float for training, double for the gradient oracle.
template <typename T>
class BasicTensor {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);

 public:
  using value_type = T;
  static constexpr Precision kPrecision =
      std::is_same_v<T, float> ? Precision::kF32 : Precision::kF64;

  BasicTensor() : BasicTensor(Shape{1}) {}
  explicit BasicTensor(Shape shape) : shape_(shape), data_(shape.elements(), T{0}) {}
  BasicTensor(Shape shape, std::vector<T> data);

  static BasicTensor zeros(Shape shape) { return BasicTensor(shape); }
  static BasicTensor filled(Shape shape, T value);

  Precision precision() const noexcept { return kPrecision; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  void fill(T value);
  // this += other, element by element. Shapes must match exactly.
  void accumulate(const BasicTensor& other);
  void scale(T factor);
  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

// Same shape and identical bit patterns.
template <typename T>
bool bitwise_equal(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  std::vector<To> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return BasicTensor<To>(t.shape(), std::move(out));
}

template <typename T>
BasicTensor<T> zeros(Shape shape) {
  return BasicTensor<T>(shape);
}

// [M,K] x [K,N] -> [M,N].
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T, typename Fn>
BasicTensor<T> map_elementwise(const BasicTensor<T>& t, Fn&& fn) {
  std::vector<T> out(t.size());
  const auto in = t.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<T>(fn(in[i]));
  return BasicTensor<T>(t.shape(), std::move(out));
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& t, Shape new_shape);

}  // namespace asucnn
