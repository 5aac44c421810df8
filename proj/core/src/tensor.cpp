#include "asucnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "gemm.hpp"

namespace asucnn {

Shape::Shape(std::initializer_list<std::size_t> dims) {
  init(std::span<const std::size_t>(dims.begin(), dims.size()));
}

Shape::Shape(std::span<const std::size_t> dims) { init(dims); }

void Shape::init(std::span<const std::size_t> dims) {
  if (dims.empty() || dims.size() > kMaxRank) {
    throw ShapeError("shape rank must be 1..4, got " + std::to_string(dims.size()));
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0) throw ShapeError("shape dims must be >= 1");
    if (count > std::numeric_limits<std::size_t>::max() / dims[i]) {
      throw SizeError("shape element count overflows size_t");
    }
    count *= dims[i];
    dims_[i] = dims[i];
  }
  rank_ = dims.size();
  elements_ = count;
}

std::string Shape::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) out += ",";
    out += std::to_string(dims_[i]);
  }
  return out + "]";
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.elements()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.to_string());
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::filled(Shape shape, T value) {
  BasicTensor t(shape);
  t.fill(value);
  return t;
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
void BasicTensor<T>::accumulate(const BasicTensor& other) {
  if (!(shape_ == other.shape_)) {
    throw ShapeError("accumulate: " + shape_.to_string() + " vs " +
                     other.shape_.to_string());
  }
  const T* __restrict src = other.data_.data();
  T* __restrict dst = data_.data();
  for (std::size_t i = 0; i < data_.size(); ++i) dst[i] += src[i];
}

template <typename T>
void BasicTensor<T>::scale(T factor) {
  for (auto& v : data_) v *= factor;
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class BasicTensor<float>;
template class BasicTensor<double>;

template <typename T>
bool bitwise_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.raw(), b.raw(), a.size() * sizeof(T)) == 0;
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: cannot multiply " + a.shape().to_string() + " by " +
                     b.shape().to_string());
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  BasicTensor<T> c(Shape{m, n});
  detail::gemm_nn(m, n, k, a.raw(), b.raw(), c.raw(), false);
  return c;
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& t, Shape new_shape) {
  if (new_shape.elements() != t.size()) {
    throw ShapeError("reshape: " + t.shape().to_string() + " has " +
                     std::to_string(t.size()) + " elements, " + new_shape.to_string() +
                     " needs " + std::to_string(new_shape.elements()));
  }
  return BasicTensor<T>(new_shape, std::vector<T>(t.data().begin(), t.data().end()));
}

template bool bitwise_equal(const Tensor&, const Tensor&);
template bool bitwise_equal(const Tensor64&, const Tensor64&);
template Tensor matmul(const Tensor&, const Tensor&);
template Tensor64 matmul(const Tensor64&, const Tensor64&);
template Tensor reshape(const Tensor&, Shape);
template Tensor64 reshape(const Tensor64&, Shape);

}  // namespace asucnn
