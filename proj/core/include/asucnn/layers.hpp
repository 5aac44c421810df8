#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "asucnn/tensor.hpp"

namespace asucnn {

// Square convolution geometry: input n x n x c_in, n_f filters of f x f,
// padding p per side, stride s.
struct ConvSpec {
  std::size_t n = 1;
  std::size_t f = 1;
  std::size_t p = 0;
  std::size_t s = 1;
  std::size_t n_f = 1;
  std::size_t c_in = 1;

  void validate() const;
  Shape weight_shape() const { return Shape{f, f, c_in, n_f}; }
  Shape bias_shape() const { return Shape{n_f}; }
  Shape input_shape() const { return Shape{n, n, c_in}; }
};

struct FeatureMapShape {
  std::size_t height;
  std::size_t width;
  std::size_t channels;

  Shape shape() const { return Shape{height, width, channels}; }
  friend bool operator==(const FeatureMapShape&, const FeatureMapShape&) = default;
};

// floor((n + 2p - f) / s) + 1 per spatial axis, n_f channels.
FeatureMapShape conv_output_shape(const ConvSpec& spec);

// 2x2 window, stride 2: floor((h - 2) / 2) + 1 per axis.
inline constexpr std::size_t kPoolWindow = 2;
inline constexpr std::size_t kPoolStride = 2;
FeatureMapShape pool_output_shape(std::size_t h, std::size_t w, std::size_t c);

template <typename T>
struct ConvLayer {
  ConvSpec spec;
  BasicTensor<T> weights;  // [f, f, c_in, n_f]
  BasicTensor<T> bias;     // [n_f]

  explicit ConvLayer(const ConvSpec& s)
      : spec(s), weights(s.weight_shape()), bias(s.bias_shape()) {}
};

template <typename T>
struct DenseLayer {
  BasicTensor<T> weights;  // [in_dim, out_dim]
  BasicTensor<T> bias;     // [out_dim]

  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : weights(Shape{in_dim, out_dim}), bias(Shape{out_dim}) {}
};

// im2col matrix of the forward input: one row per output position,
// (a, b, c) filter taps along the columns.
template <typename T>
struct ConvCache {
  ConvSpec spec;
  std::vector<T> columns;
  bool valid = false;
};

struct PoolCache {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<std::uint32_t> argmax;  // flat input index of each window's winner
  bool valid = false;
};

template <typename T>
struct DenseCache {
  BasicTensor<T> input;
  bool valid = false;
};

template <typename T>
struct ConvForward {
  BasicTensor<T> z;
  ConvCache<T> cache;
};

template <typename T>
struct PoolForward {
  BasicTensor<T> out;
  PoolCache cache;
};

template <typename T>
struct DenseForward {
  BasicTensor<T> z;
  DenseCache<T> cache;
};

template <typename T>
struct ParamGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

// Cross-correlation, no kernel flip:
// z[i,j,k] = sum_{a,b,c} W[a,b,c,k] * x[i*s+a-p, j*s+b-p, c] + B[k]
template <typename T>
ConvForward<T> conv2d_forward(const ConvSpec& spec, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, const BasicTensor<T>& input);

template <typename T>
ConvForward<T> conv2d_forward(const ConvLayer<T>& layer, const BasicTensor<T>& input) {
  return conv2d_forward(layer.spec, layer.weights, layer.bias, input);
}

template <typename T>
ParamGrads<T> conv2d_backward(const ConvCache<T>& cache, const BasicTensor<T>& weights,
                              const BasicTensor<T>& grad_out);

// First maximal element (row-major inside the window) wins ties.
template <typename T>
PoolForward<T> maxpool_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool_backward(const PoolCache& cache, const BasicTensor<T>& grad_out);

// z[j] = sum_i x[i] * W[i,j] + B[j]
template <typename T>
DenseForward<T> dense_forward(const BasicTensor<T>& weights, const BasicTensor<T>& bias,
                              const BasicTensor<T>& input);

template <typename T>
DenseForward<T> dense_forward(const DenseLayer<T>& layer, const BasicTensor<T>& input) {
  return dense_forward(layer.weights, layer.bias, input);
}

template <typename T>
ParamGrads<T> dense_backward(const DenseCache<T>& cache, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> flatten_forward(const BasicTensor<T>& input) {
  return reshape(input, Shape{input.size()});
}

template <typename T>
BasicTensor<T> flatten_backward(const BasicTensor<T>& grad, const Shape& input_shape) {
  return reshape(grad, input_shape);
}

}  // namespace asucnn
