#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "asucnn/tensor.hpp"

namespace asucnn {

enum class ActivationKind { kAsu, kGcu, kRelu };

std::string_view to_string(ActivationKind kind);
std::optional<ActivationKind> parse_activation(std::string_view name);

// Amplifying Sine Unit, z*sin(z). Even, oscillating with growing amplitude.
// Evaluated on |z| so the symmetries hold bit for bit.
template <typename T>
T asu(T z) {
  const T a = std::abs(z);
  return a * std::sin(a);
}

template <typename T>
T asu_prime(T z) {
  const T a = std::abs(z);
  const T d = std::sin(a) + a * std::cos(a);
  return std::signbit(z) ? -d : d;
}

// Only used for plotting; training needs first derivatives.
template <typename T>
T asu_second(T z) {
  const T a = std::abs(z);
  return T{2} * std::cos(a) - a * std::sin(a);
}

// Growing Cosine Unit, z*cos(z).
template <typename T>
T gcu(T z) {
  return z * std::cos(z);
}

template <typename T>
T gcu_prime(T z) {
  return std::cos(z) - z * std::sin(z);
}

template <typename T>
T relu(T z) {
  return z > T{0} ? z : T{0};
}

// Subgradient at 0 is 0.
template <typename T>
T relu_prime(T z) {
  return z > T{0} ? T{1} : T{0};
}

template <typename T>
T activate(ActivationKind kind, T z) {
  switch (kind) {
    case ActivationKind::kAsu: return asu(z);
    case ActivationKind::kGcu: return gcu(z);
    case ActivationKind::kRelu: return relu(z);
  }
  return z;
}

template <typename T>
T activate_prime(ActivationKind kind, T z) {
  switch (kind) {
    case ActivationKind::kAsu: return asu_prime(z);
    case ActivationKind::kGcu: return gcu_prime(z);
    case ActivationKind::kRelu: return relu_prime(z);
  }
  return T{1};
}

// Elementwise activation. Throws DivergenceError if any output is non-finite.
template <typename T>
BasicTensor<T> apply_activation(ActivationKind kind, const BasicTensor<T>& t);

// grad_in[i] = grad_out[i] * f'(pre_activation[i])
template <typename T>
BasicTensor<T> activation_backward(ActivationKind kind, const BasicTensor<T>& pre_activation,
                                   const BasicTensor<T>& grad_out);

// exp(x - max) / sum exp(x - max) over a rank-1 tensor of at least 2 logits.
template <typename T>
BasicTensor<T> softmax_stable(const BasicTensor<T>& logits);

}  // namespace asucnn
