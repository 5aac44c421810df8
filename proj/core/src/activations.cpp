#include "asucnn/activations.hpp"

#include <algorithm>

namespace asucnn {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kAsu: return "asu";
    case ActivationKind::kGcu: return "gcu";
    case ActivationKind::kRelu: return "relu";
  }
  return "unknown";
}

std::optional<ActivationKind> parse_activation(std::string_view name) {
  if (name == "asu" || name == "ASU") return ActivationKind::kAsu;
  if (name == "gcu" || name == "GCU") return ActivationKind::kGcu;
  if (name == "relu" || name == "RELU") return ActivationKind::kRelu;
  return std::nullopt;
}

namespace {

template <typename T, typename Fn>
BasicTensor<T> map_checked(const BasicTensor<T>& t, Fn fn) {
  BasicTensor<T> out(t.shape());
  const T* in = t.raw();
  T* dst = out.raw();
  bool finite = true;
  for (std::size_t i = 0; i < t.size(); ++i) {
    dst[i] = fn(in[i]);
    finite &= std::isfinite(dst[i]);
  }
  if (!finite) throw DivergenceError("activation produced a non-finite value");
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> apply_activation(ActivationKind kind, const BasicTensor<T>& t) {
  switch (kind) {
    case ActivationKind::kAsu: return map_checked(t, [](T z) { return asu(z); });
    case ActivationKind::kGcu: return map_checked(t, [](T z) { return gcu(z); });
    case ActivationKind::kRelu: return map_checked(t, [](T z) { return relu(z); });
  }
  throw UsageError("unknown activation kind");
}

template <typename T>
BasicTensor<T> activation_backward(ActivationKind kind, const BasicTensor<T>& pre_activation,
                                   const BasicTensor<T>& grad_out) {
  if (!(pre_activation.shape() == grad_out.shape())) {
    throw ShapeError("activation_backward: " + pre_activation.shape().to_string() + " vs " +
                     grad_out.shape().to_string());
  }
  BasicTensor<T> out(grad_out.shape());
  const T* z = pre_activation.raw();
  const T* g = grad_out.raw();
  T* dst = out.raw();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = g[i] * activate_prime(kind, z[i]);
  return out;
}

template <typename T>
BasicTensor<T> softmax_stable(const BasicTensor<T>& logits) {
  if (logits.shape().rank() != 1 || logits.size() < 2) {
    throw ShapeError("softmax_stable expects a rank-1 tensor with >= 2 logits, got " +
                     logits.shape().to_string());
  }
  const auto in = logits.data();
  const T max = *std::max_element(in.begin(), in.end());
  // Accumulate in double so the float path still normalizes to within 1e-6.
  std::vector<double> exps(in.size());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    exps[i] = std::exp(static_cast<double>(in[i]) - static_cast<double>(max));
    total += exps[i];
  }
  BasicTensor<T> out(logits.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<T>(exps[i] / total);
  return out;
}

template Tensor apply_activation(ActivationKind, const Tensor&);
template Tensor64 apply_activation(ActivationKind, const Tensor64&);
template Tensor activation_backward(ActivationKind, const Tensor&, const Tensor&);
template Tensor64 activation_backward(ActivationKind, const Tensor64&, const Tensor64&);
template Tensor softmax_stable(const Tensor&);
template Tensor64 softmax_stable(const Tensor64&);

}  // namespace asucnn
