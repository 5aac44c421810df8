#include "asucnn/optimizer.hpp"

#include <cmath>

namespace asucnn {

template <typename T>
AdamState<T> AdamState<T>::for_params(const ModelParams<T>& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params.tensors) {
    state.m.emplace_back(p.value.shape());
    state.v.emplace_back(p.value.shape());
  }
  return state;
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, double lr) {
  if (grads.tensors.size() != params.tensors.size() || state.m.size() != params.tensors.size()) {
    throw ShapeError("adam_step: parameter, gradient and state lists differ in length");
  }
  if (!(lr >= 0.0)) throw UsageError("adam_step: learning rate must be >= 0");

  state.step += 1;
  const double b1 = state.config.beta1, b2 = state.config.beta2;
  const double t = static_cast<double>(state.step);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(b1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(b2, t)));
  const T eps = static_cast<T>(state.config.epsilon);
  const T rate = static_cast<T>(lr);
  const T fb1 = static_cast<T>(b1), fb2 = static_cast<T>(b2);
  const T gb1 = static_cast<T>(1.0 - b1), gb2 = static_cast<T>(1.0 - b2);

  for (std::size_t p = 0; p < params.tensors.size(); ++p) {
    auto& theta = params.tensors[p].value;
    const auto& g = grads.tensors[p].value;
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (!(theta.shape() == g.shape()) || !(theta.shape() == m.shape())) {
      throw ShapeError("adam_step: shape mismatch for " + params.tensors[p].name);
    }
    T* th = theta.raw();
    const T* gr = g.raw();
    T* mm = m.raw();
    T* vv = v.raw();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      mm[i] = fb1 * mm[i] + gb1 * gr[i];
      vv[i] = fb2 * vv[i] + gb2 * gr[i] * gr[i];
      const T m_hat = mm[i] * c1;
      const T v_hat = vv[i] * c2;
      th[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

double lr_at_epoch(const LrSchedule& schedule, std::size_t epoch) {
  return schedule.lr0 * std::exp(-schedule.decay * static_cast<double>(epoch));
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&, double);
template void adam_step(ModelParams<double>&, const ModelParams<double>&, AdamState<double>&, double);

}  // namespace asucnn
