#pragma once

#include <cstdint>
#include <vector>

#include "asucnn/model.hpp"

namespace asucnn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment buffers mirroring the parameter list, plus the step count.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<BasicTensor<T>> m;
  std::vector<BasicTensor<T>> v;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams<T>& params, AdamConfig config = {});
};

// t += 1; m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2;
// theta -= lr * m_hat / (sqrt(v_hat) + eps) with bias-corrected moments.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, double lr);

// lr0 * exp(-decay * epoch). Epoch 0 is the first epoch.
struct LrSchedule {
  double lr0 = 1e-3;
  double decay = 0.1;
};

double lr_at_epoch(const LrSchedule& schedule, std::size_t epoch);

}  // namespace asucnn
