#include "asucnn/trainer.hpp"

#include <chrono>
#include <string>

namespace asucnn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  if (!(lr0 > 0.0)) throw UsageError("initial learning rate must be > 0");
  if (!(decay > 0.0)) throw UsageError("decay rate must be > 0");
  if (hidden_width < 1) throw UsageError("hidden width must be >= 1");
}

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) {
  // splitmix64 finalizer over (seed, epoch)
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(epoch) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EpochMetrics train_epoch(ModelParams<float>& params, AdamState<float>& state,
                         const cifar::Dataset& train, std::size_t batch_size, double lr,
                         std::uint64_t shuffle_seed) {
  if (train.empty()) throw UsageError("train_epoch: empty dataset");
  const auto plan = cifar::make_batch_plan(train.size(), batch_size, shuffle_seed);

  double loss_sum = 0.0;
  std::size_t correct = 0;
  ModelParams<float> batch_grads = params.zeros_like();

  for (std::size_t b = 0; b < plan.batch_count(); ++b) {
    const auto batch = plan.batch(b);
    for (auto& g : batch_grads.tensors) g.value.fill(0.0f);

    for (std::size_t idx : batch) {
      const Tensor image = train.image(idx);
      const std::size_t label = train.label(idx);
      try {
        const auto trace = forward_full(params, image);
        const auto loss = sparse_cce_with_softmax(trace.logits(), label);
        loss_sum += static_cast<double>(loss.loss);
        if (argmax(trace.logits()) == label) ++correct;
        const auto grads = backward_full(params, trace, loss.grad_logits);
        for (std::size_t p = 0; p < grads.tensors.size(); ++p) {
          batch_grads.tensors[p].value.accumulate(grads.tensors[p].value);
        }
      } catch (const DivergenceError& e) {
        throw DivergenceError("diverged in batch " + std::to_string(b) + " (example " +
                              std::to_string(idx) + "): " + e.what());
      }
    }

    const float inv = 1.0f / static_cast<float>(batch.size());
    for (auto& g : batch_grads.tensors) g.value.scale(inv);
    adam_step(params, batch_grads, state, lr);
  }

  EpochMetrics metrics;
  metrics.lr = lr;
  metrics.train_loss = loss_sum / static_cast<double>(train.size());
  metrics.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
  return metrics;
}

EvalResult evaluate(const ModelParams<float>& params, const cifar::Dataset& data) {
  if (data.empty()) throw UsageError("evaluate: empty dataset");
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto trace = forward_full(params, data.image(i));
    const std::size_t label = data.label(i);
    loss_sum += static_cast<double>(sparse_cce_with_softmax(trace.logits(), label).loss);
    if (argmax(trace.logits()) == label) ++correct;
  }
  const double n = static_cast<double>(data.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

FitResult fit(const TrainConfig& config, const cifar::Dataset& train, const cifar::Dataset& val,
              const EpochCallback& on_epoch) {
  config.validate();
  FitResult result{build_model<float>(config.architecture(), config.seed), {}};
  if (config.epochs == 0) return result;
  if (train.empty()) throw UsageError("fit: training split is empty");

  AdamState<float> state = AdamState<float>::for_params(result.params);
  const LrSchedule schedule = config.schedule();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = lr_at_epoch(schedule, epoch);
    EpochMetrics m;
    try {
      m = train_epoch(result.params, state, train, config.batch_size, lr,
                      epoch_seed(config.seed, epoch));
    } catch (const DivergenceError& e) {
      throw DivergenceError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    m.epoch = epoch;
    if (!val.empty()) {
      const EvalResult v = evaluate(result.params, val);
      m.val_loss = v.loss;
      m.val_acc = v.accuracy;
    }
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

FitResult fit(const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const cifar::Splits data = cifar::load_dataset(config.data_root, config.limits(), config.seed);
  return fit(config, data.train, data.test, on_epoch);
}

}  // namespace asucnn
