#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "asucnn/cifar.hpp"
#include "asucnn/model.hpp"
#include "asucnn/optimizer.hpp"

namespace asucnn {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
  ActivationKind activation = ActivationKind::kAsu;
  double lr0 = 1e-3;
  double decay = 0.1;
  std::size_t hidden_width = 64;
  std::filesystem::path data_root = "data/cifar-10-batches-bin";
  std::optional<std::size_t> subset;       // train examples kept
  std::optional<std::size_t> test_subset;  // test examples kept; defaults to `subset`

  Architecture architecture() const { return Architecture::reference(activation, hidden_width); }
  LrSchedule schedule() const { return {lr0, decay}; }
  cifar::SplitLimits limits() const { return {subset, test_subset ? test_subset : subset}; }
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double wall_seconds = 0.0;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Shuffle seed for a given epoch; distinct per epoch, fixed per run seed.
std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch);

// One pass over `train` in seeded-shuffled minibatches. Gradients are averaged
// over each batch before a single Adam step. Loss/accuracy are the running
// means over the examples seen during the pass.
EpochMetrics train_epoch(ModelParams<float>& params, AdamState<float>& state,
                         const cifar::Dataset& train, std::size_t batch_size, double lr,
                         std::uint64_t shuffle_seed);

EvalResult evaluate(const ModelParams<float>& params, const cifar::Dataset& data);

struct FitResult {
  ModelParams<float> params;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

FitResult fit(const TrainConfig& config, const cifar::Dataset& train, const cifar::Dataset& val,
              const EpochCallback& on_epoch = {});

// Loads the dataset from config.data_root, then trains.
FitResult fit(const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace asucnn
