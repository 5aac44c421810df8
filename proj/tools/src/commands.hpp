#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asucnn/trainer.hpp"

namespace asucnn::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kDivergence = 3,
  kVerification = 4,
};

struct TrainArgs {
  TrainConfig config;
  std::filesystem::path checkpoint = "asucnn.ckpt";
  std::filesystem::path metrics = "metrics.csv";
};

struct EvalArgs {
  std::filesystem::path checkpoint = "asucnn.ckpt";
  std::optional<std::filesystem::path> data_root;
  std::optional<std::size_t> subset;
  std::optional<std::uint64_t> seed;
};

struct VizArgs {
  std::filesystem::path checkpoint = "asucnn.ckpt";
  std::filesystem::path data_root = "data/cifar-10-batches-bin";
  std::optional<std::size_t> index;
  std::optional<std::filesystem::path> image;
  std::string layer = "all";
  std::filesystem::path out_dir = "feature_maps";
};

struct GradcheckArgs {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string activation = "asu";
  double h = 1e-5;
  std::string inject_fault = "none";
};

struct LrScheduleArgs {
  std::size_t epochs = 20;
  double lr0 = 1e-3;
  double decay = 0.1;
};

int run_train(const TrainArgs& args);
int run_eval(const EvalArgs& args);
int run_viz(const VizArgs& args);
int run_gradcheck(const GradcheckArgs& args);
int run_lr_schedule(const LrScheduleArgs& args);

// 1.4956862e-4 -> "1.496e-4"
std::string short_scientific(double v);

}  // namespace asucnn::cli
