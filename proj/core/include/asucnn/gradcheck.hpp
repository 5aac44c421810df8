#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "asucnn/model.hpp"
#include "asucnn/tensor.hpp"

namespace asucnn::gradcheck {

// Loss as a function of a parameter list. Returning a non-finite value marks
// the probe as unusable (e.g. it crossed a max-pool tie), and the coordinate
// is skipped.
using LossFn = std::function<double(const std::vector<Tensor64>&)>;

// Central differences (L(x + h e_i) - L(x - h e_i)) / 2h for every coordinate.
// Skipped coordinates come back as NaN. h must lie in [1e-7, 1e-4].
std::vector<Tensor64> finite_diff_grad(const LossFn& loss, std::vector<Tensor64> params, double h);

struct Tolerance {
  double relative = 1e-4;
  // Coordinates whose analytic value is below `tiny` pass on absolute error.
  double tiny = 1e-6;
  double absolute = 1e-7;
};

struct ParameterReport {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
  bool passed = true;
};

struct GradReport {
  std::vector<ParameterReport> parameters;
  bool passed = true;
  double max_rel_error = 0.0;
  // Layer where the first failing gradient appears walking backwards from
  // the output; empty when everything passes.
  std::string worst_layer;
};

// |a - n| / max(|a|, |n|), 0 when both are exactly 0.
double relative_error(double analytic, double numeric);

GradReport compare(const std::vector<std::string>& names, const std::vector<Tensor64>& analytic,
                   const std::vector<Tensor64>& numeric, const Tolerance& tol = {});

// Folds `next` into `into` keeping per-parameter maxima. Names must line up.
void merge(GradReport& into, const GradReport& next);

struct ModelCheckOptions {
  Architecture arch = Architecture::tiny();
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double h = 1e-5;
  Tolerance tolerance{};
  Mutation mutation = Mutation::kNone;
};

// End-to-end check of backward_full against finite differences of
// forward_full + softmax cross-entropy, one random image/label per seed.
GradReport check_model(const ModelCheckOptions& options = {});

// Same comparison for an explicit model/input, used by check_model and tests.
GradReport check_model_instance(const ModelParams<double>& params, const Tensor64& image,
                                std::size_t label, const ModelCheckOptions& options);

std::string format_report(const GradReport& report);

}  // namespace asucnn::gradcheck
