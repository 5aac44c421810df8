#include "asucnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace asucnn::gradcheck {

std::vector<Tensor64> finite_diff_grad(const LossFn& loss, std::vector<Tensor64> params, double h) {
  if (!(h >= 1e-7 && h <= 1e-4)) {
    throw UsageError("finite_diff_grad: step h must lie in [1e-7, 1e-4]");
  }
  std::vector<Tensor64> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor64 g(params[p].shape());
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + h;
      const double plus = loss(params);
      params[p][i] = saved - h;
      const double minus = loss(params);
      params[p][i] = saved;
      g[i] = (std::isfinite(plus) && std::isfinite(minus))
                 ? (plus - minus) / (2.0 * h)
                 : std::numeric_limits<double>::quiet_NaN();
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

GradReport compare(const std::vector<std::string>& names, const std::vector<Tensor64>& analytic,
                   const std::vector<Tensor64>& numeric, const Tolerance& tol) {
  if (names.size() != analytic.size() || analytic.size() != numeric.size()) {
    throw UsageError("gradcheck::compare: name/analytic/numeric lists differ in length");
  }
  GradReport report;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    if (!(analytic[p].shape() == numeric[p].shape())) {
      throw ShapeError("gradcheck::compare: shape mismatch for " + names[p]);
    }
    ParameterReport pr;
    pr.name = names[p];
    bool have_worst = false;
    for (std::size_t i = 0; i < analytic[p].size(); ++i) {
      const double a = analytic[p][i];
      const double n = numeric[p][i];
      if (!std::isfinite(n)) {
        ++pr.skipped;
        continue;
      }
      ++pr.compared;
      const double abs_err = std::abs(a - n);
      const double rel_err = relative_error(a, n);
      const bool tiny_ok = std::abs(a) < tol.tiny && abs_err < tol.absolute;
      const bool ok = std::isfinite(a) && (rel_err < tol.relative || tiny_ok);
      pr.max_abs_error = std::max(pr.max_abs_error, abs_err);
      if (!ok) pr.passed = false;
      if (!tiny_ok && (!have_worst || rel_err > pr.max_rel_error)) {
        pr.max_rel_error = rel_err;
        pr.worst_index = i;
        have_worst = true;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, pr.max_rel_error);
    report.passed = report.passed && pr.passed;
    report.parameters.push_back(std::move(pr));
  }
  for (std::size_t p = report.parameters.size(); p-- > 0;) {
    if (!report.parameters[p].passed) {
      report.worst_layer = layer_of(report.parameters[p].name);
      break;
    }
  }
  return report;
}

void merge(GradReport& into, const GradReport& next) {
  if (into.parameters.empty()) {
    into = next;
    return;
  }
  if (into.parameters.size() != next.parameters.size()) {
    throw UsageError("gradcheck::merge: reports cover different parameter lists");
  }
  for (std::size_t p = 0; p < into.parameters.size(); ++p) {
    auto& a = into.parameters[p];
    const auto& b = next.parameters[p];
    if (b.max_rel_error > a.max_rel_error) {
      a.max_rel_error = b.max_rel_error;
      a.worst_index = b.worst_index;
    }
    a.max_abs_error = std::max(a.max_abs_error, b.max_abs_error);
    a.compared += b.compared;
    a.skipped += b.skipped;
    a.passed = a.passed && b.passed;
  }
  into.passed = into.passed && next.passed;
  into.max_rel_error = std::max(into.max_rel_error, next.max_rel_error);
  into.worst_layer.clear();
  for (std::size_t p = into.parameters.size(); p-- > 0;) {
    if (!into.parameters[p].passed) {
      into.worst_layer = layer_of(into.parameters[p].name);
      break;
    }
  }
}

namespace {

// Discrete branch choices of a forward pass: pool winners, plus ReLU gates.
// A finite-difference probe is only meaningful if it leaves these unchanged.
std::vector<std::uint32_t> branch_signature(const ForwardTrace<double>& trace, ActivationKind kind) {
  std::vector<std::uint32_t> sig;
  for (const auto& stage : trace.stages) {
    if (stage.pool) {
      sig.insert(sig.end(), stage.pool->cache.argmax.begin(), stage.pool->cache.argmax.end());
    }
    if (kind == ActivationKind::kRelu) {
      for (double z : stage.conv.z.data()) sig.push_back(z > 0.0 ? 1u : 0u);
    }
  }
  if (kind == ActivationKind::kRelu) {
    for (double z : trace.hidden.z.data()) sig.push_back(z > 0.0 ? 1u : 0u);
  }
  return sig;
}

}  // namespace

GradReport check_model_instance(const ModelParams<double>& params, const Tensor64& image,
                                std::size_t label, const ModelCheckOptions& options) {
  std::vector<std::string> names;
  std::vector<Tensor64> values;
  for (const auto& p : params.tensors) {
    names.push_back(p.name);
    values.push_back(p.value);
  }
  if (values.empty()) return {};

  const auto trace = forward_full(params, image);
  const auto loss = sparse_cce_with_softmax(trace.logits(), label);
  const ModelParams<double> analytic = backward_full(params, trace, loss.grad_logits, options.mutation);
  std::vector<Tensor64> analytic_values;
  for (const auto& p : analytic.tensors) analytic_values.push_back(p.value);

  const auto baseline = branch_signature(trace, params.arch.activation);
  ModelParams<double> probe = params;
  const LossFn loss_fn = [&](const std::vector<Tensor64>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) probe.tensors[i].value = v[i];
    const auto t = forward_full(probe, image);
    if (branch_signature(t, probe.arch.activation) != baseline) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return static_cast<double>(sparse_cce_with_softmax(t.logits(), label).loss);
  };
  const auto numeric = finite_diff_grad(loss_fn, values, options.h);
  return compare(names, analytic_values, numeric, options.tolerance);
}

GradReport check_model(const ModelCheckOptions& options) {
  GradReport total;
  for (std::uint64_t seed : options.seeds) {
    const ModelParams<double> params = build_model<double>(options.arch, seed);
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::uniform_real_distribution<double> pixel(0.0, 1.0);
    Tensor64 image(Shape{options.arch.input_size, options.arch.input_size,
                         options.arch.input_channels});
    for (auto& v : image.data()) v = pixel(rng);
    std::uniform_int_distribution<std::size_t> cls(0, options.arch.num_classes - 1);
    const std::size_t label = cls(rng);
    merge(total, check_model_instance(params, image, label, options));
  }
  return total;
}

std::string format_report(const GradReport& report) {
  std::string out;
  char line[256];
  for (const auto& p : report.parameters) {
    std::snprintf(line, sizeof line, "%-12s max_rel=%.3e max_abs=%.3e worst=%zu compared=%zu skipped=%zu %s\n",
                  p.name.c_str(), p.max_rel_error, p.max_abs_error, p.worst_index, p.compared,
                  p.skipped, p.passed ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "gradcheck %s max_rel_err=%.3e%s%s\n",
                report.passed ? "PASS" : "FAIL", report.max_rel_error,
                report.worst_layer.empty() ? "" : " worst_layer=", report.worst_layer.c_str());
  out += line;
  return out;
}

}  // namespace asucnn::gradcheck
