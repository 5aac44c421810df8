#include "commands.hpp"

#include <cstdio>
#include <iostream>

#include "asucnn/checkpoint.hpp"
#include "asucnn/gradcheck.hpp"
#include "asucnn/metrics_csv.hpp"
#include "asucnn/visualize.hpp"

namespace asucnn::cli {

std::string short_scientific(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  std::string s = buf;
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mantissa = s.substr(0, e);
  std::string exponent = s.substr(e + 1);
  std::string sign;
  if (!exponent.empty() && (exponent[0] == '+' || exponent[0] == '-')) {
    if (exponent[0] == '-') sign = "-";
    exponent.erase(0, 1);
  }
  while (exponent.size() > 1 && exponent[0] == '0') exponent.erase(0, 1);
  return mantissa + "e" + sign + exponent;
}

int run_train(const TrainArgs& args) {
  const TrainConfig& config = args.config;
  config.validate();
  const cifar::Splits data = cifar::load_dataset(config.data_root, config.limits(), config.seed);
  std::cout << "train=" << data.train.size() << " test=" << data.test.size()
            << " activation=" << to_string(config.activation) << " epochs=" << config.epochs
            << " batch=" << config.batch_size << " seed=" << config.seed << std::endl;

  write_metrics_header(args.metrics);
  const FitResult result = fit(config, data.train, data.test, [&](const EpochMetrics& m) {
    append_metrics(args.metrics, m);
    std::cout << format_epoch_line(m) << std::endl;
  });
  save_checkpoint(args.checkpoint, result.params, config);
  std::cout << "checkpoint=" << args.checkpoint.string() << " metrics=" << args.metrics.string() << "\n";
  return kOk;
}

int run_eval(const EvalArgs& args) {
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  const auto root = args.data_root.value_or(ck.config.data_root);
  cifar::SplitLimits limits = ck.config.limits();
  if (args.subset) limits.test = *args.subset;
  limits.train = 0;
  const std::uint64_t seed = args.seed.value_or(ck.config.seed);
  const cifar::Splits data = cifar::load_dataset(root, limits, seed);
  const EvalResult r = evaluate(ck.params, data.test);
  char buf[128];
  std::snprintf(buf, sizeof buf, "test_loss=%.6g test_acc=%.6g", r.loss, r.accuracy);
  std::cout << buf << "\n";
  return kOk;
}

int run_viz(const VizArgs& args) {
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  Tensor image(Shape{cifar::kSide, cifar::kSide, cifar::kChannels});
  std::string source;
  if (args.image) {
    image = cifar::load_raw_image(*args.image);
    source = args.image->string();
  } else {
    const cifar::Dataset test =
        cifar::load_batch_file(args.data_root / cifar::kTestFileName, cifar::Split::kTest);
    const std::size_t index = args.index.value_or(0);
    if (index >= test.size()) {
      throw UsageError("image index " + std::to_string(index) + " out of range (test split has " +
                       std::to_string(test.size()) + " images)");
    }
    image = test.image(index);
    source = "test[" + std::to_string(index) + "] label=" + std::to_string(test.label(index));
  }
  const auto files = export_feature_maps(ck.params, image, args.layer, args.out_dir);
  std::cout << "image=" << source << "\n";
  for (const auto& f : files) {
    const auto& m = f.mosaic;
    std::cout << m.layer << ": " << m.tiles << " tiles of " << m.tile_height << "x" << m.tile_width
              << " -> " << f.file.string() << " (" << m.image.width << "x" << m.image.height << ")\n";
  }
  return kOk;
}

int run_gradcheck(const GradcheckArgs& args) {
  const auto kind = parse_activation(args.activation);
  if (!kind) throw UsageError("unknown activation '" + args.activation + "' (asu, gcu, relu)");
  const auto mutation = parse_mutation(args.inject_fault);
  if (!mutation) {
    std::string names = "none";
    for (Mutation m : all_mutations()) names += ", " + std::string(to_string(m));
    throw UsageError("unknown fault '" + args.inject_fault + "'; choose one of: " + names);
  }
  gradcheck::ModelCheckOptions options;
  options.arch = Architecture::tiny(*kind);
  options.seeds = args.seeds;
  options.h = args.h;
  options.mutation = *mutation;

  std::cout << "tiny model: " << build_model<double>(options.arch, 0).parameter_count()
            << " parameters, activation=" << to_string(*kind) << ", seeds=";
  for (std::size_t i = 0; i < args.seeds.size(); ++i) std::cout << (i ? "," : "") << args.seeds[i];
  if (*mutation != Mutation::kNone) std::cout << ", injected fault=" << to_string(*mutation);
  std::cout << "\n";

  const auto report = gradcheck::check_model(options);
  std::cout << gradcheck::format_report(report);
  return report.passed ? kOk : kVerification;
}

int run_lr_schedule(const LrScheduleArgs& args) {
  if (!(args.lr0 > 0.0) || !(args.decay > 0.0)) throw UsageError("lr and decay must be > 0");
  const LrSchedule schedule{args.lr0, args.decay};
  std::cout << "epoch lr\n";
  for (std::size_t e = 0; e < args.epochs; ++e) {
    std::cout << e << " " << short_scientific(lr_at_epoch(schedule, e)) << "\n";
  }
  return kOk;
}

}  // namespace asucnn::cli
