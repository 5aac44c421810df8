#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "asucnn/activations.hpp"
#include "asucnn/errors.hpp"
#include "commands.hpp"

using namespace asucnn;
using namespace asucnn::cli;

namespace {

const std::vector<std::string> kActivations = {"asu", "gcu", "relu"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asucnn: CNN micro-framework with the z*sin(z) activation, trained on CIFAR-10"};
  app.require_subcommand(1);

  TrainArgs train;
  std::string train_data = train.config.data_root.string();
  auto* cmd_train = app.add_subcommand("train", "Train the reference CNN and write a checkpoint and metrics CSV");
  cmd_train->add_option("--data", train_data, "CIFAR-10 binary directory")->capture_default_str();
  cmd_train->add_option("--epochs", train.config.epochs, "Training epochs")->capture_default_str();
  cmd_train->add_option("--batch", train.config.batch_size, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd_train->add_option("--seed", train.config.seed, "Seed for init, subset and shuffling")->capture_default_str();
  std::string train_activation = "asu";
  cmd_train->add_option("--activation", train_activation, "asu, gcu or relu")
      ->check(CLI::IsMember(kActivations))
      ->capture_default_str();
  cmd_train->add_option("--lr", train.config.lr0, "Initial learning rate")->capture_default_str();
  cmd_train->add_option("--decay", train.config.decay, "Per-epoch exponential decay rate")->capture_default_str();
  cmd_train->add_option("--hidden", train.config.hidden_width, "Hidden dense width")->capture_default_str();
  cmd_train->add_option("--subset", train.config.subset, "Keep N training (and test) examples");
  cmd_train->add_option("--test-subset", train.config.test_subset, "Keep N test examples (defaults to --subset)");
  cmd_train->add_option("--checkpoint", train.checkpoint, "Checkpoint output path")->capture_default_str();
  cmd_train->add_option("--metrics", train.metrics, "Metrics CSV output path")->capture_default_str();

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  cmd_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint path")->capture_default_str();
  cmd_eval->add_option("--data", eval.data_root, "CIFAR-10 directory (defaults to the one used in training)");
  cmd_eval->add_option("--subset", eval.subset, "Test examples (defaults to the training run's)");
  cmd_eval->add_option("--seed", eval.seed, "Subset seed (defaults to the training run's)");

  VizArgs viz;
  auto* cmd_viz = app.add_subcommand("viz", "Export post-activation feature-map mosaics as PGM");
  cmd_viz->add_option("--checkpoint", viz.checkpoint, "Checkpoint path")->capture_default_str();
  cmd_viz->add_option("--data", viz.data_root, "CIFAR-10 directory for --index")->capture_default_str();
  auto* index_opt = cmd_viz->add_option("--index", viz.index, "Test-split image index");
  auto* image_opt = cmd_viz->add_option("--image", viz.image, "Raw 3072-byte planar RGB image file");
  index_opt->excludes(image_opt);
  cmd_viz->add_option("--layer", viz.layer, "conv1, conv2, conv3, a comma list, or all")->capture_default_str();
  cmd_viz->add_option("--out", viz.out_dir, "Output directory")->capture_default_str();

  GradcheckArgs gc;
  std::optional<std::uint64_t> single_seed;
  auto* cmd_gc = app.add_subcommand("gradcheck", "Check analytic gradients against central differences");
  auto* seed_opt = cmd_gc->add_option("--seed", single_seed, "Single seed");
  cmd_gc->add_option("--seeds", gc.seeds, "Seeds to check")->delimiter(',')->excludes(seed_opt)->capture_default_str();
  cmd_gc->add_option("--activation", gc.activation, "asu, gcu or relu")
      ->check(CLI::IsMember(kActivations))
      ->capture_default_str();
  cmd_gc->add_option("--step", gc.h, "Finite-difference step h")->capture_default_str();
  cmd_gc->add_option("--inject-fault", gc.inject_fault, "Deliberate backward-pass fault")->capture_default_str();

  LrScheduleArgs lrs;
  auto* cmd_lr = app.add_subcommand("lr-schedule", "Print the per-epoch learning rate");
  cmd_lr->add_option("--epochs", lrs.epochs, "Epochs")->capture_default_str();
  cmd_lr->add_option("--lr", lrs.lr0, "Initial learning rate")->capture_default_str();
  cmd_lr->add_option("--decay", lrs.decay, "Decay rate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (cmd_train->parsed()) {
      train.config.data_root = train_data;
      train.config.activation = *parse_activation(train_activation);
      return run_train(train);
    }
    if (cmd_eval->parsed()) return run_eval(eval);
    if (cmd_viz->parsed()) return run_viz(viz);
    if (cmd_gc->parsed()) {
      if (single_seed) gc.seeds = {*single_seed};
      return run_gradcheck(gc);
    }
    if (cmd_lr->parsed()) return run_lr_schedule(lrs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kData;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
