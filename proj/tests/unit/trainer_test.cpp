#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "asucnn/trainer.hpp"
#include "test_support.hpp"

using namespace asucnn;

namespace {

cifar::Dataset synthetic_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  cifar::Dataset data(cifar::Split::kTrain);
  std::vector<float> hwc(cifar::kImageBytes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto bytes = asucnn::testing::synthetic_image(i % 10, rng);
    for (std::size_t k = 0; k < bytes.size(); ++k) hwc[k] = static_cast<float>(bytes[k]) / 255.0f;
    data.add(hwc, static_cast<std::uint8_t>(i % 10));
  }
  return data;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 4;
  c.seed = 5;
  c.hidden_width = 8;
  return c;
}

}  // namespace

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 20u);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.lr0, 1e-3);
  EXPECT_EQ(c.decay, 0.1);
  EXPECT_EQ(c.hidden_width, 64u);
  EXPECT_EQ(c.activation, ActivationKind::kAsu);
  EXPECT_EQ(c.architecture(), Architecture::reference());
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainConfig{};
  c.lr0 = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainConfig{};
  c.subset = 100;
  EXPECT_EQ(c.limits().test, 100u);
  c.test_subset = 7;
  EXPECT_EQ(c.limits().test, 7u);
}

TEST(EpochSeed, DistinctPerEpochStablePerSeed) {
  std::set<std::uint64_t> seen;
  for (std::size_t e = 0; e < 100; ++e) seen.insert(epoch_seed(42, e));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(epoch_seed(42, 3), epoch_seed(42, 3));
  EXPECT_NE(epoch_seed(42, 3), epoch_seed(43, 3));
}

TEST(Minibatches, ChunkingAndPartition) {
  const auto data = synthetic_dataset(10, 1);
  const auto batches = cifar::minibatches(data, 4, 99);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[1].size(), 4u);
  EXPECT_EQ(batches[2].size(), 2u);
  std::vector<std::size_t> all;
  for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(cifar::minibatches(data, 4, 99), batches);
  EXPECT_NE(cifar::minibatches(data, 4, 100), batches);
  EXPECT_THROW(cifar::minibatches(data, 0, 1), UsageError);
}

TEST(TrainEpoch, ZeroLrLeavesParamsUnchanged) {
  const auto data = synthetic_dataset(12, 2);
  auto params = build_model<float>(Architecture::reference(ActivationKind::kAsu, 8), 3);
  const auto before = params;
  auto state = AdamState<float>::for_params(params);
  const auto m = train_epoch(params, state, data, 5, 0.0, 7);
  for (std::size_t i = 0; i < params.tensors.size(); ++i)
    EXPECT_TRUE(bitwise_equal(params.tensors[i].value, before.tensors[i].value));
  EXPECT_EQ(state.step, 3u);
  EXPECT_GT(m.train_loss, 0.0);
  EXPECT_GE(m.train_acc, 0.0);
  EXPECT_LE(m.train_acc, 1.0);
}

TEST(TrainEpoch, EmptyDatasetRejected) {
  auto params = build_model<float>(Architecture::reference(), 3);
  auto state = AdamState<float>::for_params(params);
  EXPECT_THROW(train_epoch(params, state, cifar::Dataset{}, 4, 1e-3, 1), UsageError);
}

TEST(Evaluate, ZeroParamsGiveLn10AndTieRuleAccuracy) {
  const auto data = synthetic_dataset(20, 3);
  const auto params = zero_model<float>(Architecture::reference());
  const auto r = evaluate(params, data);
  EXPECT_NEAR(r.loss, 2.302585, 1e-6);
  // every prediction is class 0 by the first-maximum rule; labels cycle 0..9
  EXPECT_EQ(r.accuracy, 0.1);
  const auto again = evaluate(params, data);
  EXPECT_EQ(again.loss, r.loss);
  EXPECT_EQ(again.accuracy, r.accuracy);
}

TEST(Fit, ZeroEpochsReturnsInitializedModel) {
  auto c = small_config();
  c.epochs = 0;
  const auto r = fit(c, cifar::Dataset{}, cifar::Dataset{});
  EXPECT_TRUE(r.history.empty());
  const auto init = build_model<float>(c.architecture(), c.seed);
  for (std::size_t i = 0; i < init.tensors.size(); ++i)
    EXPECT_TRUE(bitwise_equal(r.params.tensors[i].value, init.tensors[i].value));
}

TEST(Fit, DeterministicAndLogsSchedule) {
  const auto train = synthetic_dataset(16, 4);
  const auto val = synthetic_dataset(10, 5);
  const auto c = small_config();
  std::vector<EpochMetrics> seen;
  const auto a = fit(c, train, val, [&](const EpochMetrics& m) { seen.push_back(m); });
  const auto b = fit(c, train, val);
  ASSERT_EQ(a.history.size(), 2u);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(a.history[0].lr, 1e-3);
  EXPECT_EQ(a.history[1].lr, lr_at_epoch(c.schedule(), 1));
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a.history[e].epoch, e);
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    EXPECT_EQ(a.history[e].train_acc, b.history[e].train_acc);
    EXPECT_EQ(a.history[e].val_loss, b.history[e].val_loss);
    EXPECT_EQ(a.history[e].val_acc, b.history[e].val_acc);
    EXPECT_EQ(seen[e].train_loss, a.history[e].train_loss);
  }
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i)
    EXPECT_TRUE(bitwise_equal(a.params.tensors[i].value, b.params.tensors[i].value));
}

TEST(Fit, FinalValMetricsMatchEvaluate) {
  const auto train = synthetic_dataset(8, 6);
  const auto val = synthetic_dataset(10, 7);
  auto c = small_config();
  c.epochs = 1;
  const auto r = fit(c, train, val);
  const auto e = evaluate(r.params, val);
  EXPECT_EQ(r.history.back().val_loss, e.loss);
  EXPECT_EQ(r.history.back().val_acc, e.accuracy);
}

TEST(Fit, MissingDataRaisesDataMissing) {
  auto c = small_config();
  c.data_root = "/nonexistent/cifar";
  EXPECT_THROW(fit(c), DataMissingError);
}
