#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nuce/errors.hpp"
#include "nuce/trainer.hpp"
#include "test_util.hpp"

using namespace nuce;

namespace {

// Two unit-variance blobs at -3 and +3 on both axes; x0 = 0 separates them.
GroupedDataset blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  GroupedDataset d;
  d.features = DenseMatrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    const double c = y == 1 ? 3.0 : -3.0;
    d.features(i, 0) = c + noise(rng);
    d.features(i, 1) = c + noise(rng);
    d.labels.push_back(y);
    d.groups.push_back(static_cast<std::int64_t>(i % 10));
  }
  return d;
}

ModelParams linear_model(DenseMatrix W) {
  ModelParams p;
  p.anchors.anchors = DenseMatrix(W.rows(), W.cols());
  p.head_W = std::move(W);
  return p;
}

}  // namespace

TEST(Forward, SaturatesWithoutExtractor) {
  const ModelParams p = linear_model(DenseMatrix{{1, 0}, {0, 1}});
  const ForwardResult r = forward(p, DenseMatrix{{10, -10}});
  EXPECT_NEAR(r.P(0, 0), 1.0, 1e-4);
  EXPECT_NEAR(r.P(0, 1), 0.0, 1e-4);
  EXPECT_EQ(r.H, (DenseMatrix{{10, -10}}));
}

TEST(Forward, ZeroInputGivesUniform) {
  ModelParams p = linear_model(DenseMatrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  p.extractor = DenseMatrix{{1, 1, 1}, {2, 2, 2}};
  p.extractor_bias = DenseVector(3);
  const ForwardResult r = forward(p, DenseMatrix(2, 2));
  for (double v : r.P.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Forward, RowsSumToOneAndShapesChecked) {
  std::mt19937_64 rng(4);
  ModelParams p = linear_model(testutil::random_matrix(3, 4, rng));
  p.extractor = testutil::random_matrix(5, 4, rng);
  p.extractor_bias = DenseVector{0.1, -0.2, 0.3, 0.0};
  const ForwardResult r = forward(p, testutil::random_matrix(7, 5, rng, 3.0));
  for (std::size_t i = 0; i < 7; ++i) {
    double s = 0;
    for (double v : r.P.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (double h : r.H.row(i)) EXPECT_LE(std::abs(h), 1.0);
  }
  EXPECT_THROW(forward(p, DenseMatrix(2, 4)), ShapeError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  AdamState s(3);
  std::vector<double> p{1, 2, 3};
  const std::vector<double> g(3, 0.0);
  adam_step(s, p, g, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1, 2, 3}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState s(2);
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{3.0, -0.02};
  adam_step(s, p, g, 1e-3);
  EXPECT_NEAR(p[0], -1e-3, 1e-9);
  EXPECT_NEAR(p[1], 1e-3, 1e-9);
}

TEST(Adam, QuadraticBowlDecreases) {
  AdamState s(2);
  std::vector<double> p{2.0, -1.5};
  auto loss = [&] { return 0.5 * (p[0] * p[0] + 4.0 * p[1] * p[1]); };
  double prev = loss();
  for (int step = 0; step < 10; ++step) {
    const std::vector<double> g{p[0], 4.0 * p[1]};
    adam_step(s, p, g, 0.1);
    const double now = loss();
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(CosineSchedule, Values) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 10, 1e-3), 1e-3);
  EXPECT_NEAR(cosine_lr(5, 10, 1e-3), 5e-4, 1e-18);
  EXPECT_NEAR(cosine_lr(9, 10, 1e-3), 1e-3 * 0.5 * (1 + std::cos(0.9 * std::numbers::pi)), 1e-18);
  EXPECT_THROW(cosine_lr(10, 10, 1e-3), ConfigError);
  for (std::size_t e = 1; e < 10; ++e) EXPECT_LT(cosine_lr(e, 10, 1.0), cosine_lr(e - 1, 10, 1.0));
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
  const GroupedDataset data = blobs(200, 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  cfg.early_stop_patience = 30;
  cfg.seed = 5;
  for (LossKind kind : {LossKind::Nuce, LossKind::CrossEntropy, LossKind::Focal, LossKind::Center}) {
    cfg.loss.kind = kind;
    const TrainReport r = train(data, cfg);
    EXPECT_GE(r.history[r.best_epoch - 1].validation.accuracy, 0.99) << to_string(kind);
  }
}

TEST(Train, DeterministicForSeed) {
  const GroupedDataset data = blobs(120, 2);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  cfg.seed = 9;
  const TrainReport a = train(data, cfg);
  const TrainReport b = train(data, cfg);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
  cfg.seed = 10;
  EXPECT_FALSE(train(data, cfg).params == a.params);
}

TEST(Train, SingleEpochRecordsOneEntry) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.early_stop_patience = 0;
  const TrainReport r = train(blobs(60, 3), cfg);
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.stopped_epoch, 1u);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_EQ(r.history[0].learning_rate, cfg.learning_rate);
}

TEST(Train, EarlyStopReturnsBestEpoch) {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.early_stop_patience = 2;
  cfg.learning_rate = 5e-2;
  cfg.batch_size = 8;
  const TrainReport r = train(blobs(100, 4), cfg);
  EXPECT_LT(r.stopped_epoch, 40u);
  EXPECT_EQ(r.stopped_epoch, r.best_epoch + 2);
  for (const auto& rec : r.history) EXPECT_LE(rec.validation.macro.f1, r.best_val_macro_f1);
}

TEST(Train, ContractionPullsFeaturesToAnchors) {
  const GroupedDataset data = blobs(200, 5);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.early_stop_patience = 20;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  cfg.loss = {0.0, 1.0, 2.0, LossKind::Nuce};
  const TrainReport r = train(data, cfg);
  EXPECT_LT(r.history.back().mean_anchor_distance, 0.5 * r.history.front().mean_anchor_distance);
}

TEST(Train, RejectsMissingClassAndBadConfig) {
  GroupedDataset data = blobs(20, 6);
  FoldSplit split;
  for (std::size_t i = 0; i < 20; ++i) {
    split.val.push_back(i);
    if (data.labels[i] == 1) split.train.push_back(i);
  }
  EXPECT_THROW(train(data, split, TrainConfig{}), DataError);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(train(data, bad), ConfigError);
}

TEST(ModelJson, RoundTrips) {
  TrainConfig cfg;
  cfg.epochs = 2;
  const TrainReport r = train(blobs(50, 7), cfg);
  const auto path = std::filesystem::temp_directory_path() / "nuce_model_roundtrip.json";
  save_model(r.params, path);
  EXPECT_EQ(load_model(path), r.params);
  EXPECT_EQ(model_from_json(model_to_json(r.params)), r.params);

  cfg.hidden_dim = 0;
  const TrainReport lin = train(blobs(50, 7), cfg);
  EXPECT_FALSE(lin.params.extractor.has_value());
  EXPECT_EQ(model_from_json(model_to_json(lin.params)), lin.params);
  EXPECT_THROW(model_from_json(nlohmann::json::object()), InputError);
  EXPECT_THROW(load_model(path.string() + ".missing"), InputError);
  std::filesystem::remove(path);
}
