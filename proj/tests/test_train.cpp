#include <gtest/gtest.h>

#include "tgnn4i/gradcheck.hpp"
#include "tgnn4i/synthetic.hpp"
#include "tgnn4i/train.hpp"

namespace tgnn4i {
namespace {

const DatasetSplit& small_data() {
  static const DatasetSplit data = [] {
    SyntheticConfig c;
    c.seed = 17;
    c.num_nodes = 6;
    c.train = 6;
    c.val = 2;
    c.test = 2;
    c.times_per_sequence = 20;
    c.grid = 200;
    return generate_synthetic(c).split;
  }();
  return data;
}

TrainConfig small_config(ModelKind kind) {
  TrainConfig c;
  c.model = ModelConfig::defaults(kind);
  c.model.dynamics = DynamicsKind::Periodic;
  c.model.latent_dim = 6;
  c.loss.weight = weight_preset("w2");
  c.batch_size = 4;
  c.max_epochs = 3;
  c.patience = 5;
  c.seed = 3;
  return c;
}

TEST(Train, PatienceZeroRunsExactlyOneEpoch) {
  TrainConfig c = small_config(ModelKind::GruDNode);
  c.patience = 0;
  const TrainResult r = train(c, small_data());
  EXPECT_EQ(r.report.train_curve.size(), 1u);
  EXPECT_EQ(r.report.best_epoch, 0);
}

TEST(Train, IdenticalSeedsGiveIdenticalReports) {
  const TrainConfig c = small_config(ModelKind::Tgnn4i);
  const TrainResult a = train(c, small_data());
  const TrainResult b = train(c, small_data());
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.model->parameters().to_json_string(), b.model->parameters().to_json_string());

  TrainConfig other = c;
  other.seed = 4;
  EXPECT_FALSE(train(other, small_data()).report == a.report);
}

TEST(Train, WorkerCountDoesNotChangeResults) {
  TrainConfig c = small_config(ModelKind::Tgnn4i);
  c.max_epochs = 2;
  const TrainResult one = train(c, small_data());
  c.workers = 3;
  const TrainResult three = train(c, small_data());
  EXPECT_EQ(one.report, three.report);
}

TEST(Train, TrainingLossDecreasesOnASmallProblem) {
  TrainConfig c = small_config(ModelKind::GruDNode);
  c.learning_rate = 1e-2;
  c.max_epochs = 25;
  c.patience = 25;
  const TrainResult r = train(c, small_data());
  ASSERT_EQ(r.report.train_curve.size(), 25u);
  EXPECT_LT(r.report.train_curve.back(), 0.8 * r.report.train_curve.front());
}

TEST(Train, BestEpochParametersAreRestored) {
  TrainConfig c = small_config(ModelKind::GruDNode);
  c.learning_rate = 5e-2;
  c.max_epochs = 6;
  const TrainResult r = train(c, small_data());
  const auto best = static_cast<std::size_t>(r.report.best_epoch);
  const EvaluationResult val = evaluate(*r.model, small_data().val, c.loss);
  EXPECT_NEAR(val.loss, r.report.val_curve[best], 1e-12);
  for (double v : r.report.val_curve) EXPECT_GE(v, r.report.val_curve[best]);
}

TEST(Train, PredictPreviousIsEvaluatedWithoutTraining) {
  TrainConfig c = small_config(ModelKind::PredictPrevious);
  const TrainResult r = train(c, small_data());
  EXPECT_TRUE(r.report.train_curve.empty());
  EXPECT_EQ(r.report.best_epoch, -1);
  EXPECT_GT(r.report.test_metric, 0.0);
}

TEST(Train, TestMetricIsScaledMetricLoss) {
  const TrainConfig c = small_config(ModelKind::GruDNode);
  const TrainResult r = train(c, small_data());
  const EvaluationResult test = evaluate(*r.model, small_data().test, metric_loss_config());
  EXPECT_NEAR(r.report.test_metric, 100.0 * test.loss, 1e-12);
  EXPECT_EQ(r.report.test_bins, test.bins);
}

TEST(Objective, GradientScalesWithTheWeight) {
  TinyInstance inst = make_tiny_instance(ModelKind::Tgnn4i, DynamicsKind::Exponential, 5);
  auto& store = inst.model->parameters();
  store.zero_grad();
  const double l1 = sequence_objective(*inst.model, inst.sequences[0], inst.loss, 1.0);
  const Eigen::MatrixXd g1 = store.at(2).grad;
  store.zero_grad();
  const double l2 = sequence_objective(*inst.model, inst.sequences[0], inst.loss, 0.25);
  EXPECT_EQ(l1, l2);
  EXPECT_TRUE(store.at(2).grad.isApprox(0.25 * g1, 1e-14));
  store.zero_grad();
  sequence_objective(*inst.model, inst.sequences[0], inst.loss, 0.0);
  EXPECT_TRUE(store.at(2).grad.isZero());
}

TEST(Gradcheck, AllDynamicsKindsPassOnTheTinyInstance) {
  for (DynamicsKind kind : {DynamicsKind::Static, DynamicsKind::Exponential, DynamicsKind::Periodic}) {
    TinyInstance inst = make_tiny_instance(ModelKind::Tgnn4i, kind, 9);
    const GradcheckReport rep = gradcheck(*inst.model, inst.sequences, inst.loss);
    EXPECT_LT(rep.max_relative_error, 1e-4) << to_string(kind);
    EXPECT_FALSE(rep.groups.empty());
  }
}

TEST(Gradcheck, BaselinesPassToo) {
  for (ModelKind kind : {ModelKind::GruDNode, ModelKind::GruDJoint}) {
    TinyInstance inst = make_tiny_instance(kind, DynamicsKind::Periodic, 10);
    EXPECT_LT(gradcheck(*inst.model, inst.sequences, inst.loss).max_relative_error, 1e-4) << to_string(kind);
  }
}

TEST(Bins, GroupByHorizonWidth) {
  std::vector<PredictionError> errs(4);
  errs[0].delta = 0.005;
  errs[0].squared_error = 1.0;
  errs[1].delta = 0.015;
  errs[1].squared_error = 3.0;
  errs[2].delta = 0.065;
  errs[2].squared_error = 5.0;
  errs[3].delta = 0.02;
  errs[3].squared_error = 7.0;
  const auto bins = bin_errors(errs);
  ASSERT_EQ(bins.size(), 4u);
  EXPECT_EQ(bins[0].count, 2);
  EXPECT_DOUBLE_EQ(bins[0].mse, 2.0);
  EXPECT_EQ(bins[1].count, 1);
  EXPECT_EQ(bins[2].count, 0);
  EXPECT_EQ(bins[2].mse, 0.0);
  EXPECT_DOUBLE_EQ(bins[3].mse, 5.0);
  EXPECT_DOUBLE_EQ(bins[3].lower, 0.06);
}

TEST(TrainConfig, JsonRoundTripAndHash) {
  TrainConfig a = small_config(ModelKind::Tgnn4i);
  TrainConfig b;
  b.apply_json(a.to_json());
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.apply_json(R"({"weight": "w1", "latent_dim": 8})");
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(b.loss.weight.kind, WeightKind::Constant);
  b.workers = 7;
  TrainConfig c = b;
  c.workers = 1;
  EXPECT_EQ(b.hash(), c.hash());
}

TEST(TrainConfig, RejectsBadInput) {
  TrainConfig c;
  EXPECT_THROW(c.apply_json(R"({"learning_rat": 0.1})"), ConfigError);
  EXPECT_THROW(c.apply_json(R"({"model": "transformer"})"), ConfigError);
  EXPECT_THROW(c.apply_json(R"({"batch_size": [1]})"), ConfigError);
  EXPECT_THROW(c.apply_json("not json"), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_ANY_THROW(c.validate());
  c = TrainConfig{};
  c.learning_rate = -1.0;
  EXPECT_ANY_THROW(c.validate());
}

TEST(MetricsReport, JsonRoundTripIgnoresWallClockInEquality) {
  MetricsReport r;
  r.train_curve = {0.5, 0.25};
  r.val_curve = {0.6, 0.3};
  r.best_epoch = 1;
  r.test_metric = 1.0 / 3.0;
  r.test_bins = {{0.0, 0.02, 0.1, 4}, {0.02, 0.04, 0.0, 0}};
  r.wall_clock_seconds = 12.5;
  r.seed = 99;
  r.config_hash = "0123456789abcdef";
  const MetricsReport back = MetricsReport::from_json(r.to_json());
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.test_metric, r.test_metric);
  MetricsReport later = r;
  later.wall_clock_seconds = 99.0;
  EXPECT_EQ(later, r);
  later.test_metric += 1e-15;
  EXPECT_FALSE(later == r);
  EXPECT_NE(r.bins_csv().find("lower,upper,mse,count"), std::string::npos);
}

}  // namespace
}  // namespace tgnn4i
