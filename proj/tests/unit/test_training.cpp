#include "escgnn/training.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace escgnn;

TEST(Training, AdamWFirstStep) {
  Schedule s;
  AdamW opt(2, s);
  Eigen::VectorXd p(2), g(2);
  p << 1.0, -2.0;
  g << 0.5, -4.0;
  opt.step(p, g, 0.1);
  // Bias-corrected moments equal g and g^2 after one step.
  for (int i = 0; i < 2; ++i) {
    const double start = i == 0 ? 1.0 : -2.0;
    const double grad = i == 0 ? 0.5 : -4.0;
    const double expected = start * (1 - 0.1 * 0.01) - 0.1 * grad / (std::abs(grad) + 1e-8);
    EXPECT_NEAR(p[i], expected, 1e-15);
  }
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Training, AdamWSecondStep) {
  Schedule s;
  s.weight_decay = 0.0;
  AdamW opt(1, s);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1), g(1);
  g << 1.0;
  opt.step(p, g, 1.0);
  const double p1 = -1.0 / (1.0 + 1e-8);
  g << 3.0;
  opt.step(p, g, 1.0);
  const double m = (0.9 * 0.1 * 1.0 + 0.1 * 3.0) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 1.0 + 0.001 * 9.0) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], p1 - m / (std::sqrt(v) + 1e-8), 1e-12);
}

TEST(Training, CvPlanPartitions) {
  const CvPlan plan = CvPlan::make(128, 3);
  EXPECT_EQ(plan.fold_of, CvPlan::make(128, 3).fold_of);
  std::vector<int> sizes(5, 0);
  for (int f : plan.fold_of) ++sizes.at(f);
  EXPECT_EQ(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
  std::set<int> tested;
  for (int s = 0; s < 5; ++s) {
    const auto split = plan.split(s);
    std::set<int> all;
    for (const auto* part : {&split.train, &split.val, &split.test}) all.insert(part->begin(), part->end());
    EXPECT_EQ(all.size(), 128u);
    for (int r : split.test) EXPECT_EQ(plan.fold_of[r], s);
    for (int r : split.val) EXPECT_EQ(plan.fold_of[r], (s + 1) % 5);
    tested.insert(split.test.begin(), split.test.end());
  }
  EXPECT_EQ(tested.size(), 128u);
}

TEST(Training, MetricsLine) {
  EXPECT_STREQ(kMetricsHeader, "fold,epoch,split,mse,lr,wall_seconds,is_best");
  const MetricsRow row{2, 17, SplitTag::Val, 0.25, 0.0005, 1.5, true};
  EXPECT_EQ(metrics_csv_line(row), "2,17,val,0.25,5e-04,1.500000,1");
}

TEST(Training, ScheduleValidation) {
  Schedule s;
  s.batch = 0;
  EXPECT_THROW(s.validate(), Error);
  s = Schedule{};
  s.lr0 = -1;
  EXPECT_THROW(s.validate(), Error);
}

namespace {

std::vector<DatasetRecord> small_dataset() {
  DiameterDatasetConfig c;
  c.num_graphs = 20;
  c.n_points = 24;
  c.seed = 12;
  return make_diameter_dataset(c);
}

}  // namespace

TEST(Training, TrainFoldContracts) {
  const auto records = small_dataset();
  const CvPlan plan = CvPlan::make(20, 1);
  CvOptions o;
  o.banks.mode = BankMode::Dyadic;
  FoldSetup setup = prepare_fold(records, TaskKind::Diameter, ModelMode::Equivariant, plan, 0, o);
  Schedule s;
  s.epochs_max = 30;
  s.burn_in = 5;
  s.patience = 5;
  s.check_every = 1;
  s.batch = 4;
  auto run = [&]() {
    EscGnn m(setup.model);
    initialize_model(m, 3, setup.train_examples, true);
    TrainResult r = train_fold(m, setup.train_examples, setup.val_examples, s, 5);
    return std::make_pair(std::move(r), m);
  };
  const auto [r, trained] = run();
  const auto [r2, trained2] = run();
  const Eigen::VectorXd& params = trained.params();
  const Eigen::VectorXd& params2 = trained2.params();
  EXPECT_EQ(params, params2);
  EXPECT_EQ(params, r.best_params);

  double best = INFINITY;
  int best_epoch = 0;
  for (const auto& row : r.metrics) {
    if (row.split == SplitTag::Val && row.mse < best) {
      best = row.mse;
      best_epoch = row.epoch;
    }
  }
  EXPECT_EQ(best, r.best_val_mse);
  EXPECT_EQ(best_epoch, r.best_epoch);
  EXPECT_LE(r.restarts, s.restarts_max);
  for (std::size_t e = 1; e < r.lr_history.size(); ++e) EXPECT_LE(r.lr_history[e], r.lr_history[e - 1]);
  EXPECT_EQ(r.lr_history.back(), s.lr0 / std::pow(2.0, r.restarts));

  EscGnn m(trained.config());
  m.params() = r.best_params;
  EXPECT_DOUBLE_EQ(evaluate_mse(m, setup.val_examples), r.best_val_mse);
}

TEST(Training, RotatedTestFoldHasSameInvariantPrediction) {
  const auto records = small_dataset();
  const CvPlan plan = CvPlan::make(20, 1);
  CvOptions o;
  o.banks.mode = BankMode::Dyadic;
  FoldSetup setup = prepare_fold(records, TaskKind::Diameter, ModelMode::Equivariant, plan, 2, o);
  EscGnn m(setup.model);
  initialize_model(m, 4, setup.train_examples, true);
  const double a = evaluate_mse(m, setup.test_examples);
  const double b = evaluate_mse(m, setup.test_rotated_examples);
  EXPECT_NEAR(a, b, 1e-9 * a);
}
