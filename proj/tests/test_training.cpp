#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace dmn;
using namespace dmn::testing;

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

TEST(Objective, ZeroHeadCountsEveryMargin) {
  const Eigen::MatrixXd maps = gaussian_matrix(7, 3, 1);
  const LabeledDataset data = toy_data(7, 3, 2, 1);
  const Eigen::Vector2d C(0.5, 2.0);
  const ObjectiveTerms t = objective_from_maps(maps, data.labels, Eigen::MatrixXd::Zero(2, 3), C);
  EXPECT_DOUBLE_EQ(t.total, (0.5 + 2.0) * 7);
  EXPECT_DOUBLE_EQ(t.regularizer, 0.0);
}

TEST(Objective, SatisfiedMarginsLeaveTheRegularizer) {
  Eigen::MatrixXd maps(2, 1);
  maps << 2.0, -3.0;
  Eigen::MatrixXi Y(2, 1);
  Y << 1, -1;
  Eigen::MatrixXd W(1, 1);
  W << 0.7;
  const ObjectiveTerms t = objective_from_maps(maps, Y, W, Eigen::VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(t.hinge, 0.0);
  EXPECT_DOUBLE_EQ(t.total, 0.5 * 0.49);
}

TEST(Objective, HandEvaluation) {
  Eigen::MatrixXd maps(2, 2);
  maps << 1.0, 0.0, 0.0, 2.0;
  Eigen::MatrixXi Y(2, 1);
  Y << 1, 1;
  Eigen::MatrixXd W(1, 2);
  W << 0.5, 0.25;
  // f = (0.5, 0.5): slacks 0.5 each, C = 3 -> 3 * 0.5; reg = 0.5 * 0.3125
  const ObjectiveTerms t = objective_from_maps(maps, Y, W, Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_DOUBLE_EQ(t.total, 1.5 + 0.15625);
  EXPECT_DOUBLE_EQ(t.total, objective_oracle(maps, Y, W, Eigen::VectorXd::Constant(1, 3.0)));
}

TEST(Objective, ShapeErrors) {
  const LabeledDataset data = toy_data(5, 3, 2, 1);
  EXPECT_THROW(objective_from_maps(gaussian_matrix(4, 3, 1), data.labels, Eigen::MatrixXd::Zero(2, 3),
                                   Eigen::VectorXd::Ones(2)),
               InputError);
  EXPECT_THROW(objective_from_maps(gaussian_matrix(5, 3, 1), data.labels, Eigen::MatrixXd::Zero(2, 2),
                                   Eigen::VectorXd::Ones(2)),
               InputError);
}

TEST(TradeOffs, BroadcastAndValidation) {
  EXPECT_TRUE(resolve_trade_offs({2.0}, 3).isApprox(Eigen::Vector3d::Constant(2.0)));
  EXPECT_TRUE(resolve_trade_offs({1.0, 2.0, 3.0}, 3) == Eigen::Vector3d(1.0, 2.0, 3.0));
  EXPECT_THROW(resolve_trade_offs({1.0, 2.0}, 3), ConfigError);
  EXPECT_THROW(resolve_trade_offs({}, 3), ConfigError);
  EXPECT_THROW(resolve_trade_offs({-1.0}, 3), ConfigError);
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

TEST(Svm, SymmetricPairClosedForm) {
  Eigen::MatrixXd Phi(2, 1);
  Phi << 1.0, -1.0;
  const Eigen::Vector2d y(1.0, -1.0);
  for (double C : {0.1, 1.0, 7.5}) EXPECT_NEAR(solve_squared_hinge(Phi, y, C)(0), 4 * C / (1 + 4 * C), 1e-6);
}

TEST(Svm, ZeroTradeOffGivesZero) {
  const LabeledDataset data = toy_data(10, 4, 2, 3);
  const Eigen::MatrixXd W = svm_solve(data.features, data.labels, Eigen::VectorXd::Zero(2));
  EXPECT_TRUE((W.array() == 0.0).all());
}

TEST(Svm, MatchesFirstOrderOracleAndGradientTolerance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd Phi = gaussian_matrix(30, 6, seed);
    Eigen::VectorXd y(30);
    const Eigen::VectorXd wt = gaussian_matrix(6, 1, seed + 100).col(0);
    for (Eigen::Index i = 0; i < 30; ++i) y(i) = Phi.row(i).dot(wt) + 0.3 * (i % 3 - 1) > 0 ? 1.0 : -1.0;
    const double C = 0.5;
    const Eigen::VectorXd w = solve_squared_hinge(Phi, y, C);
    const Eigen::VectorXd ref = gd_squared_hinge(Phi, y, C, 20000);
    EXPECT_NEAR(squared_hinge_value(Phi, y, C, w), squared_hinge_value(Phi, y, C, ref), 1e-4);
    // never worse than the origin
    EXPECT_LE(squared_hinge_value(Phi, y, C, w), squared_hinge_value(Phi, y, C, Eigen::VectorXd::Zero(6)));
    // stopping rule
    Eigen::VectorXd g = w;
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(6);
    for (Eigen::Index i = 0; i < 30; ++i) {
      g -= 2 * C * y(i) * std::max(0.0, 1 - y(i) * Phi.row(i).dot(w)) * Phi.row(i).transpose();
      g0 -= 2 * C * y(i) * Phi.row(i).transpose();
    }
    EXPECT_LE(g.cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, g0.cwiseAbs().maxCoeff()));
  }
}

TEST(Svm, WarmStartReachesSameOptimum) {
  const LabeledDataset data = toy_data(40, 5, 3, 8);
  const Eigen::VectorXd C = Eigen::Vector3d(0.3, 1.0, 3.0);
  const Eigen::MatrixXd cold = svm_solve(data.features, data.labels, C);
  const Eigen::MatrixXd start = gaussian_matrix(3, 5, 2);
  const Eigen::MatrixXd warm = svm_solve(data.features, data.labels, C, &start);
  EXPECT_NEAR(objective_from_maps(data.features, data.labels, cold, C).total,
              objective_from_maps(data.features, data.labels, warm, C).total, 1e-8);
}

TEST(Svm, RejectsNonFiniteFeatures) {
  LabeledDataset data = toy_data(6, 2, 1, 1);
  data.features(0, 0) = NAN;
  EXPECT_THROW(svm_solve(data.features, data.labels, Eigen::VectorXd::Ones(1)), InputError);
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

TEST(GradOutput, HandValue) {
  Eigen::MatrixXd W(1, 2), maps(1, 2);
  W << 1.0, 0.0;
  maps << 0.5, 0.0;
  Eigen::MatrixXi Y(1, 1);
  Y << 1;
  const Eigen::MatrixXd g = grad_output(W, maps, Y, Eigen::VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(g(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
}

TEST(GradOutput, InactiveHingeAndLinearityInC) {
  const LabeledDataset data = toy_data(12, 4, 2, 5);
  const Eigen::MatrixXd maps = gaussian_matrix(12, 3, 2);
  const Eigen::MatrixXd W = gaussian_matrix(2, 3, 3);
  // scale W until every margin is satisfied
  Eigen::MatrixXd sat = maps;
  const Eigen::MatrixXd F = maps * W.transpose();
  Eigen::MatrixXi Y(12, 2);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index k = 0; k < 2; ++k) Y(i, k) = F(i, k) > 0 ? 1 : -1;
  const double scale = 1.0 / F.cwiseAbs().minCoeff() + 1.0;
  EXPECT_TRUE((grad_output(scale * W, maps, Y, Eigen::Vector2d(1, 1)).array() == 0.0).all());

  Eigen::MatrixXi Y1 = data.labels;
  Y1.col(1).setConstant(-1);
  Y1(0, 1) = 1;
  Eigen::MatrixXd W1 = W;
  W1.row(0).setZero();  // class 0 contributes nothing
  const Eigen::MatrixXd g1 = grad_output(W1, maps, Y1, Eigen::Vector2d(1.0, 1.0));
  const Eigen::MatrixXd g2 = grad_output(W1, maps, Y1, Eigen::Vector2d(1.0, 2.0));
  EXPECT_LT((g2 - 2.0 * g1).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GradOutput, MatchesFiniteDifferenceOfObjective) {
  const LabeledDataset data = toy_data(6, 3, 2, 4);
  const Eigen::MatrixXd maps = gaussian_matrix(6, 4, 1);
  const Eigen::MatrixXd W = gaussian_matrix(2, 4, 2);
  const Eigen::Vector2d C(0.7, 1.3);
  const Eigen::MatrixXd g = grad_output(W, maps, data.labels, C);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      Eigen::MatrixXd up = maps, down = maps;
      up(i, j) += 1e-6;
      down(i, j) -= 1e-6;
      const double fd = (objective_oracle(up, data.labels, W, C) - objective_oracle(down, data.labels, W, C)) / 2e-6;
      EXPECT_NEAR(g(i, j), fd, 1e-6);
    }
}

namespace {

ClassifierHead fitted_head(const DmnModel& m, const LabeledDataset& data, double C) {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(data.classes(), C);
  return {svm_solve(dmn_map(m, data.features), data.labels, c), c};
}

// Every analytic coordinate against an independent central difference.
void expect_backprop_matches_fd(const DmnModel& model, const ClassifierHead& head, const LabeledDataset& data) {
  const ForwardTrace trace = dmn_forward_batch(model, data.features);
  const GradientBundle g =
      backprop(model, trace, grad_output(head.normals, trace.output(), data.labels, head.trade_offs));
  const double h = 1e-5;
  const double E = std::abs(objective_oracle(trace.output(), data.labels, head.normals, head.trade_offs));
  const double floor = std::max(1e-6, 1e-6 * E);
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    for (std::size_t p = 0; p < model.layers[l].size(); ++p) {
      const DmnUnit& u = model.layers[l][p];
      const UnitGradient& ug = g.layers[l][p];
      for (Eigen::Index i = 0; i < u.projection.rows(); ++i)
        for (Eigen::Index j = 0; j < u.projection.cols(); ++j) {
          const double n = central_difference(model, head, data,
                                              [&](DmnModel& m) -> double& { return m.layers[l][p].projection(i, j); }, h);
          EXPECT_LE(relative_gap(ug.projection(i, j), n, floor), 1e-4) << "U l" << l + 1 << " p" << p + 1;
        }
      if (l == 0) continue;
      for (Eigen::Index i = 0; i < u.anchors.rows(); ++i)
        for (Eigen::Index j = 0; j < u.anchors.cols(); ++j) {
          const double n = central_difference(model, head, data,
                                              [&](DmnModel& m) -> double& { return m.layers[l][p].anchors(i, j); }, h);
          EXPECT_LE(relative_gap(ug.anchors(i, j), n, floor), 1e-4) << "A l" << l + 1 << " p" << p + 1;
        }
      for (Eigen::Index q = 0; q < u.weights.size(); ++q) {
        if (u.weights(q) < 1e-5) continue;
        const double n = central_difference(model, head, data,
                                            [&](DmnModel& m) -> double& { return m.layers[l][p].weights(q); }, h);
        EXPECT_LE(relative_gap(ug.weights(q), n, floor), 1e-4) << "w l" << l + 1 << " p" << p + 1;
      }
    }
}

}  // namespace

TEST(Backprop, TwoLayerToyMatchesFiniteDifferences) {
  const BuildResult b = toy_two_layer(5, 3, 11);
  const LabeledDataset data = toy_data(8, 3, 2, 12);
  expect_backprop_matches_fd(b.model, fitted_head(b.model, data, 1.0), data);
}

TEST(Backprop, ThreeLayerToyMatchesFiniteDifferences) {
  const BuildResult b = toy_three_layer(5, 3, 13);
  const LabeledDataset data = toy_data(8, 3, 2, 14);
  expect_backprop_matches_fd(b.model, fitted_head(b.model, data, 0.5), data);
}

TEST(Backprop, PerturbedModelStillMatches) {
  // away from the build point U and A no longer satisfy the build identities
  BuildResult b = toy_two_layer(5, 3, 21, Activation::exp);
  for (auto& layer : b.model.layers)
    for (auto& u : layer) {
      u.projection += gaussian_matrix(u.projection.rows(), u.projection.cols(), 5, 0.05);
      u.anchors += gaussian_matrix(u.anchors.rows(), u.anchors.cols(), 6, 0.05);
    }
  const LabeledDataset data = toy_data(8, 3, 2, 22);
  expect_backprop_matches_fd(b.model, fitted_head(b.model, data, 2.0), data);
}

TEST(Backprop, ZeroOutputGradientGivesZeroBundle) {
  const BuildResult b = toy_three_layer(5, 3, 1);
  const LabeledDataset data = toy_data(6, 3, 2, 1);
  const ForwardTrace trace = dmn_forward_batch(b.model, data.features);
  const GradientBundle g = backprop(b.model, trace, Eigen::MatrixXd::Zero(6, b.model.output_dim()));
  EXPECT_EQ(g.max_abs(), 0.0);
  EXPECT_TRUE(g.all_finite());
}

TEST(Backprop, DeadPathsHaveZeroGradient) {
  BuildResult b = toy_two_layer(5, 3, 2);
  const LabeledDataset data = toy_data(8, 3, 2, 3);
  // zero mixing weight: that input unit receives nothing and its w
  // derivative is taken as 0
  b.model.layers[1][0].weights(1) = 0.0;
  const ClassifierHead head = fitted_head(b.model, data, 1.0);
  const ForwardTrace trace = dmn_forward_batch(b.model, data.features);
  const GradientBundle g =
      backprop(b.model, trace, grad_output(head.normals, trace.output(), data.labels, head.trade_offs));
  EXPECT_EQ(g.layers[0][1].projection.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.layers[1][0].weights(1), 0.0);
  EXPECT_TRUE(g.all_finite());
  // a zero projection column kills the anchor gradient for exactly the
  // pre-activation rows it feeds: dA = dZ^T C with dZ = (dPhi U^T) .* g'
  DmnModel m = b.model;
  m.layers[1][0].projection.row(2).setZero();
  const ForwardTrace t2 = dmn_forward_batch(m, data.features);
  const GradientBundle g2 = backprop(m, t2, grad_output(head.normals, t2.output(), data.labels, head.trade_offs));
  EXPECT_EQ(g2.layers[1][0].anchors.row(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backprop, ShapeChecks) {
  const BuildResult b = toy_two_layer(5, 3, 2);
  const LabeledDataset data = toy_data(4, 3, 1, 3);
  const ForwardTrace trace = dmn_forward_batch(b.model, data.features);
  EXPECT_THROW(backprop(b.model, trace, Eigen::MatrixXd::Zero(3, b.model.output_dim())), InputError);
  const GradientBundle z = GradientBundle::zeros_like(b.model);
  EXPECT_EQ(z.layers[1][0].anchors.rows(), b.model.layers[1][0].anchors.rows());
  EXPECT_EQ(z.layers[1][0].weights.size(), 3);
}

TEST(GradCheck, LibraryCheckAgreesOnToy) {
  const BuildResult b = toy_two_layer(5, 3, 11);
  const LabeledDataset data = toy_data(8, 3, 2, 12);
  const GradCheckReport rep = gradient_check(b.model, fitted_head(b.model, data, 1.0), data);
  EXPECT_GT(rep.checked(), 50u);
  EXPECT_LE(rep.max_rel_error(), 1e-4);
  GradCheckOptions opt;
  opt.max_per_param = 2;
  EXPECT_LT(gradient_check(b.model, fitted_head(b.model, data, 1.0), data, opt).entries.size(), rep.entries.size());
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {
struct TrainFixture {
  BuildResult built;
  LabeledDataset data;
  ClassifierHead head;
};

TrainFixture small_setup(std::uint64_t seed, Eigen::Index K = 3) {
  LabeledDataset data = toy_data(60, 8, K, seed);
  std::vector<Eigen::Index> rows(20);
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  const AnchorSet S = AnchorSet::from_samples(data.subset(rows).features);
  BuildResult b = build_dmn(default_architecture(S.samples, seed), S);
  ClassifierHead head = fitted_head(b.model, data, 1.0);
  return {std::move(b), std::move(data), std::move(head)};
}
}  // namespace

TEST(Train, ZeroLearningRateFreezesTheModel) {
  const TrainFixture s = small_setup(1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_iters = 4;
  cfg.convergence_window = 100;
  const TrainResult r = train(s.built.model, s.head, s.data, cfg);
  ASSERT_EQ(r.log.size(), 4u);
  const double E = objective(s.built.model, ClassifierHead{svm_solve(dmn_map(s.built.model, s.data.features),
                                                                     s.data.labels, s.head.trade_offs),
                                                           s.head.trade_offs},
                             s.data)
                       .total;
  for (const auto& row : r.log) EXPECT_NEAR(row.objective.total, E, 1e-9 * E);
  for (std::size_t l = 0; l < r.model.layers.size(); ++l)
    for (std::size_t p = 0; p < r.model.layers[l].size(); ++p) {
      EXPECT_TRUE(r.model.layers[l][p].projection == s.built.model.layers[l][p].projection);
      EXPECT_TRUE(r.model.layers[l][p].anchors == s.built.model.layers[l][p].anchors);
    }
}

TEST(Train, OneIterationIsOneSolveAndOneStep) {
  const TrainFixture s = small_setup(2);
  TrainConfig cfg;
  cfg.max_iters = 1;
  const TrainResult r = train(s.built.model, s.head, s.data, cfg);
  EXPECT_EQ(r.svm_solves, 1);
  EXPECT_EQ(r.gradient_steps, 1);
  EXPECT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.status, TrainStatus::max_iters);
}

TEST(Train, DeskScaleObjectiveDecreases) {
  const TrainFixture s = small_setup(3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_iters = 60;
  cfg.halve_on_increase = true;
  const TrainResult r = train(s.built.model, s.head, s.data, cfg);
  ASSERT_FALSE(r.log.empty());
  EXPECT_LE(r.final_objective, r.log.front().objective.total);
  // the guard only accepts non-increasing steps
  for (std::size_t i = 1; i < r.log.size(); ++i)
    EXPECT_LE(r.log[i].objective.total, r.log[i - 1].objective.total * (1 + 1e-12));
}

TEST(Train, WeightsStayNonnegative) {
  const TrainFixture s = small_setup(4);
  TrainConfig cfg;
  cfg.learning_rate = 5.0;  // large enough to push weights onto the boundary
  cfg.max_iters = 5;
  const TrainResult r = train(s.built.model, s.head, s.data, cfg);
  for (std::size_t l = 1; l < r.model.layers.size(); ++l)
    for (const auto& u : r.model.layers[l]) EXPECT_TRUE((u.weights.array() >= 0.0).all());
}

TEST(Train, FixedSeedIsDeterministic) {
  const TrainFixture s = small_setup(5);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_iters = 8;
  cfg.seed = 9;
  const TrainResult a = train(s.built.model, ClassifierHead{}, s.data, cfg);
  const TrainResult b = train(s.built.model, ClassifierHead{}, s.data, cfg);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].objective.total, b.log[i].objective.total);
    EXPECT_EQ(a.log[i].objective.hinge, b.log[i].objective.hinge);
  }
  EXPECT_TRUE(a.head.normals == b.head.normals);
}

TEST(Train, ConvergenceStopsEarly) {
  const TrainFixture s = small_setup(6);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_iters = 100;
  cfg.convergence_window = 3;
  const TrainResult r = train(s.built.model, s.head, s.data, cfg);
  EXPECT_EQ(r.status, TrainStatus::converged);
  EXPECT_EQ(r.log.size(), 4u);
}

TEST(Train, NonFiniteObjectiveReturnsLastGoodState) {
  const TrainFixture s = small_setup(7);
  TrainConfig cfg;
  cfg.learning_rate = 1e12;
  cfg.max_iters = 10;
  const TrainResult r = train(s.built.model, s.head, s.data, cfg);
  EXPECT_EQ(r.status, TrainStatus::numeric_failure);
  EXPECT_TRUE(dmn_map(r.model, s.data.features).allFinite());
  EXPECT_TRUE(r.head.normals.allFinite());
}

TEST(Train, ConfigValidation) {
  const TrainFixture s = small_setup(8);
  TrainConfig cfg;
  cfg.max_iters = 0;
  EXPECT_THROW(train(s.built.model, s.head, s.data, cfg), ConfigError);
  cfg = {};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(train(s.built.model, s.head, s.data, cfg), ConfigError);
  cfg = {};
  cfg.trade_offs = {1.0, 2.0};
  EXPECT_THROW(train(s.built.model, s.head, s.data, cfg), ConfigError);
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

TEST(CrossValidate, SingleGridValue) {
  const TrainFixture s = small_setup(9);
  const Eigen::VectorXd C = cross_validate_C(s.data, s.built.model, 3, {0.7});
  EXPECT_TRUE((C.array() == 0.7).all());
}

TEST(CrossValidate, SeparableDataPicksSmallestPerfectC) {
  // 1-D features, label = sign(x); identity-linear model passes x through
  Eigen::MatrixXd X(12, 1);
  LabeledDataset data;
  data.labels.resize(12, 1);
  for (int i = 0; i < 12; ++i) {
    X(i, 0) = (i % 2 ? 1.0 : -1.0) * (1.0 + 0.1 * i);
    data.labels(i, 0) = i % 2 ? 1 : -1;
    data.ids.push_back(std::to_string(i));
  }
  data.features = X;
  DknArchitecture arch;
  arch.input_kernels = {KernelSpec::linear()};
  arch.layers.push_back({Activation::identity, Eigen::MatrixXd::Ones(1, 1)});
  const BuildResult b = build_dmn(arch, AnchorSet::from_samples(X));
  const std::vector<double> grid{100.0, 1e-3, 1.0, 10.0};
  const Eigen::VectorXd C = cross_validate_C(data, b.model, 3, grid);
  // exhaustive oracle: the smallest grid value whose every fold scores F = 1
  double expect = -1.0;
  for (double c : {1e-3, 1.0, 10.0, 100.0}) {
    bool perfect = true;
    for (int f = 0; f < 3; ++f) {
      std::vector<Eigen::Index> tr, va;
      for (Eigen::Index i = 0; i < 12; ++i) (i % 3 == f ? va : tr).push_back(i);
      const LabeledDataset t = data.subset(tr);
      const Eigen::VectorXd w = solve_squared_hinge(dmn_map(b.model, t.features), t.labels.col(0).cast<double>(), c);
      for (auto i : va) perfect = perfect && ((dmn_map(b.model, X.row(i)).row(0).dot(w) > 0) == (data.labels(i, 0) > 0));
    }
    if (perfect) {
      expect = c;
      break;
    }
  }
  EXPECT_EQ(C(0), expect);
}

TEST(CrossValidate, MinimalFoldsAndErrors) {
  LabeledDataset data;
  data.features = random_histograms(4, 3, 1);
  data.labels.resize(4, 1);
  data.labels << 1, -1, 1, -1;
  data.ids = {"a", "b", "c", "d"};
  const BuildResult b = toy_two_layer(4, 3, 2);
  EXPECT_NO_THROW(cross_validate_C(data, b.model, 2, {0.1, 1.0}));
  EXPECT_THROW(cross_validate_C(data, b.model, 2, {}), ConfigError);
  EXPECT_THROW(cross_validate_C(data, b.model, 1, {1.0}), ConfigError);
  EXPECT_THROW(cross_validate_C(data, b.model, 2, {0.0}), ConfigError);
}
