// Copyright 2026 The hmevb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hme/baseline.hpp"

namespace hme {
namespace {

Dataset MakeDataset(const Eigen::MatrixXd& inputs,
                    const Eigen::MatrixXd& targets) {
  Dataset d;
  d.inputs = inputs;
  d.targets = targets;
  return d;
}

TEST(BaselineFeatures, PolynomialMonomials) {
  BaselineModel model;
  model.features.degree = 2;
  model.raw_input_dim = 2;
  Eigen::VectorXd x(2);
  x << 2.0, 3.0;
  Eigen::VectorXd f = BaselineFeatures(model, x);
  // 1, x1, x2, x1^2, x1 x2, x2^2
  ASSERT_EQ(f.size(), 6);
  EXPECT_DOUBLE_EQ(f(0), 1.0);
  EXPECT_DOUBLE_EQ(f(1), 2.0);
  EXPECT_DOUBLE_EQ(f(2), 3.0);
  EXPECT_DOUBLE_EQ(f(3), 4.0);
  EXPECT_DOUBLE_EQ(f(4), 6.0);
  EXPECT_DOUBLE_EQ(f(5), 9.0);
}

TEST(BaselineFeatures, CubicScalarCount) {
  BaselineModel model;
  model.features.degree = 3;
  model.raw_input_dim = 1;
  Eigen::VectorXd x(1);
  x << -2.0;
  Eigen::VectorXd f = BaselineFeatures(model, x);
  ASSERT_EQ(f.size(), 4);  // 1, x, x^2, x^3
  EXPECT_DOUBLE_EQ(f(3), -8.0);
}

TEST(FitBaseline, RecoversExactPolynomial) {
  // Noiseless quadratic data must be reproduced to machine precision with
  // ridge 0.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x(25, 1), t(25, 1);
  for (int i = 0; i < 25; ++i) {
    x(i, 0) = u(rng);
    t(i, 0) = 0.5 - 1.5 * x(i, 0) + 2.0 * x(i, 0) * x(i, 0);
  }
  Dataset d = MakeDataset(x, t);
  FeatureConfig cfg;
  cfg.degree = 2;
  BaselineModel model = fit_baseline(d, cfg, 0.0);
  for (int i = 0; i < 25; ++i) {
    EXPECT_NEAR(predict_baseline(model, x.row(i).transpose())(0), t(i, 0),
                1e-10);
  }
  EXPECT_NEAR(model.coefficients(0, 0), 0.5, 1e-9);
  EXPECT_NEAR(model.coefficients(1, 0), -1.5, 1e-9);
  EXPECT_NEAR(model.coefficients(2, 0), 2.0, 1e-9);
}

TEST(FitBaseline, MatchesNormalEquationsWithRidge) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(40, 1), t(40, 1);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = gauss(rng);
    t(i, 0) = std::sin(x(i, 0)) + 0.1 * gauss(rng);
  }
  Dataset d = MakeDataset(x, t);
  FeatureConfig cfg;
  cfg.degree = 3;
  const double ridge = 0.7;
  BaselineModel model = fit_baseline(d, cfg, ridge);
  // Independent solve of the same normal equations.
  Eigen::MatrixXd phi(40, 4);
  for (int i = 0; i < 40; ++i) {
    double v = x(i, 0);
    phi.row(i) << 1.0, v, v * v, v * v * v;
  }
  Eigen::MatrixXd reg =
      phi.transpose() * phi + ridge * Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd expected =
      reg.colPivHouseholderQr().solve(phi.transpose() * t);
  EXPECT_TRUE(model.coefficients.col(0).isApprox(expected, 1e-10));
}

TEST(FitBaseline, SingularWithoutRidgeThrows) {
  // Duplicate rows with more features than distinct points.
  Eigen::MatrixXd x(4, 1), t(4, 1);
  x << 1.0, 1.0, 1.0, 1.0;
  t << 2.0, 2.0, 2.0, 2.0;
  Dataset d = MakeDataset(x, t);
  FeatureConfig cfg;
  cfg.degree = 3;
  EXPECT_THROW(fit_baseline(d, cfg, 0.0), NumericalError);
  // With ridge it degrades gracefully.
  BaselineModel model = fit_baseline(d, cfg, 1e-6);
  EXPECT_NEAR(predict_baseline(model, x.row(0).transpose())(0), 2.0, 1e-3);
}

TEST(FitBaseline, ConfigValidation) {
  Eigen::MatrixXd x(3, 1), t(3, 1);
  x << 1.0, 2.0, 3.0;
  t << 1.0, 2.0, 3.0;
  Dataset d = MakeDataset(x, t);
  FeatureConfig both;
  both.degree = 2;
  both.rbf_centers = 4;
  EXPECT_THROW(fit_baseline(d, both, 0.1), std::invalid_argument);
  FeatureConfig neither;
  EXPECT_THROW(fit_baseline(d, neither, 0.1), std::invalid_argument);
  EXPECT_THROW(fit_baseline(d, FeatureConfig{2, 0}, -1.0),
               std::invalid_argument);
  Dataset empty;
  empty.inputs.resize(0, 1);
  empty.targets.resize(0, 1);
  EXPECT_THROW(fit_baseline(empty, FeatureConfig{2, 0}, 0.1),
               std::invalid_argument);
}

TEST(FitBaseline, RbfInterpolatesSmoothFunction) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(200, 1), t(200, 1);
  for (int i = 0; i < 200; ++i) {
    x(i, 0) = u(rng);
    t(i, 0) = std::sin(2.0 * std::numbers::pi * x(i, 0));
  }
  Dataset d = MakeDataset(x, t);
  FeatureConfig cfg;
  cfg.rbf_centers = 25;
  BaselineModel model = fit_baseline(d, cfg, 1e-8);
  double worst = 0.0;
  for (double probe = 0.05; probe <= 0.95; probe += 0.05) {
    Eigen::VectorXd xv(1);
    xv << probe;
    worst = std::max(worst,
                     std::abs(predict_baseline(model, xv)(0) -
                              std::sin(2.0 * std::numbers::pi * probe)));
  }
  EXPECT_LT(worst, 0.01);
}

TEST(FitBaseline, AveragesBranchesOnMultivaluedData) {
  // Inverse of the toy curve: at fold points a conditional-mean fit runs
  // between the branches instead of following either one.
  Dataset toy = gen_toy(400, 0.02, 9);
  Dataset flipped;
  flipped.inputs = toy.inputs.leftCols(1);
  flipped.targets = toy.targets;
  FeatureConfig cfg;
  cfg.rbf_centers = 30;
  BaselineModel model = fit_baseline(flipped, cfg, 1e-6);
  // x = 0.5 is reached from three target branches near 0.21, 0.5, 0.79;
  // the mean fit lands in the middle, far from the outer branches.
  Eigen::VectorXd xv(1);
  xv << 0.5;
  double pred = predict_baseline(model, xv)(0);
  EXPECT_GT(pred, 0.3);
  EXPECT_LT(pred, 0.7);
}

TEST(FitBaseline, UsesRawColumnsOfAugmentedData) {
  // Augmented datasets (trailing bias column) must give identical fits to
  // their raw counterparts.
  Dataset raw = MakeDataset(Eigen::MatrixXd::Random(30, 1),
                            Eigen::MatrixXd::Random(30, 1));
  Dataset aug = raw;
  aug.Augment();
  FeatureConfig cfg;
  cfg.degree = 2;
  BaselineModel a = fit_baseline(raw, cfg, 0.1);
  BaselineModel b = fit_baseline(aug, cfg, 0.1);
  EXPECT_TRUE(a.coefficients.isApprox(b.coefficients, 1e-12));
}

TEST(PredictBaseline, DimensionMismatchThrows) {
  Dataset d = MakeDataset(Eigen::MatrixXd::Random(10, 2),
                          Eigen::MatrixXd::Random(10, 1));
  FeatureConfig cfg;
  cfg.degree = 1;
  BaselineModel model = fit_baseline(d, cfg, 0.1);
  Eigen::VectorXd x(3);
  x.setZero();
  EXPECT_THROW(predict_baseline(model, x), std::invalid_argument);
}

}  // namespace
}  // namespace hme
