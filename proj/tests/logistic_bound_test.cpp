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

#include "hme/logistic_bound.hpp"
#include "hme/util.hpp"

namespace hme {
namespace {

TEST(LambdaOfXi, KnownValues) {
  // lambda(xi) = tanh(xi/2) / (4 xi)
  EXPECT_NEAR(LambdaOfXi(1.0), std::tanh(0.5) / 4.0, 1e-15);
  EXPECT_NEAR(LambdaOfXi(1.0), 0.11552928931500244, 1e-15);
  EXPECT_NEAR(LambdaOfXi(2.0), std::tanh(1.0) / 8.0, 1e-15);
  // Limit at zero is 1/8.
  EXPECT_DOUBLE_EQ(LambdaOfXi(0.0), 0.125);
}

TEST(LambdaOfXi, EvenFunction) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    double xi = u(rng);
    EXPECT_DOUBLE_EQ(LambdaOfXi(xi), LambdaOfXi(-xi));
  }
}

TEST(LambdaOfXi, SeriesBranchMatchesDirectFormula) {
  // The small-|xi| series branch must agree with the analytic expression to
  // near machine precision where the two forms meet, and be monotone
  // decreasing in |xi| near zero.
  for (double xi : {1e-7, 1e-6, 1e-5, 9.9e-5, 1.01e-4, 1e-3}) {
    double direct = std::tanh(xi / 2.0) / (4.0 * xi);
    EXPECT_NEAR(LambdaOfXi(xi), direct, 1e-15) << "xi=" << xi;
  }
  EXPECT_LT(LambdaOfXi(1e-3), 0.125);
  EXPECT_GT(LambdaOfXi(1e-5), LambdaOfXi(1e-3));
}

TEST(LogBoundF, DominatedBySigmoidEverywhere) {
  // ln F(x, xi) <= ln sigma(x) for 1e5 random pairs, margin 1e-12.
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ux(-20.0, 20.0);
  std::uniform_real_distribution<double> uxi(0.0, 20.0);
  int checked = 0;
  for (int i = 0; i < 100000; ++i) {
    double x = ux(rng);
    double xi = uxi(rng);
    double lhs = LogBoundF(x, xi);
    double rhs = LogSigmoid(x);
    ASSERT_LE(lhs, rhs + 1e-12) << "x=" << x << " xi=" << xi;
    ++checked;
  }
  EXPECT_EQ(checked, 100000);
}

TEST(LogBoundF, TightAtPlusMinusXi) {
  for (double xi : {1e-6, 0.1, 1.0, 3.0, 10.0}) {
    EXPECT_NEAR(LogBoundF(xi, xi), LogSigmoid(xi), 1e-12) << "xi=" << xi;
    EXPECT_NEAR(LogBoundF(-xi, xi), LogSigmoid(-xi), 1e-12) << "xi=" << xi;
  }
}

TEST(LogBoundF, HandValue) {
  // F(0, 1) = sigma(1) * exp(-1/2 + lambda(1) * 1)
  double expected = LogSigmoid(1.0) - 0.5 + std::tanh(0.5) / 4.0;
  EXPECT_NEAR(LogBoundF(0.0, 1.0), expected, 1e-15);
}

TEST(OptimalXiSquared, MatchesQuadraticForm) {
  // xi^2 = x' <vv'> x for <vv'> = diag(4, 1), x = (1, 2): 4*1 + 1*4 = 8.
  Eigen::Vector2d x(1.0, 2.0);
  Eigen::Matrix2d second = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  bool clamped = false;
  EXPECT_NEAR(OptimalXiSquared(x, second, &clamped), 8.0, 1e-12);
  EXPECT_FALSE(clamped);
}

TEST(OptimalXiSquared, ClampsNegativeRoundoff) {
  // A symmetric matrix that is numerically indefinite at roundoff scale must
  // be clamped to zero rather than producing NaN downstream.
  Eigen::Vector2d x(1.0, -1.0);
  Eigen::Matrix2d second;
  second << 1.0, 1.0 + 1e-16, 1.0 + 1e-16, 1.0;
  bool clamped = false;
  double v = OptimalXiSquared(x, second, &clamped);
  EXPECT_GE(v, 0.0);
}

TEST(OptimalXiSquared, OptimalityOnGrid) {
  // For a 1-D Gaussian q(v) with mean m and variance s2, the xi maximizing
  // E_q[ln F(v*x, xi)] is xi^2 = x^2 (m^2 + s2). Check against a grid of
  // alternatives: the expected bound at the optimum beats +/-10% detunings.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> upos(0.1, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    double x = u(rng);
    double m = u(rng);
    double s2 = upos(rng);
    Eigen::VectorXd xv(1), mean(1);
    xv << x;
    mean << m;
    Eigen::MatrixXd second(1, 1);
    second << m * m + s2;
    double xi2 = OptimalXiSquared(xv, second, nullptr);
    double xi = std::sqrt(xi2);
    // E[ln F(vx, xi)] = ln sigma(xi) + (mx - xi)/2 - lambda(xi)(E[(vx)^2]-xi^2)
    auto expected_bound = [&](double z) {
      return LogSigmoid(z) + (m * x - z) / 2.0 -
             LambdaOfXi(z) * (x * x * (m * m + s2) - z * z);
    };
    double best = expected_bound(xi);
    if (xi > 1e-8) {
      EXPECT_LE(expected_bound(0.9 * xi), best + 1e-12);
      EXPECT_LE(expected_bound(1.1 * xi), best + 1e-12);
    }
  }
}

}  // namespace
}  // namespace hme
