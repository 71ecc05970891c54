// hme/logistic_bound.hpp -- local convex lower bound on the logistic
// sigmoid used to restore conjugacy to the gate factors.
//
// Copyright 2026 The hmevb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HME_LOGISTIC_BOUND_HPP
#define HME_LOGISTIC_BOUND_HPP

#include <cmath>

#include <Eigen/Dense>

#include "hme/util.hpp"

namespace hme {

/// Per-gate, per-observation variational parameters of the sigmoid bound
/// (one nonnegative xi per gating node per data point).
struct XiParams {
  Eigen::MatrixXd values;  // N x num_gates, all entries >= 0
};

/// lambda(xi) = tanh(xi/2) / (4 xi), with the analytic limit 1/8 at 0.
/// Even, strictly positive, decreasing in |xi|.
inline double LambdaOfXi(double xi) {
  const double a = std::abs(xi);
  if (a < 1e-4) {
    return 0.125 - a * a / 96.0;  // Taylor branch around the 0/0 point
  }
  return std::tanh(0.5 * a) / (4.0 * a);
}

/// ln F(x, xi) where sigma(x) >= F(x, xi) =
/// sigma(xi) exp{(x - xi)/2 - lambda(xi)(x^2 - xi^2)},
/// with equality at x = +/- xi.
inline double LogBoundF(double x, double xi) {
  return LogSigmoid(xi) + 0.5 * (x - xi) -
         LambdaOfXi(xi) * (x * x - xi * xi);
}

/// xi^2 maximizing the bound for one observation:
/// x_n' <v v'> x_n with <v v'> the gate factor's second moment.
/// Negative quadratic forms (roundoff) are clamped to 0; `clamped`, when
/// given, is set accordingly.
inline double OptimalXiSquared(const Eigen::VectorXd& x,
                               const Eigen::MatrixXd& second_moment,
                               bool* clamped = nullptr) {
  const double q = x.dot(second_moment * x);
  if (q < 0.0) {
    if (clamped != nullptr) *clamped = true;
    return 0.0;
  }
  if (clamped != nullptr) *clamped = false;
  return q;
}

}  // namespace hme

#endif  // HME_LOGISTIC_BOUND_HPP
