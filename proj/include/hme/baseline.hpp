// hme/baseline.hpp -- ridge least-squares conditional-mean baseline on a
// polynomial or radial-basis feature expansion. On multi-modal inverse
// problems it averages the branches, which is the failure mode the HME
// avoids.
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

#ifndef HME_BASELINE_HPP
#define HME_BASELINE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "hme/data.hpp"
#include "hme/util.hpp"

namespace hme {

/// Feature expansion: exactly one of `degree` (polynomial, total degree)
/// or `rbf_centers` (Gaussian bumps plus a constant) should be positive.
struct FeatureConfig {
  int degree = 0;
  int rbf_centers = 0;
};

struct BaselineModel {
  FeatureConfig features;
  Eigen::MatrixXd centers;      // rbf_centers x raw_input_dim
  double rbf_width = 1.0;
  Eigen::MatrixXd coefficients; // num_features x target_dim
  int raw_input_dim = 0;
};

/// Feature row for one raw (unaugmented) input vector.
inline Eigen::VectorXd BaselineFeatures(const BaselineModel& model,
                                        const Eigen::VectorXd& x_raw) {
  if (model.features.degree > 0) {
    // Monomials of total degree <= degree, graded order, non-decreasing
    // variable indices within a monomial.
    std::vector<double> feats{1.0};
    std::vector<std::pair<double, int>> frontier{{1.0, 0}};  // (value, min var)
    for (int d = 1; d <= model.features.degree; ++d) {
      std::vector<std::pair<double, int>> next;
      for (const auto& [value, start] : frontier) {
        for (int v = start; v < x_raw.size(); ++v) {
          next.emplace_back(value * x_raw(v), v);
        }
      }
      for (const auto& [value, start] : next) feats.push_back(value);
      frontier = std::move(next);
    }
    return Eigen::Map<Eigen::VectorXd>(feats.data(), feats.size());
  }
  Eigen::VectorXd feats(model.centers.rows() + 1);
  feats(0) = 1.0;
  const double inv = 1.0 / (2.0 * model.rbf_width * model.rbf_width);
  for (int k = 0; k < model.centers.rows(); ++k) {
    feats(k + 1) = std::exp(
        -(x_raw - model.centers.row(k).transpose()).squaredNorm() * inv);
  }
  return feats;
}

/// Ridge least squares on the expanded features; closed form and
/// deterministic. RBF centers are training points at evenly spaced ranks
/// of the first input column; the width is the median nearest-center gap
/// times 2.
inline BaselineModel fit_baseline(const Dataset& data,
                                  const FeatureConfig& features,
                                  double ridge) {
  if (data.num_points() == 0) {
    throw std::invalid_argument("fit_baseline: empty dataset");
  }
  if ((features.degree > 0) == (features.rbf_centers > 0)) {
    throw std::invalid_argument(
        "fit_baseline: set exactly one of degree or rbf_centers");
  }
  if (ridge < 0.0) throw std::invalid_argument("fit_baseline: ridge < 0");
  BaselineModel model;
  model.features = features;
  model.raw_input_dim = data.raw_input_dim();
  const Eigen::MatrixXd raw =
      data.inputs.leftCols(model.raw_input_dim);
  if (features.rbf_centers > 0) {
    const int k = std::min(features.rbf_centers, data.num_points());
    std::vector<int> order(data.num_points());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      for (int c = 0; c < raw.cols(); ++c) {
        if (raw(a, c) != raw(b, c)) return raw(a, c) < raw(b, c);
      }
      return a < b;
    });
    model.centers.resize(k, raw.cols());
    for (int i = 0; i < k; ++i) {
      const int rank = static_cast<int>(
          (static_cast<long long>(i) * (data.num_points() - 1)) /
          std::max(1, k - 1));
      model.centers.row(i) = raw.row(order[rank]);
    }
    std::vector<double> gaps;
    for (int i = 0; i < k; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        nearest = std::min(
            nearest, (model.centers.row(i) - model.centers.row(j)).norm());
      }
      if (std::isfinite(nearest) && nearest > 0.0) gaps.push_back(nearest);
    }
    double width = 1.0;
    if (!gaps.empty()) {
      std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2,
                       gaps.end());
      width = 2.0 * gaps[gaps.size() / 2];
    }
    model.rbf_width = std::max(width, 1e-8);
  }
  // Design matrix.
  Eigen::MatrixXd phi(data.num_points(),
                      BaselineFeatures(model, raw.row(0).transpose()).size());
  for (int n = 0; n < data.num_points(); ++n) {
    phi.row(n) = BaselineFeatures(model, raw.row(n).transpose()).transpose();
  }
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi);
    if (qr.rank() < phi.cols()) {
      throw NumericalError(
          "fit_baseline: singular normal equations; use ridge > 0");
    }
    model.coefficients = qr.solve(data.targets);
  } else {
    const Eigen::MatrixXd gram =
        phi.transpose() * phi +
        ridge * Eigen::MatrixXd::Identity(phi.cols(), phi.cols());
    model.coefficients = gram.ldlt().solve(phi.transpose() * data.targets);
  }
  return model;
}

/// Linear map of the expanded features; pure.
inline Eigen::VectorXd predict_baseline(const BaselineModel& model,
                                        const Eigen::VectorXd& x_raw) {
  if (x_raw.size() != model.raw_input_dim) {
    throw std::invalid_argument("predict_baseline: input dimension mismatch");
  }
  return model.coefficients.transpose() * BaselineFeatures(model, x_raw);
}

}  // namespace hme

#endif  // HME_BASELINE_HPP
