// hme/predict.hpp -- predictions from a trained posterior: predictive
// mixing coefficients, most-probable-expert point predictions, the
// plug-in predictive density, and standardized MSE.
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

#ifndef HME_PREDICT_HPP
#define HME_PREDICT_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "hme/posterior.hpp"
#include "hme/tree.hpp"
#include "hme/util.hpp"

namespace hme {

/// How gate probabilities are evaluated at prediction time. The plug-in
/// form uses sigma(<v_i>' x); the probit variant approximates
/// E[sigma(v_i' x)] under the Gaussian gate factor.
enum class GatingMode { kPluginMean, kExpectedProbit };

enum class PredictMode { kMostProbableExpert, kMixtureMean };

struct Prediction {
  Eigen::VectorXd point;
  int expert_chosen = 0;
  Eigen::VectorXd mixing;
  Eigen::MatrixXd per_expert_means;  // M x target_dim
};

inline double PredictiveGateProb(const HmePosterior& post, int gate,
                                 const Eigen::VectorXd& x, GatingMode mode) {
  const double a = post.gates[gate].mean.dot(x);
  if (mode == GatingMode::kPluginMean) return Sigmoid(a);
  const double var = x.dot(post.gates[gate].covariance * x);
  const double kappa =
      1.0 / std::sqrt(1.0 + std::numbers::pi * var / 8.0);
  return Sigmoid(kappa * a);
}

/// pi_j(x) evaluated at the posterior gate means; sums to 1.
inline Eigen::VectorXd predictive_mixing(
    const Eigen::VectorXd& x, const HmePosterior& post,
    GatingMode mode = GatingMode::kPluginMean) {
  if (x.size() != post.input_dim()) {
    throw std::invalid_argument("predictive_mixing: input dimension mismatch");
  }
  const TreeTopology& tree = post.tree();
  Eigen::VectorXd pi(tree.num_experts());
  for (int j = 0; j < tree.num_experts(); ++j) {
    double prob = 1.0;
    for (const PathStep& step : tree.path_to_expert(j)) {
      const double gp = PredictiveGateProb(post, step.gate, x, mode);
      prob *= step.branch == Branch::kLeft ? gp : 1.0 - gp;
    }
    pi(j) = prob;
  }
  return pi;
}

/// Point prediction: the mean of the most probable expert (the default),
/// or the full mixture mean behind the flag (which reproduces the
/// conditional-averaging failure on multi-modal problems). Ties go to the
/// lowest expert index.
inline Prediction predict_point(const Eigen::VectorXd& x,
                                const HmePosterior& post,
                                PredictMode mode =
                                    PredictMode::kMostProbableExpert,
                                GatingMode gating = GatingMode::kPluginMean) {
  Prediction pred;
  pred.mixing = predictive_mixing(x, post, gating);
  pred.per_expert_means.resize(post.num_experts(), post.target_dim());
  for (int j = 0; j < post.num_experts(); ++j) {
    pred.per_expert_means.row(j) = (post.experts[j].mean * x).transpose();
  }
  pred.expert_chosen = 0;
  for (int j = 1; j < post.num_experts(); ++j) {
    if (pred.mixing(j) > pred.mixing(pred.expert_chosen)) {
      pred.expert_chosen = j;
    }
  }
  if (mode == PredictMode::kMostProbableExpert) {
    pred.point = pred.per_expert_means.row(pred.expert_chosen).transpose();
  } else {
    pred.point = pred.per_expert_means.transpose() * pred.mixing;
  }
  return pred;
}

/// Plug-in predictive log density
/// ln sum_j pi_j(x) N(t | <W_j> x, <tau_j>^{-1} I); an approximation to
/// the posterior predictive, not the full Student form.
inline double predictive_log_density(const Eigen::VectorXd& t,
                                     const Eigen::VectorXd& x,
                                     const HmePosterior& post,
                                     GatingMode gating =
                                         GatingMode::kPluginMean) {
  const Eigen::VectorXd pi = predictive_mixing(x, post, gating);
  const double d = static_cast<double>(t.size());
  std::vector<double> terms(post.num_experts());
  for (int j = 0; j < post.num_experts(); ++j) {
    const double tau = post.tau_mean(j);
    const double r2 = (t - post.experts[j].mean * x).squaredNorm();
    terms[j] = std::log(std::max(pi(j), 1e-300)) +
               0.5 * d * (std::log(tau) - std::log(2.0 * std::numbers::pi)) -
               0.5 * tau * r2;
  }
  return LogSumExp(terms);
}

/// Mean over points and target dimensions of squared error divided by the
/// per-dimension target variance (training-split convention).
inline double standardized_mse(const Eigen::MatrixXd& predictions,
                               const Eigen::MatrixXd& targets,
                               const Eigen::VectorXd& target_variances) {
  if (predictions.rows() != targets.rows() ||
      predictions.cols() != targets.cols()) {
    throw std::invalid_argument("standardized_mse: shape mismatch");
  }
  for (int c = 0; c < target_variances.size(); ++c) {
    if (target_variances(c) <= 0.0) {
      throw std::invalid_argument(
          "standardized_mse: target variance must be positive");
    }
  }
  double total = 0.0;
  for (int c = 0; c < targets.cols(); ++c) {
    total += (predictions.col(c) - targets.col(c)).squaredNorm() /
             target_variances(c);
  }
  return total / static_cast<double>(targets.rows() * targets.cols());
}

}  // namespace hme

#endif  // HME_PREDICT_HPP
