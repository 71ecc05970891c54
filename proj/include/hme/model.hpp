// hme/model.hpp -- expert and gate conditionals, priors, the marginal
// conditional mixture, the likelihood, and a generative sampler.
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

#ifndef HME_MODEL_HPP
#define HME_MODEL_HPP

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hme/data.hpp"
#include "hme/tree.hpp"
#include "hme/util.hpp"

namespace hme {

/// Linear-Gaussian expert: t | x ~ N(W x, 1/precision I). The last input
/// column is the bias (inputs are augmented by the data layer).
struct ExpertParams {
  Eigen::MatrixXd weights;  // target_dim x input_dim
  double precision = 1.0;
};

/// Logistic gate: p(z = 1 | x) = sigma(v' x).
struct GateParams {
  Eigen::VectorXd weights;
};

/// Shared Gamma(a, b) hyper-prior for the precisions tau and the
/// hyper-precisions alpha, beta.
struct PriorConfig {
  double gamma_shape = 1e-2;  // a
  double gamma_rate = 1e-4;   // b
};

/// ln N(t | W x, 1/tau I).
inline double expert_log_density(const Eigen::VectorXd& t,
                                 const Eigen::VectorXd& x,
                                 const ExpertParams& expert) {
  if (expert.precision <= 0.0) {
    throw std::domain_error("expert_log_density: precision must be > 0");
  }
  const double d = static_cast<double>(t.size());
  const double r2 = (t - expert.weights * x).squaredNorm();
  return 0.5 * d * (std::log(expert.precision) -
                    std::log(2.0 * std::numbers::pi)) -
         0.5 * expert.precision * r2;
}

/// z ln sigma(v'x) + (1 - z) ln(1 - sigma(v'x)).
inline double gate_log_probability(int z, const Eigen::VectorXd& x,
                                   const GateParams& gate) {
  const double a = gate.weights.dot(x);
  return z == 1 ? LogSigmoid(a) : LogSigmoid(-a);
}

/// pi_j(x): product of gate probabilities along each expert's path.
inline Eigen::VectorXd mixing_coefficients(
    const Eigen::VectorXd& x, const TreeTopology& tree,
    const std::vector<GateParams>& gates) {
  Eigen::VectorXd pi(tree.num_experts());
  for (int j = 0; j < tree.num_experts(); ++j) {
    double log_pi = 0.0;
    for (const PathStep& step : tree.path_to_expert(j)) {
      const double a = gates[step.gate].weights.dot(x);
      log_pi += step.branch == Branch::kLeft ? LogSigmoid(a) : LogSigmoid(-a);
    }
    pi(j) = std::exp(log_pi);
  }
  return pi;
}

/// ln sum_j pi_j(x) N(t | W_j x, 1/tau_j I), via log-sum-exp.
inline double conditional_mixture_log_density(
    const Eigen::VectorXd& t, const Eigen::VectorXd& x,
    const TreeTopology& tree, const std::vector<ExpertParams>& experts,
    const std::vector<GateParams>& gates) {
  std::vector<double> terms(tree.num_experts());
  for (int j = 0; j < tree.num_experts(); ++j) {
    double log_pi = 0.0;
    for (const PathStep& step : tree.path_to_expert(j)) {
      const double a = gates[step.gate].weights.dot(x);
      log_pi += step.branch == Branch::kLeft ? LogSigmoid(a) : LogSigmoid(-a);
    }
    terms[j] = log_pi + expert_log_density(t, x, experts[j]);
  }
  return LogSumExp(terms);
}

struct SampleResult {
  Eigen::VectorXd target;
  int expert = 0;
  std::vector<int> gate_values;  // full assignment, one value per gate
};

/// Draws every gate variable Bernoulli(sigma(v_i'x)), selects the expert
/// with zeta = 1, and samples t from its Gaussian.
inline SampleResult sample_target(const Eigen::VectorXd& x,
                                  const TreeTopology& tree,
                                  const std::vector<ExpertParams>& experts,
                                  const std::vector<GateParams>& gates,
                                  std::mt19937_64& rng) {
  SampleResult out;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  out.gate_values.resize(tree.num_gates());
  for (int i = 0; i < tree.num_gates(); ++i) {
    out.gate_values[i] = unif(rng) < Sigmoid(gates[i].weights.dot(x)) ? 1 : 0;
  }
  for (int j = 0; j < tree.num_experts(); ++j) {
    if (ZetaIndicator(tree, out.gate_values, j) == 1) {
      out.expert = j;
      break;
    }
  }
  const ExpertParams& e = experts[out.expert];
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.target = e.weights * x;
  const double sd = 1.0 / std::sqrt(e.precision);
  for (int k = 0; k < out.target.size(); ++k) {
    out.target(k) += sd * gauss(rng);
  }
  return out;
}

/// Sum of per-point conditional mixture log densities.
inline double log_likelihood(const Dataset& data, const TreeTopology& tree,
                             const std::vector<ExpertParams>& experts,
                             const std::vector<GateParams>& gates) {
  if (data.num_points() == 0) {
    throw std::invalid_argument("log_likelihood: empty dataset");
  }
  double total = 0.0;
  for (int n = 0; n < data.num_points(); ++n) {
    total += conditional_mixture_log_density(
        data.targets.row(n).transpose(), data.inputs.row(n).transpose(), tree,
        experts, gates);
  }
  return total;
}

}  // namespace hme

#endif  // HME_MODEL_HPP
