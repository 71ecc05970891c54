// hme/posterior.hpp -- the factorized variational state for one training
// run: Gaussian factors for gate and expert weights, Gamma factors for
// precisions and hyper-precisions, Bernoulli responsibilities, and the
// sigmoid-bound xi parameters.
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

#ifndef HME_POSTERIOR_HPP
#define HME_POSTERIOR_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hme/data.hpp"
#include "hme/logistic_bound.hpp"
#include "hme/model.hpp"
#include "hme/tree.hpp"
#include "hme/util.hpp"

namespace hme {

/// Gaussian variational factor for one gate weight vector.
struct GaussianFactor {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric PD

  Eigen::MatrixXd second_moment() const {
    return covariance + mean * mean.transpose();
  }

  double entropy() const {
    const double p = static_cast<double>(mean.size());
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("GaussianFactor: covariance not positive definite");
    }
    const double log_det =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return 0.5 * p * (1.0 + std::log(2.0 * std::numbers::pi)) + 0.5 * log_det;
  }
};

/// Gaussian variational factor for one expert's weight matrix: row means
/// stacked as a D x p matrix with a single covariance shared across rows
/// (the row covariances coincide analytically).
struct ExpertFactor {
  Eigen::MatrixXd mean;        // target_dim x input_dim
  Eigen::MatrixXd covariance;  // input_dim x input_dim, shared across rows

  double entropy() const {
    GaussianFactor row{Eigen::VectorXd::Zero(mean.cols()), covariance};
    return static_cast<double>(mean.rows()) * row.entropy();
  }
};

/// Gamma variational factor in shape/rate form.
struct GammaFactor {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const { return shape / rate; }
  double mean_log() const { return Digamma(shape) - std::log(rate); }
  double entropy() const {
    return shape - std::log(rate) + std::lgamma(shape) +
           (1.0 - shape) * Digamma(shape);
  }
};

/// Posterior gate probabilities sigma(h_in) and the derived expert
/// responsibilities E[zeta_jn] (path products; rows sum to 1).
struct Responsibilities {
  Eigen::MatrixXd gate_prob;    // N x num_gates
  Eigen::MatrixXd expert_resp;  // N x num_experts
};

/// Optional point values for tau/alpha/beta; when set the Gamma factors
/// are replaced by point masses and their updates and prior/entropy terms
/// drop out of the bound (the fixed-hyperparameter model variant).
struct FixedHyperParams {
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 1.0;
};

class HmePosterior {
 public:
  HmePosterior(TreeTopology tree, int input_dim, int target_dim,
               PriorConfig priors = {},
               std::optional<FixedHyperParams> fixed = std::nullopt)
      : tree_(std::move(tree)), priors_(priors), fixed_(fixed) {
    const int num_gates = tree_.num_gates();
    const int num_experts = tree_.num_experts();
    gates.assign(num_gates,
                 GaussianFactor{Eigen::VectorXd::Zero(input_dim),
                                Eigen::MatrixXd::Identity(input_dim,
                                                          input_dim)});
    experts.assign(
        num_experts,
        ExpertFactor{Eigen::MatrixXd::Zero(target_dim, input_dim),
                     Eigen::MatrixXd::Identity(input_dim, input_dim)});
    tau.assign(num_experts, GammaFactor{priors.gamma_shape, priors.gamma_rate});
    alpha.assign(num_experts,
                 GammaFactor{priors.gamma_shape, priors.gamma_rate});
    beta.assign(num_gates, GammaFactor{priors.gamma_shape, priors.gamma_rate});
  }

  const TreeTopology& tree() const { return tree_; }
  const PriorConfig& priors() const { return priors_; }
  const std::optional<FixedHyperParams>& fixed_hyper() const { return fixed_; }
  bool hyper_fixed() const { return fixed_.has_value(); }

  int num_experts() const { return tree_.num_experts(); }
  int num_gates() const { return tree_.num_gates(); }
  int input_dim() const { return static_cast<int>(gates.empty()
                                                      ? experts[0].mean.cols()
                                                      : gates[0].mean.size()); }
  int target_dim() const { return static_cast<int>(experts[0].mean.rows()); }

  double tau_mean(int j) const { return fixed_ ? fixed_->tau : tau[j].mean(); }
  double tau_mean_log(int j) const {
    return fixed_ ? std::log(fixed_->tau) : tau[j].mean_log();
  }
  double alpha_mean(int j) const {
    return fixed_ ? fixed_->alpha : alpha[j].mean();
  }
  double alpha_mean_log(int j) const {
    return fixed_ ? std::log(fixed_->alpha) : alpha[j].mean_log();
  }
  double beta_mean(int i) const {
    return fixed_ ? fixed_->beta : beta[i].mean();
  }
  double beta_mean_log(int i) const {
    return fixed_ ? std::log(fixed_->beta) : beta[i].mean_log();
  }

  std::vector<GaussianFactor> gates;
  std::vector<ExpertFactor> experts;
  std::vector<GammaFactor> tau;
  std::vector<GammaFactor> alpha;
  std::vector<GammaFactor> beta;
  Responsibilities resp;
  XiParams xi;
  std::optional<Standardization> standardization;
  int clamped_xi_count = 0;  // diagnostic from OptimalXiSquared

 private:
  TreeTopology tree_;
  PriorConfig priors_;
  std::optional<FixedHyperParams> fixed_;
};

// ---------------------------------------------------------------------------
// JSON serialization (model files, schema version 1)

inline nlohmann::json MatrixToJson(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd MatrixFromJson(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline nlohmann::json VectorToJson(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd VectorFromJson(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (int i = 0; i < static_cast<int>(j.size()); ++i) {
    v(i) = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json PosteriorToJson(const HmePosterior& post) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["topology"] = post.tree().ToJson();
  j["input_dim"] = post.input_dim();
  j["target_dim"] = post.target_dim();
  j["priors"] = {{"gamma_shape", post.priors().gamma_shape},
                 {"gamma_rate", post.priors().gamma_rate}};
  j["gates"] = nlohmann::json::array();
  for (const auto& g : post.gates) {
    j["gates"].push_back({{"mean", VectorToJson(g.mean)},
                          {"covariance", MatrixToJson(g.covariance)}});
  }
  j["experts"] = nlohmann::json::array();
  for (const auto& e : post.experts) {
    j["experts"].push_back({{"mean", MatrixToJson(e.mean)},
                            {"covariance", MatrixToJson(e.covariance)}});
  }
  auto gammas = [](const std::vector<GammaFactor>& fs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& f : fs) {
      out.push_back({{"shape", f.shape}, {"rate", f.rate}});
    }
    return out;
  };
  j["tau"] = gammas(post.tau);
  j["alpha"] = gammas(post.alpha);
  j["beta"] = gammas(post.beta);
  j["xi"] = MatrixToJson(post.xi.values);
  if (post.fixed_hyper()) {
    j["fixed_hyper"] = {{"alpha", post.fixed_hyper()->alpha},
                        {"beta", post.fixed_hyper()->beta},
                        {"tau", post.fixed_hyper()->tau}};
  }
  if (post.standardization) {
    const Standardization& s = *post.standardization;
    j["standardization"] = {{"input_mean", VectorToJson(s.input_mean)},
                            {"input_scale", VectorToJson(s.input_scale)},
                            {"target_mean", VectorToJson(s.target_mean)},
                            {"target_scale", VectorToJson(s.target_scale)}};
  }
  return j;
}

inline HmePosterior PosteriorFromJson(const nlohmann::json& j) {
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
    throw DataError("model JSON: unsupported schema_version");
  }
  TreeTopology tree = TreeTopology::FromJson(j["topology"]);
  PriorConfig priors{j["priors"]["gamma_shape"].get<double>(),
                     j["priors"]["gamma_rate"].get<double>()};
  std::optional<FixedHyperParams> fixed;
  if (j.contains("fixed_hyper")) {
    fixed = FixedHyperParams{j["fixed_hyper"]["alpha"].get<double>(),
                             j["fixed_hyper"]["beta"].get<double>(),
                             j["fixed_hyper"]["tau"].get<double>()};
  }
  HmePosterior post(tree, j["input_dim"].get<int>(),
                    j["target_dim"].get<int>(), priors, fixed);
  for (int i = 0; i < post.num_gates(); ++i) {
    post.gates[i].mean = VectorFromJson(j["gates"][i]["mean"]);
    post.gates[i].covariance = MatrixFromJson(j["gates"][i]["covariance"]);
  }
  for (int e = 0; e < post.num_experts(); ++e) {
    post.experts[e].mean = MatrixFromJson(j["experts"][e]["mean"]);
    post.experts[e].covariance = MatrixFromJson(j["experts"][e]["covariance"]);
  }
  auto gammas = [](const nlohmann::json& arr, std::vector<GammaFactor>& fs) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      fs[i] = GammaFactor{arr[i]["shape"].get<double>(),
                          arr[i]["rate"].get<double>()};
    }
  };
  gammas(j["tau"], post.tau);
  gammas(j["alpha"], post.alpha);
  gammas(j["beta"], post.beta);
  post.xi.values = MatrixFromJson(j["xi"]);
  if (j.contains("standardization")) {
    Standardization s;
    s.input_mean = VectorFromJson(j["standardization"]["input_mean"]);
    s.input_scale = VectorFromJson(j["standardization"]["input_scale"]);
    s.target_mean = VectorFromJson(j["standardization"]["target_mean"]);
    s.target_scale = VectorFromJson(j["standardization"]["target_scale"]);
    post.standardization = s;
  }
  return post;
}

}  // namespace hme

#endif  // HME_POSTERIOR_HPP
