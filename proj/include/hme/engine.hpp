// hme/engine.hpp -- coordinate-ascent variational inference for the
// Bayesian HME: factor updates, xi re-estimation, the evidence lower
// bound, annealed training, and the finite-difference stationarity check.
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

#ifndef HME_ENGINE_HPP
#define HME_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hme/data.hpp"
#include "hme/logistic_bound.hpp"
#include "hme/posterior.hpp"
#include "hme/tree.hpp"
#include "hme/util.hpp"

namespace hme {

// ---------------------------------------------------------------------------
// Annealing

struct AnnealingConfig {
  enum class Mode {
    kLiteral,  // initial * decay^k for k < switch_iteration, then terminal
    kClamped,  // max(initial * decay^k, terminal)
  };
  bool enabled = false;
  double initial = 5.85;
  double decay = 0.97;
  int switch_iteration = 200;
  double terminal = 1.0;
  Mode mode = Mode::kLiteral;
};

/// Inverse temperature applied to the data terms at sweep `iteration`.
inline double annealing_schedule(int iteration, const AnnealingConfig& cfg) {
  if (cfg.initial <= 0.0 || cfg.decay <= 0.0 || cfg.terminal <= 0.0 ||
      cfg.switch_iteration < 0) {
    throw std::invalid_argument(
        "annealing_schedule: constants must be positive");
  }
  const double decayed = cfg.initial * std::pow(cfg.decay, iteration);
  if (cfg.mode == AnnealingConfig::Mode::kClamped) {
    return std::max(decayed, cfg.terminal);
  }
  return iteration < cfg.switch_iteration ? decayed : cfg.terminal;
}

struct TrainConfig {
  int max_sweeps = 800;
  int min_sweeps = 50;
  double tolerance = 1e-6;  // relative bound change over one sweep
  std::uint64_t seed = 0;
  AnnealingConfig annealing;
  PriorConfig priors;
  std::optional<FixedHyperParams> fixed_hyper;
};

struct TrainingTrace {
  std::vector<double> bound_history;
  std::vector<double> temperature_history;
  bool converged = false;
  int iterations_run = 0;
};

/// Raised when a training run produces a non-finite bound; carries the
/// partial trace for the restart harness.
class TrainingFailure : public NumericalError {
 public:
  TrainingFailure(const std::string& what, TrainingTrace trace)
      : NumericalError(what), trace(std::move(trace)) {}
  TrainingTrace trace;
};

// ---------------------------------------------------------------------------
// Moment helpers

/// <||t_n - W_j x_n||^2> = ||t_n - M_j x_n||^2 + D x_n' S_j x_n, as an
/// N x M matrix.
inline Eigen::MatrixXd ExpectedResidual(const HmePosterior& post,
                                        const Dataset& data) {
  const int n = data.num_points();
  const int m = post.num_experts();
  const double target_dim = static_cast<double>(post.target_dim());
  Eigen::MatrixXd e2(n, m);
  for (int j = 0; j < m; ++j) {
    const Eigen::MatrixXd resid =
        data.targets - data.inputs * post.experts[j].mean.transpose();
    e2.col(j) =
        resid.rowwise().squaredNorm() +
        target_dim * (data.inputs * post.experts[j].covariance)
                         .cwiseProduct(data.inputs)
                         .rowwise()
                         .sum();
  }
  return e2;
}

/// g_jn = (D/2)<ln tau_j> - (<tau_j>/2) <||t_n - W_j x_n||^2>.
inline Eigen::MatrixXd ExpertLogAffinity(const HmePosterior& post,
                                         const Dataset& data) {
  Eigen::MatrixXd g = ExpectedResidual(post, data);
  const double half_d = 0.5 * static_cast<double>(post.target_dim());
  for (int j = 0; j < post.num_experts(); ++j) {
    g.col(j) = half_d * post.tau_mean_log(j) -
               0.5 * post.tau_mean(j) * g.col(j).array();
  }
  return g;
}

/// Rebuilds E[zeta_jn] as path products of the current gate probabilities.
/// Rows are renormalized purely as a numerical guard.
inline void RecomputeExpertResp(HmePosterior& post) {
  const int n = static_cast<int>(post.resp.gate_prob.rows());
  const int m = post.num_experts();
  post.resp.expert_resp.resize(n, m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd prod = Eigen::VectorXd::Ones(n);
    for (const PathStep& step : post.tree().path_to_expert(j)) {
      if (step.branch == Branch::kLeft) {
        prod.array() *= post.resp.gate_prob.col(step.gate).array();
      } else {
        prod.array() *= 1.0 - post.resp.gate_prob.col(step.gate).array();
      }
    }
    post.resp.expert_resp.col(j) =
        prod.cwiseMax(1e-300).cwiseMin(1.0);
  }
  post.resp.expert_resp.array().colwise() /=
      post.resp.expert_resp.rowwise().sum().array();
}

// ---------------------------------------------------------------------------
// Factor updates. Each is an exact coordinate-ascent step on the annealed
// bound at inverse temperature s, so the bound never decreases at fixed s.

/// q_Z update: gate_prob[n][i] = sigma(h_in), iterated gate-by-gate to its
/// joint fixed point (the responsibilities of different gates couple
/// through the path products).
inline void UpdateQz(HmePosterior& post, const Dataset& data, double s = 1.0) {
  const int n_points = data.num_points();
  const int n_gates = post.num_gates();
  if (n_gates == 0) {
    post.resp.gate_prob.resize(n_points, 0);
    RecomputeExpertResp(post);
    return;
  }
  const Eigen::MatrixXd g = ExpertLogAffinity(post, data);
  Eigen::MatrixXd gate_lin(n_points, n_gates);  // <v_i>' x_n
  for (int i = 0; i < n_gates; ++i) {
    gate_lin.col(i) = data.inputs * post.gates[i].mean;
  }
  const TreeTopology& tree = post.tree();
  constexpr int kMaxPasses = 200;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    double max_delta = 0.0;
    for (int i = 0; i < n_gates; ++i) {
      for (int n = 0; n < n_points; ++n) {
        double signed_sum = 0.0;
        for (const int side : {0, 1}) {
          const auto& experts_under =
              side == 0 ? tree.left_experts(i) : tree.right_experts(i);
          double side_sum = 0.0;
          for (const int j : experts_under) {
            double zeta_no_i = 1.0;  // E[zeta_jn with gate i omitted]
            for (const PathStep& step : tree.path_to_expert(j)) {
              if (step.gate == i) continue;
              const double p = post.resp.gate_prob(n, step.gate);
              zeta_no_i *= step.branch == Branch::kLeft ? p : 1.0 - p;
            }
            side_sum += zeta_no_i * g(n, j);
          }
          signed_sum += side == 0 ? side_sum : -side_sum;
        }
        const double h = s * (gate_lin(n, i) + signed_sum);
        if (!std::isfinite(h)) {
          throw NumericalError("UpdateQz: non-finite h at gate " +
                               std::to_string(i) + ", point " +
                               std::to_string(n));
        }
        const double updated = Sigmoid(h);
        max_delta =
            std::max(max_delta, std::abs(updated - post.resp.gate_prob(n, i)));
        post.resp.gate_prob(n, i) = updated;
      }
    }
    if (max_delta < 1e-13) break;
  }
  RecomputeExpertResp(post);
}

/// xi_in = sqrt(x_n' <v_i v_i'> x_n); increments the clamp diagnostic on
/// (numerically) negative quadratic forms.
inline void UpdateXi(HmePosterior& post, const Dataset& data) {
  const int n_gates = post.num_gates();
  post.xi.values.resize(data.num_points(), n_gates);
  for (int i = 0; i < n_gates; ++i) {
    const Eigen::MatrixXd second = post.gates[i].second_moment();
    Eigen::VectorXd quad =
        (data.inputs * second).cwiseProduct(data.inputs).rowwise().sum();
    for (int n = 0; n < data.num_points(); ++n) {
      if (quad(n) < 0.0) {
        ++post.clamped_xi_count;
        quad(n) = 0.0;
      }
      post.xi.values(n, i) = std::sqrt(quad(n));
    }
  }
}

/// q_v update. Every gate emits a z for every point in the joint model, so
/// the sums run over all n.
inline void UpdateQv(HmePosterior& post, const Dataset& data, double s = 1.0) {
  const int p = post.input_dim();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i < post.num_gates(); ++i) {
    Eigen::VectorXd lambda(data.num_points());
    for (int n = 0; n < data.num_points(); ++n) {
      lambda(n) = LambdaOfXi(post.xi.values(n, i));
    }
    const Eigen::MatrixXd precision =
        post.beta_mean(i) * identity +
        2.0 * s * data.inputs.transpose() * lambda.asDiagonal() * data.inputs;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("UpdateQv: gate precision not positive definite");
    }
    post.gates[i].covariance = llt.solve(identity);
    post.gates[i].mean =
        llt.solve(s * data.inputs.transpose() *
                  (post.resp.gate_prob.col(i).array() - 0.5).matrix());
  }
}

/// q_W update: per-expert responsibility-weighted Bayesian linear
/// regression with ridge <alpha_j> and data weight s <tau_j>.
inline void UpdateQw(HmePosterior& post, const Dataset& data, double s = 1.0) {
  const int p = post.input_dim();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  for (int j = 0; j < post.num_experts(); ++j) {
    const Eigen::VectorXd& r = post.resp.expert_resp.col(j);
    const double st = s * post.tau_mean(j);
    const Eigen::MatrixXd precision =
        post.alpha_mean(j) * identity +
        st * data.inputs.transpose() * r.asDiagonal() * data.inputs;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("UpdateQw: expert precision not positive definite");
    }
    post.experts[j].covariance = llt.solve(identity);
    post.experts[j].mean =
        (st * llt.solve(data.inputs.transpose() * r.asDiagonal() *
                        data.targets))
            .transpose();
  }
}

/// q_tau update, using the fresh W moments. No-op when hyperparameters are
/// fixed.
inline void UpdateQtau(HmePosterior& post, const Dataset& data,
                       double s = 1.0) {
  if (post.hyper_fixed()) return;
  const Eigen::MatrixXd e2 = ExpectedResidual(post, data);
  const double target_dim = static_cast<double>(post.target_dim());
  for (int j = 0; j < post.num_experts(); ++j) {
    const Eigen::VectorXd& r = post.resp.expert_resp.col(j);
    post.tau[j].shape =
        post.priors().gamma_shape + 0.5 * s * target_dim * r.sum();
    post.tau[j].rate =
        post.priors().gamma_rate + 0.5 * s * r.dot(e2.col(j));
  }
}

/// Combined expert update (W means/covariance, then tau).
inline void UpdateQwAndTau(HmePosterior& post, const Dataset& data,
                           double s = 1.0) {
  UpdateQw(post, data, s);
  UpdateQtau(post, data, s);
}

/// q_alpha, q_beta updates. Second moments include the covariance traces.
inline void UpdateHyperFactors(HmePosterior& post) {
  if (post.hyper_fixed()) return;
  const double p = static_cast<double>(post.input_dim());
  const double target_dim = static_cast<double>(post.target_dim());
  const PriorConfig& prior = post.priors();
  for (int j = 0; j < post.num_experts(); ++j) {
    const double w2 = post.experts[j].mean.squaredNorm() +
                      target_dim * post.experts[j].covariance.trace();
    post.alpha[j].shape = prior.gamma_shape + 0.5 * target_dim * p;
    post.alpha[j].rate = prior.gamma_rate + 0.5 * w2;
  }
  for (int i = 0; i < post.num_gates(); ++i) {
    const double v2 = post.gates[i].mean.squaredNorm() +
                      post.gates[i].covariance.trace();
    post.beta[i].shape = prior.gamma_shape + 0.5 * p;
    post.beta[i].rate = prior.gamma_rate + 0.5 * v2;
  }
}

// ---------------------------------------------------------------------------
// Lower bound

/// The annealed evidence lower bound L~ at inverse temperature s. All
/// expectations are in closed form; throws NumericalError naming the
/// offending term on non-finite results.
inline double lower_bound(const HmePosterior& post, const Dataset& data,
                          double s = 1.0) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  const double p = static_cast<double>(post.input_dim());
  const double target_dim = static_cast<double>(post.target_dim());
  const PriorConfig& prior = post.priors();
  auto check = [](double value, const char* term) {
    if (!std::isfinite(value)) {
      throw NumericalError(std::string("lower_bound: non-finite term ") +
                           term);
    }
    return value;
  };

  // Expert data term.
  double data_term = 0.0;
  if (data.num_points() > 0) {
    const Eigen::MatrixXd e2 = ExpectedResidual(post, data);
    for (int j = 0; j < post.num_experts(); ++j) {
      const Eigen::VectorXd& r = post.resp.expert_resp.col(j);
      data_term +=
          s * (0.5 * target_dim * (post.tau_mean_log(j) - kLog2Pi) * r.sum() -
               0.5 * post.tau_mean(j) * r.dot(e2.col(j)));
    }
  }
  check(data_term, "expert data");

  // Gate data term under the sigmoid bound, plus the q_Z entropy.
  double gate_term = 0.0;
  double z_entropy = 0.0;
  for (int i = 0; i < post.num_gates(); ++i) {
    const Eigen::VectorXd lin = data.inputs * post.gates[i].mean;
    const Eigen::MatrixXd second = post.gates[i].second_moment();
    const Eigen::VectorXd quad =
        (data.inputs * second).cwiseProduct(data.inputs).rowwise().sum();
    for (int n = 0; n < data.num_points(); ++n) {
      const double xi = post.xi.values(n, i);
      const double z = post.resp.gate_prob(n, i);
      gate_term += s * (z * lin(n) + LogSigmoid(xi) -
                        0.5 * (lin(n) + xi) -
                        LambdaOfXi(xi) * (quad(n) - xi * xi));
      z_entropy += BernoulliEntropy(z);
    }
  }
  check(gate_term, "gate bound");

  // Cross-entropy of the Gaussian priors.
  double prior_v = 0.0;
  for (int i = 0; i < post.num_gates(); ++i) {
    const double v2 = post.gates[i].mean.squaredNorm() +
                      post.gates[i].covariance.trace();
    prior_v += 0.5 * p * (post.beta_mean_log(i) - kLog2Pi) -
               0.5 * post.beta_mean(i) * v2;
  }
  double prior_w = 0.0;
  for (int j = 0; j < post.num_experts(); ++j) {
    const double w2 = post.experts[j].mean.squaredNorm() +
                      target_dim * post.experts[j].covariance.trace();
    prior_w += 0.5 * target_dim * p * (post.alpha_mean_log(j) - kLog2Pi) -
               0.5 * post.alpha_mean(j) * w2;
  }
  check(prior_v + prior_w, "Gaussian priors");

  // Gamma prior cross-entropies and entropies (absent in the
  // fixed-hyperparameter variant, where these factors are point masses).
  double gamma_terms = 0.0;
  if (!post.hyper_fixed()) {
    auto gamma_cross = [&](const GammaFactor& f) {
      return prior.gamma_shape * std::log(prior.gamma_rate) -
             std::lgamma(prior.gamma_shape) +
             (prior.gamma_shape - 1.0) * f.mean_log() -
             prior.gamma_rate * f.mean();
    };
    for (const auto& f : post.tau) gamma_terms += gamma_cross(f) + f.entropy();
    for (const auto& f : post.alpha) {
      gamma_terms += gamma_cross(f) + f.entropy();
    }
    for (const auto& f : post.beta) gamma_terms += gamma_cross(f) + f.entropy();
    check(gamma_terms, "Gamma factors");
  }

  double gauss_entropy = 0.0;
  for (const auto& g : post.gates) gauss_entropy += g.entropy();
  for (const auto& e : post.experts) gauss_entropy += e.entropy();
  check(gauss_entropy, "Gaussian entropies");

  const double total = data_term + gate_term + prior_v + prior_w +
                       gamma_terms + gauss_entropy + z_entropy;
  return check(total, "total");
}

// ---------------------------------------------------------------------------
// Initialization and training

/// Random initialization: gate means ~ N(0, 0.1^2) per coordinate; expert
/// means from ridge least squares on a bootstrap resample per expert (the
/// symmetry between identical experts is a saddle point); Gamma factors at
/// the prior; xi = 1; gate probabilities 1/2.
inline HmePosterior InitializePosterior(const TreeTopology& tree,
                                        const Dataset& data,
                                        const TrainConfig& config) {
  HmePosterior post(tree, data.input_dim(), data.target_dim(), config.priors,
                    config.fixed_hyper);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int p = data.input_dim();
  for (auto& gate : post.gates) {
    for (int c = 0; c < p; ++c) gate.mean(c) = 0.1 * gauss(rng);
    gate.covariance = 0.01 * Eigen::MatrixXd::Identity(p, p);
  }
  std::uniform_int_distribution<int> pick(0, data.num_points() - 1);
  for (auto& expert : post.experts) {
    std::vector<int> rows(data.num_points());
    for (int& r : rows) r = pick(rng);
    const Dataset boot = data.Subset(rows);
    const Eigen::MatrixXd gram =
        boot.inputs.transpose() * boot.inputs +
        1e-3 * Eigen::MatrixXd::Identity(p, p);
    expert.mean = gram.ldlt()
                      .solve(boot.inputs.transpose() * boot.targets)
                      .transpose();
    expert.covariance = 0.01 * Eigen::MatrixXd::Identity(p, p);
  }
  post.resp.gate_prob =
      Eigen::MatrixXd::Constant(data.num_points(), tree.num_gates(), 0.5);
  RecomputeExpertResp(post);
  post.xi.values =
      Eigen::MatrixXd::Ones(data.num_points(), tree.num_gates());
  return post;
}

struct TrainResult {
  HmePosterior posterior;
  TrainingTrace trace;
};

/// Annealed coordinate-ascent training to convergence. Update order per
/// sweep: q_Z, xi, q_v, q_W + tau, alpha, beta; the bound is evaluated
/// once per sweep. Deterministic given the seed.
inline TrainResult train(const TreeTopology& tree, const Dataset& data,
                         const TrainConfig& config) {
  if (data.num_points() == 0) {
    throw std::invalid_argument("train: empty dataset");
  }
  HmePosterior post = InitializePosterior(tree, data, config);
  TrainingTrace trace;
  double prev = 0.0;
  bool have_prev_terminal = false;
  for (int k = 0; k < config.max_sweeps; ++k) {
    const double s =
        config.annealing.enabled ? annealing_schedule(k, config.annealing)
                                 : 1.0;
    double bound = 0.0;
    try {
      UpdateQz(post, data, s);
      UpdateXi(post, data);
      UpdateQv(post, data, s);
      UpdateQwAndTau(post, data, s);
      UpdateHyperFactors(post);
      bound = lower_bound(post, data, s);
    } catch (const NumericalError& e) {
      trace.iterations_run = k;
      throw TrainingFailure(e.what(), trace);
    }
    trace.bound_history.push_back(bound);
    trace.temperature_history.push_back(s);
    trace.iterations_run = k + 1;
    const bool terminal =
        !config.annealing.enabled || s == config.annealing.terminal;
    if (terminal && have_prev_terminal && k + 1 >= config.min_sweeps &&
        std::abs(bound - prev) < config.tolerance * std::abs(bound)) {
      trace.converged = true;
      break;
    }
    prev = bound;
    have_prev_terminal = terminal;
  }
  return TrainResult{std::move(post), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Finite-difference stationarity check

enum class Factor { kQz, kXi, kQv, kQw, kQtau, kQalpha, kQbeta };

struct FdReport {
  double max_scaled_gradient = 0.0;
  bool passed = true;
};

/// Central finite differences of the bound with respect to the named
/// factor's variational parameters, immediately after that factor's
/// update; the maximum magnitude-scaled gradient should vanish.
inline FdReport finite_difference_check(const HmePosterior& post,
                                        const Dataset& data, Factor which,
                                        double s = 1.0, double step = 1e-5,
                                        double threshold = 1e-4) {
  HmePosterior work = post;
  const bool rebuild_resp = which == Factor::kQz;
  auto evaluate = [&]() {
    if (rebuild_resp) RecomputeExpertResp(work);
    return lower_bound(work, data, s);
  };
  FdReport report;
  auto probe = [&](auto&& setter, double theta0) {
    // Steps proportional to the parameter magnitude keep the truncation
    // error of the central difference under control for parameters far
    // below 1 (e.g. Gamma rates of pruned experts near the prior).
    const double scale = std::max(1e-3, std::abs(theta0));
    const double h = step * scale;
    setter(theta0 + h);
    const double up = evaluate();
    setter(theta0 - h);
    const double down = evaluate();
    setter(theta0);
    const double grad = std::abs(up - down) / (2.0 * h) * scale;
    report.max_scaled_gradient = std::max(report.max_scaled_gradient, grad);
  };
  auto probe_gamma = [&](std::vector<GammaFactor>& factors) {
    if (work.hyper_fixed()) return;
    for (auto& f : factors) {
      probe([&](double v) { f.shape = v; }, f.shape);
      probe([&](double v) { f.rate = v; }, f.rate);
    }
  };
  switch (which) {
    case Factor::kQz:
      for (int i = 0; i < work.num_gates(); ++i) {
        for (int n = 0; n < data.num_points(); ++n) {
          const double z = std::clamp(work.resp.gate_prob(n, i), 1e-12,
                                      1.0 - 1e-12);
          const double logit0 = std::log(z / (1.0 - z));
          probe(
              [&](double v) { work.resp.gate_prob(n, i) = Sigmoid(v); },
              logit0);
        }
      }
      break;
    case Factor::kXi:
      for (int i = 0; i < work.num_gates(); ++i) {
        for (int n = 0; n < data.num_points(); ++n) {
          probe([&](double v) { work.xi.values(n, i) = v; },
                work.xi.values(n, i));
        }
      }
      break;
    case Factor::kQv:
      for (auto& gate : work.gates) {
        for (int c = 0; c < gate.mean.size(); ++c) {
          probe([&](double v) { gate.mean(c) = v; }, gate.mean(c));
        }
      }
      break;
    case Factor::kQw:
      for (auto& expert : work.experts) {
        for (int k = 0; k < expert.mean.rows(); ++k) {
          for (int c = 0; c < expert.mean.cols(); ++c) {
            probe([&](double v) { expert.mean(k, c) = v; },
                  expert.mean(k, c));
          }
        }
      }
      break;
    case Factor::kQtau:
      probe_gamma(work.tau);
      break;
    case Factor::kQalpha:
      probe_gamma(work.alpha);
      break;
    case Factor::kQbeta:
      probe_gamma(work.beta);
      break;
  }
  report.passed = report.max_scaled_gradient < threshold;
  return report;
}

// ---------------------------------------------------------------------------
// Trace export

inline void SaveTraceCsv(const TrainingTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "iteration,bound,inverse_temperature\n";
  for (std::size_t k = 0; k < trace.bound_history.size(); ++k) {
    out << k << "," << FormatDouble(trace.bound_history[k]) << ","
        << FormatDouble(trace.temperature_history[k]) << "\n";
  }
}

}  // namespace hme

#endif  // HME_ENGINE_HPP
