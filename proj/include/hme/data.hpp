// hme/data.hpp -- datasets: synthetic generators (toy sinusoid inverse
// problem, two-link arm), forward/inverse kinematics, standardization,
// and delimited-file I/O.
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

#ifndef HME_DATA_HPP
#define HME_DATA_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hme/util.hpp"

namespace hme {

/// Per-column standardization statistics (training-split mean and sd).
/// The bias column, when present, is excluded.
struct Standardization {
  Eigen::VectorXd input_mean;   // length = input_dim without bias
  Eigen::VectorXd input_scale;
  Eigen::VectorXd target_mean;  // length = target_dim
  Eigen::VectorXd target_scale;
};

/// Paired input/target matrices. When bias_augmented is set, the last
/// input column is the constant-1 dummy input and is excluded from
/// standardization and file output.
struct Dataset {
  Eigen::MatrixXd inputs;   // N x input_dim
  Eigen::MatrixXd targets;  // N x target_dim
  bool bias_augmented = false;
  std::optional<Standardization> standardization;
  std::vector<std::string> input_names;   // excludes the bias column
  std::vector<std::string> target_names;

  int num_points() const { return static_cast<int>(inputs.rows()); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }
  int target_dim() const { return static_cast<int>(targets.cols()); }
  int raw_input_dim() const { return input_dim() - (bias_augmented ? 1 : 0); }

  /// Appends the constant-1 column.
  void Augment() {
    if (bias_augmented) return;
    inputs.conservativeResize(Eigen::NoChange, inputs.cols() + 1);
    inputs.col(inputs.cols() - 1).setOnes();
    bias_augmented = true;
  }

  /// Rows `rows` of this dataset (with repetition allowed).
  Dataset Subset(const std::vector<int>& rows) const {
    Dataset out = *this;
    out.inputs.resize(rows.size(), inputs.cols());
    out.targets.resize(rows.size(), targets.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.inputs.row(r) = inputs.row(rows[r]);
      out.targets.row(r) = targets.row(rows[r]);
    }
    return out;
  }
};

/// Toy inverse problem: t ~ U(0,1), x = t + 0.3 sin(2 pi t) + eps,
/// eps ~ N(0, noise_sd^2); the dataset maps x -> t. Inputs are augmented.
inline Dataset gen_toy(int n, double noise_sd = 0.05,
                       std::uint64_t seed = 0) {
  if (n < 1) throw std::invalid_argument("gen_toy: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.inputs.resize(n, 1);
  d.targets.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const double t = unif(rng);
    const double eps = noise_sd * gauss(rng);
    d.inputs(i, 0) = t + 0.3 * std::sin(2.0 * std::numbers::pi * t) + eps;
    d.targets(i, 0) = t;
  }
  d.input_names = {"x"};
  d.target_names = {"t"};
  d.Augment();
  return d;
}

/// Two-link arm geometry and admissible joint-angle ranges.
struct ArmGeometry {
  double link1 = 0.8;
  double link2 = 0.2;
  std::pair<double, double> theta1_range = {0.3, 1.2};
  std::pair<double, double> theta2_range = {std::numbers::pi / 2,
                                            3 * std::numbers::pi / 2};
};

/// End-effector position for the given joint angles.
inline Eigen::Vector2d forward_kinematics(double theta1, double theta2,
                                          const ArmGeometry& g = {}) {
  return {g.link1 * std::cos(theta1) - g.link2 * std::cos(theta1 + theta2),
          g.link1 * std::sin(theta1) - g.link2 * std::sin(theta1 + theta2)};
}

/// All admissible (theta1, theta2) solutions for an end-effector position,
/// from two-link inverse geometry. Zero, one, or two solutions; two
/// solutions means the position lies in the bimodal region B.
inline std::vector<std::pair<double, double>> inverse_kinematics_solutions(
    const Eigen::Vector2d& position, const ArmGeometry& g = {}) {
  std::vector<std::pair<double, double>> out;
  const double r2 = position.squaredNorm();
  const double c = (g.link1 * g.link1 + g.link2 * g.link2 - r2) /
                   (2.0 * g.link1 * g.link2);
  if (c < -1.0 - 1e-12 || c > 1.0 + 1e-12) return out;
  const double delta = std::acos(std::clamp(c, -1.0, 1.0));
  const double phi = std::atan2(position.y(), position.x());
  for (const double theta2 :
       {delta, 2.0 * std::numbers::pi - delta}) {
    if (theta2 < g.theta2_range.first - 1e-12 ||
        theta2 > g.theta2_range.second + 1e-12) {
      continue;
    }
    // x = R(theta1) * u with u = (L1 - L2 cos t2, -L2 sin t2).
    const double u1 = g.link1 - g.link2 * std::cos(theta2);
    const double u2 = -g.link2 * std::sin(theta2);
    const double theta1 = phi - std::atan2(u2, u1);
    if (theta1 < g.theta1_range.first - 1e-12 ||
        theta1 > g.theta1_range.second + 1e-12) {
      continue;
    }
    if (!out.empty() && std::abs(out[0].second - theta2) < 1e-12) continue;
    out.emplace_back(theta1, theta2);
  }
  return out;
}

/// Region of the admissible annulus: A/C are unimodal (elbow-down only or
/// elbow-up only), B is the bimodal overlap.
enum class ArmRegion { kA, kB, kC, kOutside };

inline ArmRegion classify_arm_region(const Eigen::Vector2d& position,
                                     const ArmGeometry& g = {}) {
  const auto sols = inverse_kinematics_solutions(position, g);
  if (sols.empty()) return ArmRegion::kOutside;
  if (sols.size() == 2) return ArmRegion::kB;
  return sols[0].second < std::numbers::pi ? ArmRegion::kA : ArmRegion::kC;
}

/// Noiseless inverse-kinematics dataset: inputs are end-effector positions,
/// targets the generating joint angles. Inputs are augmented.
inline Dataset gen_arm_dataset(int n, const ArmGeometry& g = {},
                               std::uint64_t seed = 0) {
  if (n < 1) throw std::invalid_argument("gen_arm_dataset: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u1(g.theta1_range.first,
                                            g.theta1_range.second);
  std::uniform_real_distribution<double> u2(g.theta2_range.first,
                                            g.theta2_range.second);
  Dataset d;
  d.inputs.resize(n, 2);
  d.targets.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t1 = u1(rng);
    const double t2 = u2(rng);
    d.inputs.row(i) = forward_kinematics(t1, t2, g).transpose();
    d.targets(i, 0) = t1;
    d.targets(i, 1) = t2;
  }
  d.input_names = {"x1", "x2"};
  d.target_names = {"theta1", "theta2"};
  d.Augment();
  return d;
}

/// Distance between the position reached by the predicted angles and the
/// true position.
inline double end_effector_error(const Eigen::Vector2d& predicted_angles,
                                 const Eigen::Vector2d& true_position,
                                 const ArmGeometry& g = {}) {
  return (forward_kinematics(predicted_angles(0), predicted_angles(1), g) -
          true_position)
      .norm();
}

/// Standardizes all non-bias input columns and all target columns to zero
/// mean and unit variance; the statistics are stored on the returned
/// dataset. Throws DataError naming the column if some column is constant.
inline Dataset standardize(const Dataset& d) {
  Dataset out = d;
  const int q = d.raw_input_dim();
  Standardization s;
  s.input_mean.resize(q);
  s.input_scale.resize(q);
  s.target_mean.resize(d.target_dim());
  s.target_scale.resize(d.target_dim());
  auto column_stats = [&](const Eigen::VectorXd& col, const std::string& name,
                          double& mean, double& scale) {
    mean = col.mean();
    const double var = (col.array() - mean).square().sum() /
                       static_cast<double>(col.size());
    if (var <= 0.0) {
      throw DataError("standardize: column '" + name + "' has zero variance");
    }
    scale = std::sqrt(var);
  };
  for (int c = 0; c < q; ++c) {
    const std::string name =
        c < static_cast<int>(d.input_names.size()) ? d.input_names[c]
                                                   : "input" + std::to_string(c);
    column_stats(d.inputs.col(c), name, s.input_mean(c), s.input_scale(c));
    out.inputs.col(c) =
        (d.inputs.col(c).array() - s.input_mean(c)) / s.input_scale(c);
  }
  for (int c = 0; c < d.target_dim(); ++c) {
    const std::string name = c < static_cast<int>(d.target_names.size())
                                 ? d.target_names[c]
                                 : "target" + std::to_string(c);
    column_stats(d.targets.col(c), name, s.target_mean(c), s.target_scale(c));
    out.targets.col(c) =
        (d.targets.col(c).array() - s.target_mean(c)) / s.target_scale(c);
  }
  out.standardization = s;
  return out;
}

/// Applies previously computed statistics (e.g. training-split stats to a
/// test split).
inline Dataset apply_standardization(const Dataset& d,
                                     const Standardization& s) {
  Dataset out = d;
  for (int c = 0; c < d.raw_input_dim(); ++c) {
    out.inputs.col(c) =
        (d.inputs.col(c).array() - s.input_mean(c)) / s.input_scale(c);
  }
  for (int c = 0; c < d.target_dim(); ++c) {
    out.targets.col(c) =
        (d.targets.col(c).array() - s.target_mean(c)) / s.target_scale(c);
  }
  out.standardization = s;
  return out;
}

inline Dataset unstandardize(const Dataset& d) {
  if (!d.standardization) return d;
  const Standardization& s = *d.standardization;
  Dataset out = d;
  for (int c = 0; c < d.raw_input_dim(); ++c) {
    out.inputs.col(c) =
        d.inputs.col(c).array() * s.input_scale(c) + s.input_mean(c);
  }
  for (int c = 0; c < d.target_dim(); ++c) {
    out.targets.col(c) =
        d.targets.col(c).array() * s.target_scale(c) + s.target_mean(c);
  }
  out.standardization.reset();
  return out;
}

/// Reads a comma-delimited file with a header row. The first num_inputs
/// columns are inputs, the rest targets. Augments with the bias column
/// when add_bias is set.
inline Dataset load_delimited(const std::string& path, int num_inputs,
                              bool add_bias = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) names.push_back(field);
  }
  const int cols = static_cast<int>(names.size());
  if (num_inputs < 1 || num_inputs >= cols) {
    throw DataError(path + ": expected at least " +
                    std::to_string(num_inputs + 1) + " columns, found " +
                    std::to_string(cols));
  }
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(cols);
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": cannot parse '" + field + "'");
      }
      row.push_back(v);
    }
    if (static_cast<int>(row.size()) != cols) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(cols) + " fields, found " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Dataset d;
  const int n = static_cast<int>(rows.size());
  d.inputs.resize(n, num_inputs);
  d.targets.resize(n, cols - num_inputs);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < num_inputs; ++c) d.inputs(i, c) = rows[i][c];
    for (int c = num_inputs; c < cols; ++c) {
      d.targets(i, c - num_inputs) = rows[i][c];
    }
  }
  d.input_names.assign(names.begin(), names.begin() + num_inputs);
  d.target_names.assign(names.begin() + num_inputs, names.end());
  if (add_bias) d.Augment();
  return d;
}

/// Writes the non-bias input columns followed by the target columns, with
/// a header row; values round-trip bit-exactly (17 significant digits).
inline void save_delimited(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  const int q = d.raw_input_dim();
  std::string header;
  for (int c = 0; c < q; ++c) {
    header += (c < static_cast<int>(d.input_names.size())
                   ? d.input_names[c]
                   : "input" + std::to_string(c)) + ",";
  }
  for (int c = 0; c < d.target_dim(); ++c) {
    header += c < static_cast<int>(d.target_names.size())
                  ? d.target_names[c]
                  : "target" + std::to_string(c);
    if (c + 1 < d.target_dim()) header += ",";
  }
  out << header << "\n";
  for (int i = 0; i < d.num_points(); ++i) {
    std::string row;
    for (int c = 0; c < q; ++c) row += FormatDouble(d.inputs(i, c)) + ",";
    for (int c = 0; c < d.target_dim(); ++c) {
      row += FormatDouble(d.targets(i, c));
      if (c + 1 < d.target_dim()) row += ",";
    }
    out << row << "\n";
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace hme

#endif  // HME_DATA_HPP
