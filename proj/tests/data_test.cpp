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
#include <cstdio>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "hme/data.hpp"

namespace hme {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(GenToy, ShapeAndCurve) {
  Dataset d = gen_toy(500, 0.05, 3);
  EXPECT_EQ(d.num_points(), 500);
  EXPECT_EQ(d.raw_input_dim(), 1);
  EXPECT_EQ(d.target_dim(), 1);
  // Generators hand back training-ready (bias-augmented) datasets.
  EXPECT_TRUE(d.bias_augmented);
  EXPECT_EQ(d.input_dim(), 2);
  // Noiseless draw reproduces x = t + 0.3 sin(2 pi t) exactly.
  Dataset clean = gen_toy(200, 0.0, 4);
  for (int i = 0; i < clean.num_points(); ++i) {
    double t = clean.targets(i, 0);
    EXPECT_NEAR(clean.inputs(i, 0), t + 0.3 * std::sin(2.0 * kPi * t), 1e-14);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
  }
}

TEST(GenToy, NoiseLevel) {
  Dataset d = gen_toy(20000, 0.05, 9);
  double ss = 0.0;
  for (int i = 0; i < d.num_points(); ++i) {
    double t = d.targets(i, 0);
    double mean = t + 0.3 * std::sin(2.0 * kPi * t);
    ss += (d.inputs(i, 0) - mean) * (d.inputs(i, 0) - mean);
  }
  double sd = std::sqrt(ss / d.num_points());
  EXPECT_NEAR(sd, 0.05, 0.002);
}

TEST(GenToy, Deterministic) {
  Dataset a = gen_toy(50, 0.05, 11);
  Dataset b = gen_toy(50, 0.05, 11);
  EXPECT_TRUE(a.inputs.isApprox(b.inputs, 0.0));
  EXPECT_TRUE(a.targets.isApprox(b.targets, 0.0));
  Dataset c = gen_toy(50, 0.05, 12);
  EXPECT_FALSE(a.inputs.isApprox(c.inputs, 1e-12));
}

TEST(ForwardKinematics, HandValues) {
  ArmGeometry g;  // L1 = 0.8, L2 = 0.2
  // theta1 = 0, theta2 = 0: x = (L1 - L2, 0).
  Eigen::Vector2d p0 = forward_kinematics(0.0, 0.0, g);
  EXPECT_NEAR(p0(0), 0.6, 1e-15);
  EXPECT_NEAR(p0(1), 0.0, 1e-15);
  // theta1 = 0, theta2 = pi: x = (L1 + L2, 0).
  Eigen::Vector2d p1 = forward_kinematics(0.0, kPi, g);
  EXPECT_NEAR(p1(0), 1.0, 1e-15);
  EXPECT_NEAR(p1(1), 0.0, 1e-12);
  // theta1 = pi/2, theta2 = pi: x = (0, L1 + L2).
  Eigen::Vector2d p2 = forward_kinematics(kPi / 2.0, kPi, g);
  EXPECT_NEAR(p2(0), 0.0, 1e-12);
  EXPECT_NEAR(p2(1), 1.0, 1e-12);
}

TEST(InverseKinematics, RoundTripBothSolutions) {
  ArmGeometry g;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u1(g.theta1_range.first,
                                            g.theta1_range.second);
  std::uniform_real_distribution<double> u2(g.theta2_range.first,
                                            g.theta2_range.second);
  for (int i = 0; i < 500; ++i) {
    double t1 = u1(rng), t2 = u2(rng);
    Eigen::Vector2d pos = forward_kinematics(t1, t2, g);
    auto sols = inverse_kinematics_solutions(pos, g);
    ASSERT_FALSE(sols.empty());
    bool found = false;
    for (const auto& s : sols) {
      // Each returned solution must reproduce the position exactly.
      Eigen::Vector2d back = forward_kinematics(s.first, s.second, g);
      EXPECT_NEAR((back - pos).norm(), 0.0, 1e-9);
      double d2 = std::remainder(s.second - t2, 2.0 * kPi);
      double d1 = std::remainder(s.first - t1, 2.0 * kPi);
      if (std::abs(d1) < 1e-8 && std::abs(d2) < 1e-8) found = true;
    }
    EXPECT_TRUE(found) << "theta=(" << t1 << "," << t2 << ")";
  }
}

TEST(ArmRegions, ElbowUpDownCounts) {
  ArmGeometry g;
  // Reach limits: |x| in [L1 - L2, L1 + L2] = [0.6, 1.0].
  EXPECT_EQ(classify_arm_region({1.5, 0.0}, g), ArmRegion::kOutside);
  EXPECT_EQ(classify_arm_region({0.1, 0.1}, g), ArmRegion::kOutside);
  // A point reached by two angle pairs within the sampled ranges sits in the
  // two-solution region.
  Eigen::Vector2d mid = forward_kinematics(0.75, kPi, g);
  auto sols = inverse_kinematics_solutions(mid, g);
  // On the full-extension circle the two candidate solutions coincide.
  EXPECT_NEAR(mid.norm(), 1.0, 1e-12);
  // An interior position reached with theta2 away from pi has a mirror
  // configuration 2 pi - theta2; only solutions inside the sampled ranges
  // are returned, and their count determines the region label.
  Eigen::Vector2d p = forward_kinematics(0.75, 2.0, g);
  auto sols2 = inverse_kinematics_solutions(p, g);
  ASSERT_FALSE(sols2.empty());
  ArmRegion r = classify_arm_region(p, g);
  if (sols2.size() == 2) {
    EXPECT_EQ(r, ArmRegion::kB);
  } else {
    EXPECT_TRUE(r == ArmRegion::kA || r == ArmRegion::kC);
  }
}

TEST(ArmRegions, RegionBExistsInSample) {
  ArmGeometry g;
  Dataset d = gen_arm_dataset(500, g, 21);
  int region_b = 0;
  for (int i = 0; i < d.num_points(); ++i) {
    Eigen::Vector2d pos = d.inputs.row(i).transpose();
    // Every generated position must be reachable.
    EXPECT_NE(classify_arm_region(pos, g), ArmRegion::kOutside);
    if (classify_arm_region(pos, g) == ArmRegion::kB) ++region_b;
    // Inputs are end-effector positions produced by the stored angles.
    Eigen::Vector2d fk =
        forward_kinematics(d.targets(i, 0), d.targets(i, 1), g);
    EXPECT_NEAR((fk - pos).norm(), 0.0, 1e-12);
  }
  EXPECT_GT(region_b, 0);
  EXPECT_LT(region_b, d.num_points());
}

TEST(EndEffectorError, ZeroAtTruth) {
  ArmGeometry g;
  Eigen::Vector2d angles(0.9, 2.5);
  Eigen::Vector2d pos = forward_kinematics(angles(0), angles(1), g);
  EXPECT_NEAR(end_effector_error(angles, pos, g), 0.0, 1e-14);
  Eigen::Vector2d off(0.9, 2.6);
  EXPECT_GT(end_effector_error(off, pos, g), 0.0);
}

TEST(Standardize, ColumnsAndRoundTrip) {
  Dataset d;
  d.inputs.resize(4, 1);
  d.inputs << 1.0, 2.0, 3.0, 4.0;
  d.targets.resize(4, 1);
  d.targets << 10.0, 20.0, 30.0, 40.0;
  d.input_names = {"x"};
  d.target_names = {"t"};
  Dataset s = standardize(d);
  ASSERT_TRUE(s.standardization.has_value());
  EXPECT_NEAR(s.inputs.col(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR(s.targets.col(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR(s.inputs.col(0).array().square().mean(), 1.0, 1e-12);
  EXPECT_NEAR(s.standardization->input_mean(0), 2.5, 1e-14);
  EXPECT_NEAR(s.standardization->target_mean(0), 25.0, 1e-14);
  // Applying the stored statistics to the raw data reproduces the
  // standardized copy.
  Dataset again = apply_standardization(d, *s.standardization);
  EXPECT_TRUE(again.inputs.isApprox(s.inputs, 1e-14));
  EXPECT_TRUE(again.targets.isApprox(s.targets, 1e-14));
}

TEST(Standardize, ZeroVarianceColumnNamed) {
  Dataset d;
  d.inputs.resize(3, 2);
  d.inputs << 1.0, 5.0, 1.0, 6.0, 1.0, 7.0;
  d.targets.resize(3, 1);
  d.targets << 1.0, 2.0, 3.0;
  d.input_names = {"flat", "x"};
  d.target_names = {"t"};
  try {
    standardize(d);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
}

TEST(Standardize, BiasColumnUntouched) {
  Dataset d;
  d.inputs.resize(3, 1);
  d.inputs << 1.0, 2.0, 3.0;
  d.targets.resize(3, 1);
  d.targets << 1.0, 2.0, 3.0;
  d.input_names = {"x"};
  d.target_names = {"t"};
  Dataset s = standardize(d);
  s.Augment();
  EXPECT_EQ(s.input_dim(), 2);
  EXPECT_TRUE((s.inputs.col(1).array() == 1.0).all());
}

TEST(Augment, AppendsOnes) {
  Dataset d;
  d.inputs.resize(2, 2);
  d.inputs << 1.0, 2.0, 3.0, 4.0;
  d.targets.resize(2, 1);
  d.targets << 0.0, 0.0;
  d.Augment();
  EXPECT_TRUE(d.bias_augmented);
  EXPECT_EQ(d.input_dim(), 3);
  EXPECT_EQ(d.raw_input_dim(), 2);
  EXPECT_DOUBLE_EQ(d.inputs(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(d.inputs(1, 2), 1.0);
  // Idempotent.
  d.Augment();
  EXPECT_EQ(d.input_dim(), 3);
}

TEST(DelimitedIo, RoundTrip) {
  Dataset d = gen_toy(37, 0.05, 13);
  std::string path = ::testing::TempDir() + "toy_roundtrip.csv";
  save_delimited(d, path);
  Dataset back = load_delimited(path, 1, /*add_bias=*/false);
  EXPECT_EQ(back.num_points(), 37);
  EXPECT_EQ(back.raw_input_dim(), 1);
  EXPECT_EQ(back.target_dim(), 1);
  // save_delimited writes the raw (unaugmented) columns; values survive the
  // text round trip bit-for-bit.
  EXPECT_TRUE(back.inputs.col(0).isApprox(d.inputs.col(0), 0.0));
  EXPECT_TRUE(back.targets.isApprox(d.targets, 0.0));
  std::remove(path.c_str());
}

TEST(DelimitedIo, LoaderAugmentsByDefault) {
  std::string path = ::testing::TempDir() + "tiny.csv";
  {
    std::ofstream out(path);
    out << "x,t\n0.5,1.5\n0.25,2.5\n";
  }
  Dataset d = load_delimited(path, 1);
  EXPECT_TRUE(d.bias_augmented);
  EXPECT_EQ(d.input_dim(), 2);
  EXPECT_DOUBLE_EQ(d.inputs(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(d.inputs(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.targets(1, 0), 2.5);
  std::remove(path.c_str());
}

TEST(DelimitedIo, MalformedLineReported) {
  std::string path = ::testing::TempDir() + "bad.csv";
  {
    std::ofstream out(path);
    out << "x,t\n1,2\nnot_a_number,3\n";
  }
  try {
    load_delimited(path, 1);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos)
        << "message should carry the line number: " << e.what();
  }
  std::remove(path.c_str());
}

TEST(DelimitedIo, MissingFile) {
  EXPECT_THROW(load_delimited("/nonexistent/nope.csv", 1), DataError);
}

TEST(DelimitedIo, RaggedRowReported) {
  std::string path = ::testing::TempDir() + "ragged.csv";
  {
    std::ofstream out(path);
    out << "x,t\n1,2\n3\n";
  }
  EXPECT_THROW(load_delimited(path, 1), DataError);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace hme
