// hme/util.hpp
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

#ifndef HME_UTIL_HPP
#define HME_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

namespace hme {

/// Thrown when a computation produces non-finite or otherwise invalid
/// numerical results (maps to CLI exit code 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on malformed input data or files (maps to CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on structurally invalid trees.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double Sigmoid(double a) {
  if (a >= 0.0) {
    return 1.0 / (1.0 + std::exp(-a));
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// ln sigma(a), stable for large |a|.
inline double LogSigmoid(double a) {
  if (a >= 0.0) {
    return -std::log1p(std::exp(-a));
  }
  return a - std::log1p(std::exp(a));
}

inline double LogSumExp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double Digamma(double x) { return boost::math::digamma(x); }

// Entropy of a Bernoulli variable with success probability sigma(logit),
// computed from the logit so saturated probabilities stay finite.
inline double BernoulliEntropyFromLogit(double logit) {
  const double a = std::abs(logit);
  return std::log1p(std::exp(-a)) + a * Sigmoid(-a);
}

inline double BernoulliEntropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

// splitmix64 step; used to derive per-run seeds deterministically.
inline std::uint64_t MixSeed(std::uint64_t seed) {
  seed += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = seed;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b) {
  return MixSeed(MixSeed(a) ^ (b * 0xff51afd7ed558ccdULL + 1));
}

inline std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b,
                             std::uint64_t c) {
  return MixSeed(MixSeed(a, b), c);
}

// 17 significant digits: doubles round-trip exactly through text.
inline std::string FormatDouble(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace hme

#endif  // HME_UTIL_HPP
