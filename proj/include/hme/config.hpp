// hme/config.hpp -- flat key=value configuration files for the CLI.
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

#ifndef HME_CONFIG_HPP
#define HME_CONFIG_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "hme/engine.hpp"
#include "hme/util.hpp"

namespace hme {

/// Parses `key = value` lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> ParseConfigFile(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

/// Applies recognized keys onto a TrainConfig. Unknown keys raise a
/// DataError so typos do not silently fall back to defaults.
inline void ApplyTrainConfig(const std::map<std::string, std::string>& kv,
                             TrainConfig& config) {
  for (const auto& [key, value] : kv) {
    std::istringstream ss(value);
    auto num = [&](auto& target) {
      ss >> target;
      if (ss.fail()) {
        throw DataError("config: bad value '" + value + "' for " + key);
      }
    };
    if (key == "prior_a") num(config.priors.gamma_shape);
    else if (key == "prior_b") num(config.priors.gamma_rate);
    else if (key == "max_sweeps") num(config.max_sweeps);
    else if (key == "min_sweeps") num(config.min_sweeps);
    else if (key == "tolerance") num(config.tolerance);
    else if (key == "anneal_enabled") {
      config.annealing.enabled = (value == "1" || value == "true");
    } else if (key == "anneal_initial") num(config.annealing.initial);
    else if (key == "anneal_decay") num(config.annealing.decay);
    else if (key == "anneal_switch") num(config.annealing.switch_iteration);
    else if (key == "anneal_terminal") num(config.annealing.terminal);
    else if (key == "anneal_mode") {
      if (value == "literal") {
        config.annealing.mode = AnnealingConfig::Mode::kLiteral;
      } else if (value == "clamped") {
        config.annealing.mode = AnnealingConfig::Mode::kClamped;
      } else {
        throw DataError("config: anneal_mode must be literal or clamped");
      }
    } else {
      throw DataError("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace hme

#endif  // HME_CONFIG_HPP
