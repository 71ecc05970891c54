// hme/selection.hpp -- topology/restart sweeps, bound-based model
// selection, Ockham-hill data, and unnormalized model weights.
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

#ifndef HME_SELECTION_HPP
#define HME_SELECTION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hme/data.hpp"
#include "hme/engine.hpp"
#include "hme/tree.hpp"
#include "hme/util.hpp"

namespace hme {

struct RunEntry {
  int topology_id = 0;  // index into SelectionReport::topologies
  int num_experts = 0;
  int restart = 0;
  std::uint64_t seed = 0;
  double bound = -std::numeric_limits<double>::infinity();
  bool converged = false;
  bool failed = false;  // non-finite bound; excluded from maxima
};

struct SelectionReport {
  std::vector<TreeTopology> topologies;
  std::vector<RunEntry> entries;          // topology-major, restart-minor
  int best_entry = -1;                    // argmax bound among usable runs
  std::map<int, double> ockham_curve;     // num_experts -> best bound
  std::vector<int> failed_topologies;     // all restarts failed
};

inline std::uint64_t RunSeed(std::uint64_t base_seed, int topology_id,
                             int restart) {
  return MixSeed(base_seed, static_cast<std::uint64_t>(topology_id),
                 static_cast<std::uint64_t>(restart));
}

/// Trains every enumerated topology in [expert_min, expert_max] times
/// `restarts` random initializations. Per-run seeds derive from
/// (base_seed, topology id, restart index), so the result is independent
/// of scheduling. Failed runs are recorded and excluded from maxima; ties
/// on the best bound go to fewer experts, then lower topology id.
inline SelectionReport sweep(const Dataset& data, int expert_min,
                             int expert_max, int restarts,
                             std::uint64_t base_seed,
                             const TrainConfig& config, int num_threads = 0,
                             int max_enum_experts = 8) {
  if (expert_min < 1 || expert_max < expert_min) {
    throw std::invalid_argument("sweep: bad expert range");
  }
  if (restarts < 1) throw std::invalid_argument("sweep: restarts must be >= 1");
  SelectionReport report;
  for (int m = expert_min; m <= expert_max; ++m) {
    for (TreeTopology& t : EnumerateTopologies(m, max_enum_experts)) {
      report.topologies.push_back(std::move(t));
    }
  }
  const int num_topologies = static_cast<int>(report.topologies.size());
  report.entries.resize(static_cast<std::size_t>(num_topologies) * restarts);

  auto run_one = [&](int index) {
    const int topology_id = index / restarts;
    const int restart = index % restarts;
    RunEntry entry;
    entry.topology_id = topology_id;
    entry.num_experts = report.topologies[topology_id].num_experts();
    entry.restart = restart;
    entry.seed = RunSeed(base_seed, topology_id, restart);
    TrainConfig run_config = config;
    run_config.seed = entry.seed;
    try {
      TrainResult result =
          train(report.topologies[topology_id], data, run_config);
      entry.bound = result.trace.bound_history.back();
      entry.converged = result.trace.converged;
      if (!std::isfinite(entry.bound)) entry.failed = true;
    } catch (const TrainingFailure&) {
      entry.failed = true;
    }
    report.entries[index] = entry;
  };

  const int total = num_topologies * restarts;
  int workers = num_threads > 0
                    ? num_threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, total));
  if (workers == 1) {
    for (int i = 0; i < total; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Best per topology, overall best, Ockham curve.
  std::vector<double> best_per_topology(
      num_topologies, -std::numeric_limits<double>::infinity());
  std::vector<int> best_entry_per_topology(num_topologies, -1);
  for (int i = 0; i < total; ++i) {
    const RunEntry& e = report.entries[i];
    if (e.failed) continue;
    if (e.bound > best_per_topology[e.topology_id]) {
      best_per_topology[e.topology_id] = e.bound;
      best_entry_per_topology[e.topology_id] = i;
    }
  }
  for (int t = 0; t < num_topologies; ++t) {
    if (best_entry_per_topology[t] < 0) {
      report.failed_topologies.push_back(t);
      continue;
    }
    const int m = report.topologies[t].num_experts();
    auto [it, inserted] = report.ockham_curve.emplace(m, best_per_topology[t]);
    if (!inserted) it->second = std::max(it->second, best_per_topology[t]);
    if (report.best_entry < 0) {
      report.best_entry = best_entry_per_topology[t];
      continue;
    }
    const RunEntry& best = report.entries[report.best_entry];
    const double candidate = best_per_topology[t];
    const bool better =
        candidate > best.bound ||
        (candidate == best.bound &&
         (report.topologies[t].num_experts() < best.num_experts ||
          (report.topologies[t].num_experts() == best.num_experts &&
           t < best.topology_id)));
    if (better) report.best_entry = best_entry_per_topology[t];
  }
  if (report.best_entry < 0) {
    throw NumericalError("sweep: every topology failed");
  }
  return report;
}

/// Unnormalized per-topology model weights exp(L_M - max_M L_M); the best
/// topology has weight 1. Failed topologies get weight 0.
inline std::vector<double> model_weights(const SelectionReport& report) {
  const int num_topologies = static_cast<int>(report.topologies.size());
  std::vector<double> best(num_topologies,
                           -std::numeric_limits<double>::infinity());
  for (const RunEntry& e : report.entries) {
    if (!e.failed) best[e.topology_id] = std::max(best[e.topology_id], e.bound);
  }
  const double max_bound = *std::max_element(best.begin(), best.end());
  std::vector<double> weights(num_topologies, 0.0);
  for (int t = 0; t < num_topologies; ++t) {
    if (std::isfinite(best[t])) weights[t] = std::exp(best[t] - max_bound);
  }
  return weights;
}

inline void SaveReportCsv(const SelectionReport& report,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "topology_id,num_experts,restart,seed,bound,converged,failed\n";
  for (const RunEntry& e : report.entries) {
    out << e.topology_id << "," << e.num_experts << "," << e.restart << ","
        << e.seed << "," << FormatDouble(e.bound) << ","
        << (e.converged ? 1 : 0) << "," << (e.failed ? 1 : 0) << "\n";
  }
}

inline void SaveOckhamCsv(const SelectionReport& report,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "num_experts,best_bound\n";
  for (const auto& [m, bound] : report.ockham_curve) {
    out << m << "," << FormatDouble(bound) << "\n";
  }
}

inline nlohmann::json ReportSummaryJson(const SelectionReport& report) {
  nlohmann::json j;
  const RunEntry& best = report.entries[report.best_entry];
  j["best"] = {{"topology_id", best.topology_id},
               {"num_experts", best.num_experts},
               {"restart", best.restart},
               {"seed", best.seed},
               {"bound", best.bound}};
  j["best_topology"] = report.topologies[best.topology_id].ToJson();
  j["ockham_curve"] = nlohmann::json::object();
  for (const auto& [m, bound] : report.ockham_curve) {
    j["ockham_curve"][std::to_string(m)] = bound;
  }
  j["model_weights"] = model_weights(report);
  j["failed_topologies"] = report.failed_topologies;
  return j;
}

}  // namespace hme

#endif  // HME_SELECTION_HPP
