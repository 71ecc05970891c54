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
//
// Command-line front end.  Subcommands:
//   generate  - synthesize benchmark datasets (toy curve, two-link arm)
//   train     - fit a single mixture model by variational inference
//   select    - sweep tree sizes/shapes and rank them by the evidence bound
//   predict   - point predictions from a saved model
//   evaluate  - test-set metrics (standardized MSE, end-effector error)
//   baseline  - single-valued regression baseline on the same data
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hme/hme.hpp"

namespace {

using hme::Dataset;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

hme::TrainConfig LoadTrainConfig(const std::string& config_path,
                                 std::uint64_t seed) {
  hme::TrainConfig config;
  config.seed = seed;
  if (!config_path.empty()) {
    hme::ApplyTrainConfig(hme::ParseConfigFile(config_path), config);
  }
  return config;
}

void WriteFileOrThrow(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw hme::DataError("cannot open output file: " + path);
  out << contents;
  if (!out) throw hme::DataError("failed writing output file: " + path);
}

struct ModelFile {
  hme::HmePosterior posterior;
  hme::PriorConfig priors;
};

void SaveModel(const std::string& path, const hme::HmePosterior& post) {
  nlohmann::json j = hme::PosteriorToJson(post);
  std::ofstream out(path);
  if (!out) throw hme::DataError("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

hme::HmePosterior LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hme::DataError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw hme::DataError("malformed model file " + path + ": " + e.what());
  }
  return hme::PosteriorFromJson(j);
}

hme::TreeTopology TopologyFromArgs(int num_experts,
                                   const std::string& topology_path) {
  if (!topology_path.empty()) {
    std::ifstream in(topology_path);
    if (!in) throw hme::DataError("cannot open topology file: " + topology_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw hme::DataError("malformed topology file " + topology_path + ": " +
                           e.what());
    }
    return hme::TreeTopology::FromJson(j);
  }
  if (num_experts < 1)
    throw std::invalid_argument("--num-experts must be >= 1");
  return hme::TreeTopology::Balanced(num_experts);
}

// Returns predictions in the raw (unstandardized) target space.
MatrixXd RawPredictions(const hme::HmePosterior& post, const Dataset& raw,
                        hme::PredictMode mode, hme::GatingMode gating,
                        std::vector<int>* experts,
                        MatrixXd* mixing) {
  Dataset data = raw;
  if (post.standardization.has_value()) {
    data = hme::apply_standardization(raw, *post.standardization);
  }
  data.Augment();
  const int n = static_cast<int>(data.inputs.rows());
  const int num_targets = static_cast<int>(post.experts[0].mean.rows());
  MatrixXd preds(n, num_targets);
  if (experts) experts->assign(n, -1);
  if (mixing) mixing->resize(n, static_cast<int>(post.experts.size()));
  for (int i = 0; i < n; ++i) {
    hme::Prediction p =
        hme::predict_point(data.inputs.row(i).transpose(), post, mode, gating);
    VectorXd point = p.point;
    if (post.standardization.has_value()) {
      const auto& st = *post.standardization;
      point = (point.array() * st.target_scale.array()) +
              st.target_mean.array();
    }
    preds.row(i) = point.transpose();
    if (experts) (*experts)[i] = p.expert_chosen;
    if (mixing) mixing->row(i) = p.mixing.transpose();
  }
  return preds;
}

void WritePredictionCsv(const std::string& path,
                        const std::vector<std::string>& target_names,
                        const MatrixXd& preds,
                        const std::vector<int>* experts,
                        const MatrixXd* mixing) {
  std::string out;
  for (int k = 0; k < preds.cols(); ++k) {
    if (k) out += ",";
    out += "pred_";
    out += (k < static_cast<int>(target_names.size()) ? target_names[k]
                                                      : "t" + std::to_string(k));
  }
  if (experts) out += ",expert";
  if (mixing) {
    for (int j = 0; j < mixing->cols(); ++j)
      out += ",mix_" + std::to_string(j);
  }
  out += "\n";
  for (int i = 0; i < preds.rows(); ++i) {
    for (int k = 0; k < preds.cols(); ++k) {
      if (k) out += ",";
      out += hme::FormatDouble(preds(i, k));
    }
    if (experts) out += "," + std::to_string((*experts)[i]);
    if (mixing) {
      for (int j = 0; j < mixing->cols(); ++j)
        out += "," + hme::FormatDouble((*mixing)(i, j));
    }
    out += "\n";
  }
  WriteFileOrThrow(path, out);
}

hme::PredictMode ParsePredictMode(const std::string& s) {
  if (s == "argmax") return hme::PredictMode::kMostProbableExpert;
  if (s == "mean") return hme::PredictMode::kMixtureMean;
  throw std::invalid_argument("unknown --mode '" + s +
                              "' (expected argmax or mean)");
}

int RunGenerate(const std::string& kind, int n, double noise_sd,
                std::uint64_t seed, const std::string& out_path) {
  Dataset data;
  if (kind == "toy") {
    data = hme::gen_toy(n, noise_sd, seed);
  } else if (kind == "arm") {
    data = hme::gen_arm_dataset(n, hme::ArmGeometry{}, seed);
  } else {
    throw std::invalid_argument("unknown --kind '" + kind +
                                "' (expected toy or arm)");
  }
  hme::save_delimited(data, out_path);
  std::cout << "wrote " << n << " rows to " << out_path << "\n";
  return 0;
}

int RunTrain(const std::string& data_path, int num_inputs, int num_experts,
             const std::string& topology_path, std::uint64_t seed,
             const std::string& config_path, bool standardize_data,
             const std::string& model_path, const std::string& trace_path) {
  Dataset data = hme::load_delimited(data_path, num_inputs);
  hme::TrainConfig config = LoadTrainConfig(config_path, seed);
  hme::TreeTopology tree = TopologyFromArgs(num_experts, topology_path);
  std::optional<hme::Standardization> st;
  if (standardize_data) {
    data = hme::standardize(data);
    st = data.standardization;
  }
  hme::TrainResult result = hme::train(tree, data, config);
  result.posterior.standardization = st;
  if (!result.trace.converged) {
    std::cerr << "warning: stopped at sweep limit without meeting the "
                 "convergence tolerance\n";
  }
  SaveModel(model_path, result.posterior);
  if (!trace_path.empty()) hme::SaveTraceCsv(result.trace, trace_path);
  std::cout << "bound " << hme::FormatDouble(result.trace.bound_history.back())
            << " after " << result.trace.iterations_run << " sweeps ("
            << (result.trace.converged ? "converged" : "not converged")
            << ")\n";
  return 0;
}

int RunSelect(const std::string& data_path, int num_inputs, int expert_min,
              int expert_max, int restarts, std::uint64_t seed,
              const std::string& config_path, bool standardize_data,
              int threads, const std::string& out_prefix) {
  Dataset data = hme::load_delimited(data_path, num_inputs);
  std::optional<hme::Standardization> st;
  if (standardize_data) {
    data = hme::standardize(data);
    st = data.standardization;
  }
  hme::TrainConfig config = LoadTrainConfig(config_path, seed);
  hme::SelectionReport report = hme::sweep(data, expert_min, expert_max,
                                           restarts, seed, config, threads);
  hme::SaveReportCsv(report, out_prefix + "_report.csv");
  hme::SaveOckhamCsv(report, out_prefix + "_ockham.csv");
  {
    nlohmann::json j = hme::ReportSummaryJson(report);
    std::ofstream out(out_prefix + "_summary.json");
    if (!out)
      throw hme::DataError("cannot open output file: " + out_prefix +
                           "_summary.json");
    out << j.dump(2) << "\n";
  }
  const hme::RunEntry& best = report.entries[report.best_entry];
  hme::TreeTopology best_tree = report.topologies[best.topology_id];
  hme::TrainConfig best_config = config;
  best_config.seed = best.seed;
  hme::TrainResult refit = hme::train(best_tree, data, best_config);
  refit.posterior.standardization = st;
  SaveModel(out_prefix + "_best.json", refit.posterior);
  std::cout << "best: " << best.num_experts << " experts (topology "
            << best.topology_id << "), bound "
            << hme::FormatDouble(best.bound) << "\n";
  return 0;
}

int RunPredict(const std::string& model_path, const std::string& input_path,
               int num_inputs, const std::string& mode_name,
               const std::string& out_path) {
  const hme::PredictMode mode = ParsePredictMode(mode_name);
  hme::HmePosterior post = LoadModel(model_path);
  Dataset raw = hme::load_delimited(input_path, num_inputs, /*add_bias=*/false);
  std::vector<int> experts;
  MatrixXd mixing;
  MatrixXd preds = RawPredictions(post, raw, mode,
                                  hme::GatingMode::kExpectedProbit, &experts,
                                  &mixing);
  WritePredictionCsv(out_path, raw.target_names, preds, &experts, &mixing);
  std::cout << "wrote " << preds.rows() << " predictions to " << out_path
            << "\n";
  return 0;
}

int RunEvaluate(const std::string& model_path, const std::string& test_path,
                int num_inputs, const std::string& metric,
                const std::string& mode_name, const std::string& out_path) {
  const hme::PredictMode mode = ParsePredictMode(mode_name);
  hme::HmePosterior post = LoadModel(model_path);
  Dataset raw = hme::load_delimited(test_path, num_inputs, /*add_bias=*/false);
  if (raw.targets.cols() == 0)
    throw hme::DataError("evaluate needs target columns in the test file");
  MatrixXd preds = RawPredictions(post, raw, mode,
                                  hme::GatingMode::kExpectedProbit, nullptr,
                                  nullptr);
  if (metric == "smse") {
    // Normalize by the training-set target variance when the model carries
    // standardization statistics; otherwise fall back to the test targets.
    VectorXd variances;
    if (post.standardization.has_value()) {
      variances = post.standardization->target_scale.array().square();
    } else {
      VectorXd mean = raw.targets.colwise().mean();
      variances = (raw.targets.rowwise() - mean.transpose())
                      .array()
                      .square()
                      .colwise()
                      .mean();
    }
    double smse = hme::standardized_mse(preds, raw.targets, variances);
    std::cout << "smse " << hme::FormatDouble(smse) << "\n";
    if (!out_path.empty()) {
      std::string body = "smse\n" + hme::FormatDouble(smse) + "\n";
      WriteFileOrThrow(out_path, body);
    }
    return 0;
  }
  if (metric == "end-effector") {
    if (raw.inputs.cols() != 2 || preds.cols() != 2)
      throw hme::DataError(
          "end-effector metric expects 2 input and 2 target columns");
    hme::ArmGeometry geom;
    std::string body = "x1,x2,theta1_pred,theta2_pred,error,region\n";
    std::vector<double> errors;
    errors.reserve(preds.rows());
    for (int i = 0; i < preds.rows(); ++i) {
      Eigen::Vector2d target = raw.inputs.row(i).transpose();
      Eigen::Vector2d angles = preds.row(i).transpose();
      double err = hme::end_effector_error(angles, target, geom);
      errors.push_back(err);
      body += hme::FormatDouble(target(0)) + "," +
              hme::FormatDouble(target(1)) + "," +
              hme::FormatDouble(angles(0)) + "," +
              hme::FormatDouble(angles(1)) + "," + hme::FormatDouble(err) +
              "," + std::to_string(static_cast<int>(hme::classify_arm_region(
                        target, geom))) +
              "\n";
    }
    std::sort(errors.begin(), errors.end());
    double median = errors.empty()
                        ? 0.0
                        : (errors.size() % 2
                               ? errors[errors.size() / 2]
                               : 0.5 * (errors[errors.size() / 2 - 1] +
                                        errors[errors.size() / 2]));
    std::cout << "median_end_effector_error " << hme::FormatDouble(median)
              << "\n";
    if (!out_path.empty()) WriteFileOrThrow(out_path, body);
    return 0;
  }
  throw std::invalid_argument("unknown --metric '" + metric +
                              "' (expected smse or end-effector)");
}

int RunBaseline(const std::string& train_path, const std::string& test_path,
                int num_inputs, int rbf_centers, int degree, double ridge,
                const std::string& out_path) {
  Dataset train = hme::load_delimited(train_path, num_inputs,
                                      /*add_bias=*/false);
  Dataset test = hme::load_delimited(test_path, num_inputs,
                                     /*add_bias=*/false);
  if (train.targets.cols() == 0)
    throw hme::DataError("baseline needs target columns in the training file");
  hme::FeatureConfig features;
  if (rbf_centers > 0) {
    features.rbf_centers = rbf_centers;
  } else {
    features.degree = degree;
  }
  hme::BaselineModel model = hme::fit_baseline(train, features, ridge);
  MatrixXd preds(test.num_points(), train.target_dim());
  for (int i = 0; i < test.num_points(); ++i) {
    preds.row(i) =
        hme::predict_baseline(model, test.inputs.row(i).transpose())
            .transpose();
  }
  WritePredictionCsv(out_path, train.target_names, preds, nullptr, nullptr);
  std::cout << "wrote " << preds.rows() << " predictions to " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational Bayesian hierarchical mixture-of-experts tool"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Synthesize a benchmark dataset");
  std::string gen_kind = "toy";
  int gen_n = 200;
  double gen_noise = 0.05;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--kind", gen_kind, "Dataset family: toy or arm");
  gen->add_option("--n", gen_n, "Number of rows")->check(CLI::PositiveNumber);
  gen->add_option("--noise-sd", gen_noise, "Noise level (toy only)");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output CSV path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a single mixture model");
  std::string train_data, train_topology, train_config, train_model,
      train_trace;
  int train_inputs = 1, train_experts = 0;
  std::uint64_t train_seed = 0;
  bool train_standardize = false;
  train->add_option("--data", train_data, "Training CSV")->required();
  train->add_option("--num-inputs", train_inputs,
                    "Number of leading input columns")
      ->required();
  train->add_option("--num-experts", train_experts,
                    "Number of experts (balanced tree)");
  train->add_option("--topology", train_topology, "Topology JSON file");
  train->add_option("--seed", train_seed, "Random seed");
  train->add_option("--config", train_config, "key=value config file");
  train->add_flag("--standardize", train_standardize,
                  "Standardize inputs and targets before training");
  train->add_option("--out-model", train_model, "Model JSON output")
      ->required();
  train->add_option("--trace", train_trace, "Per-sweep bound trace CSV");

  // select
  auto* select = app.add_subcommand(
      "select", "Sweep tree sizes and rank them by the evidence bound");
  std::string sel_data, sel_config, sel_prefix;
  int sel_inputs = 1, sel_min = 1, sel_max = 4, sel_restarts = 10,
      sel_threads = 0;
  std::uint64_t sel_seed = 0;
  bool sel_standardize = false;
  select->add_option("--data", sel_data, "Training CSV")->required();
  select->add_option("--num-inputs", sel_inputs,
                     "Number of leading input columns")
      ->required();
  select->add_option("--expert-min", sel_min, "Smallest expert count");
  select->add_option("--expert-max", sel_max, "Largest expert count");
  select->add_option("--restarts", sel_restarts, "Restarts per topology");
  select->add_option("--seed", sel_seed, "Base random seed");
  select->add_option("--config", sel_config, "key=value config file");
  select->add_option("--threads", sel_threads,
                     "Worker threads (0 = hardware default)");
  select->add_flag("--standardize", sel_standardize,
                   "Standardize inputs and targets before training");
  select->add_option("--out-prefix", sel_prefix, "Output file prefix")
      ->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Point predictions");
  std::string pred_model, pred_input, pred_out, pred_mode = "argmax";
  int pred_inputs = 1;
  predict->add_option("--model", pred_model, "Model JSON")->required();
  predict->add_option("--input", pred_input, "Input CSV")->required();
  predict->add_option("--num-inputs", pred_inputs,
                      "Number of leading input columns")
      ->required();
  predict->add_option("--mode", pred_mode, "argmax or mean");
  predict->add_option("--out", pred_out, "Prediction CSV output")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Test-set metrics");
  std::string eval_model, eval_test, eval_out, eval_metric = "smse",
                                               eval_mode = "argmax";
  int eval_inputs = 1;
  evaluate->add_option("--model", eval_model, "Model JSON")->required();
  evaluate->add_option("--test", eval_test, "Test CSV with targets")
      ->required();
  evaluate->add_option("--num-inputs", eval_inputs,
                       "Number of leading input columns")
      ->required();
  evaluate->add_option("--metric", eval_metric, "smse or end-effector");
  evaluate->add_option("--mode", eval_mode, "argmax or mean");
  evaluate->add_option("--out", eval_out, "Per-point output CSV");

  // baseline
  auto* baseline =
      app.add_subcommand("baseline", "Single-valued regression baseline");
  std::string base_train, base_test, base_out;
  int base_inputs = 1, base_rbf = 0, base_degree = 3;
  double base_ridge = 1e-8;
  baseline->add_option("--train", base_train, "Training CSV")->required();
  baseline->add_option("--test", base_test, "Test CSV")->required();
  baseline->add_option("--num-inputs", base_inputs,
                       "Number of leading input columns")
      ->required();
  baseline->add_option("--rbf-centers", base_rbf,
                       "Use an RBF expansion with this many centers");
  baseline->add_option("--degree", base_degree,
                       "Polynomial degree (when not using RBFs)");
  baseline->add_option("--ridge", base_ridge, "Ridge regularizer");
  baseline->add_option("--out", base_out, "Prediction CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed())
      return RunGenerate(gen_kind, gen_n, gen_noise, gen_seed, gen_out);
    if (train->parsed())
      return RunTrain(train_data, train_inputs, train_experts, train_topology,
                      train_seed, train_config, train_standardize, train_model,
                      train_trace);
    if (select->parsed())
      return RunSelect(sel_data, sel_inputs, sel_min, sel_max, sel_restarts,
                       sel_seed, sel_config, sel_standardize, sel_threads,
                       sel_prefix);
    if (predict->parsed())
      return RunPredict(pred_model, pred_input, pred_inputs, pred_mode,
                        pred_out);
    if (evaluate->parsed())
      return RunEvaluate(eval_model, eval_test, eval_inputs, eval_metric,
                         eval_mode, eval_out);
    if (baseline->parsed())
      return RunBaseline(base_train, base_test, base_inputs, base_rbf,
                         base_degree, base_ridge, base_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hme::DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return kExitData;
  } catch (const hme::StructureError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return kExitData;
  } catch (const hme::NumericalError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
