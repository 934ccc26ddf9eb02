// Copyright 2026 The faircal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "faircal/io.hpp"

namespace {

using namespace faircal;

constexpr int kExitSchema = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAssumption = 4;

void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty())
    std::cout << text;
  else
    write_text_atomic(output_path, text);
}

struct CommonFlags {
  std::string metric = "dp";
  std::string mode = "global";
  uint64_t seed = 1;
  int restarts = 10;
  int max_iters = 10000;
  double residual_tol = 1e-5;
  int min_subset = 50;
  double cond_max = 1e6;
  bool no_clip = false;
  int threads = 1;
  std::string output;
  std::string format = "json";

  void attach(CLI::App* cmd, bool with_mode) {
    cmd->add_option("--metric", metric, "Fairness metric")
        ->check(CLI::IsMember({"dp", "eod", "eop"}))
        ->capture_default_str();
    if (with_mode)
      cmd->add_option("--mode", mode, "Measurement mode")
          ->check(CLI::IsMember({"base", "global", "local"}))
          ->capture_default_str();
    cmd->add_option("--seed", seed, "Estimator seed")->capture_default_str();
    cmd->add_option("--restarts", restarts, "Solver restarts")
        ->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Solver iteration cap")
        ->capture_default_str();
    cmd->add_option("--residual-tol", residual_tol,
                    "Convergence gate on the solver objective")
        ->capture_default_str();
    cmd->add_option("--min-subset", min_subset,
                    "Smallest subset a local estimate may use")
        ->capture_default_str();
    cmd->add_option("--cond-max", cond_max,
                    "Condition-number gate for matrix inversion")
        ->capture_default_str();
    cmd->add_flag("--no-clip", no_clip,
                  "Keep calibrated entries outside [0,1]");
    cmd->add_option("--threads", threads,
                    "Worker threads (never changes results)")
        ->capture_default_str();
    cmd->add_option("--output", output, "Write the report here (atomic)");
    cmd->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
  }

  PipelineConfig pipeline() const {
    PipelineConfig cfg;
    cfg.hoc.restarts = restarts;
    cfg.hoc.max_iters = max_iters;
    cfg.hoc.residual_tol = residual_tol;
    cfg.hoc.min_subset = min_subset;
    cfg.hoc.cond_max = cond_max;
    cfg.hoc.seed = seed;
    cfg.hoc.threads = threads;
    cfg.clip = !no_clip;
    cfg.cond_max = cond_max;
    return cfg;
  }
};

int run(int argc, char** argv) {
  CLI::App app{
      "faircal: group-fairness measurement with noisy sensitive attributes, "
      "calibrated via transition-matrix estimation"};
  app.set_version_flag("--version", std::string("faircal ") + kVersion);
  app.require_subcommand(1);

  // measure
  auto* measure = app.add_subcommand(
      "measure", "Measure (and calibrate) fairness metrics from a CSV file");
  std::string csv_path;
  int m_override = 0, k_override = 0;
  CommonFlags mflags;
  measure->add_option("input", csv_path, "Input CSV file")->required();
  mflags.attach(measure, /*with_mode=*/true);
  measure->add_option("--m-groups", m_override,
                      "Override the inferred number of groups");
  measure->add_option("--k-classes", k_override,
                      "Override the inferred number of classes");

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Sample a synthetic dataset from a scenario document");
  std::string spec_path, out_csv;
  uint64_t sim_seed = 0;
  long sim_n = 0;
  std::string sim_output;
  simulate->add_option("--spec", spec_path, "Scenario JSON document")
      ->required();
  simulate->add_option("--out", out_csv, "Output CSV path")->required();
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");
  simulate->add_option("--n", sim_n, "Override the scenario sample count");
  simulate->add_option("--output", sim_output,
                       "Write the population report here instead of stdout");

  // bounds
  auto* bounds = app.add_subcommand(
      "bounds", "Evaluate the analytic error bounds of a scenario");
  std::string bounds_spec, bounds_metric = "dp", bounds_output;
  double perturb_t = 0.0, perturb_p = 0.0;
  uint64_t bounds_seed = 1;
  bounds->add_option("--spec", bounds_spec, "Scenario JSON document")
      ->required();
  bounds->add_option("--metric", bounds_metric, "Fairness metric")
      ->check(CLI::IsMember({"dp", "eod", "eop"}))
      ->capture_default_str();
  bounds->add_option("--perturb-t", perturb_t,
                     "Perturbation magnitude for the estimated T");
  bounds->add_option("--perturb-p", perturb_p,
                     "Perturbation magnitude for the estimated prior");
  bounds->add_option("--seed", bounds_seed, "Perturbation seed")
      ->capture_default_str();
  bounds->add_option("--output", bounds_output, "Report path");

  // experiment
  auto* experiment = app.add_subcommand(
      "experiment", "Run seeded measurement trials over a scenario");
  std::string exp_spec, exp_modes = "base,global,local", exp_table;
  int exp_trials = 10;
  CommonFlags eflags;
  experiment->add_option("--spec", exp_spec, "Scenario JSON document")
      ->required();
  experiment->add_option("--modes", exp_modes, "Comma-separated mode list")
      ->capture_default_str();
  experiment->add_option("--trials", exp_trials, "Number of trials")
      ->capture_default_str();
  experiment->add_option("--table", exp_table,
                         "Write the per-trial CSV table here");
  eflags.attach(experiment, /*with_mode=*/false);

  CLI11_PARSE(app, argc, argv);

  if (measure->parsed()) {
    Dataset ds = read_csv(csv_path,
                          k_override > 0 ? std::optional<int>(k_override)
                                         : std::nullopt,
                          m_override > 0 ? std::optional<int>(m_override)
                                         : std::nullopt);
    MetricKind kind = *metric_from_name(mflags.metric);
    PipelineMode mode = *mode_from_name(mflags.mode);
    PipelineConfig cfg = mflags.pipeline();
    MeasureArtifacts art = run_measure(ds, kind, mode, cfg);
    emit(mflags.format == "csv" ? measure_report_csv(art, ds, cfg)
                                : measure_report_json(art, ds, cfg),
         mflags.output);
    return 0;
  }

  if (simulate->parsed()) {
    ScenarioSpec spec = load_scenario(spec_path);
    if (simulate->count("--seed")) spec.seed = sim_seed;
    if (simulate->count("--n")) spec.n_samples = sim_n;
    Dataset ds = sample_dataset(spec);
    write_csv(out_csv, ds);
    PopulationMoments mom(spec);
    emit(simulate_report_json(spec, mom), sim_output);
    return 0;
  }

  if (bounds->parsed()) {
    ScenarioSpec spec = load_scenario(bounds_spec);
    MetricKind kind = *metric_from_name(bounds_metric);
    BoundsArtifacts art =
        run_bounds(spec, kind, perturb_t, perturb_p, bounds_seed);
    emit(bounds_report_json(art, spec), bounds_output);
    return 0;
  }

  if (experiment->parsed()) {
    ScenarioSpec spec = load_scenario(exp_spec);
    ExperimentConfig cfg;
    cfg.kind = *metric_from_name(eflags.metric);
    cfg.trials = exp_trials;
    cfg.seed = eflags.seed;
    cfg.pipeline = eflags.pipeline();
    cfg.threads = eflags.threads;
    cfg.modes.clear();
    std::stringstream ss(exp_modes);
    std::string token;
    while (std::getline(ss, token, ',')) {
      auto mode = mode_from_name(token);
      if (!mode) throw ValidationError("unknown mode '" + token + "'");
      cfg.modes.push_back(*mode);
    }
    if (cfg.modes.empty()) throw ValidationError("empty mode list");
    ExperimentTable table = run_experiment(spec, cfg);
    if (!exp_table.empty())
      write_text_atomic(exp_table, experiment_table_csv(table));
    emit(experiment_report_json(table, spec, cfg), eflags.output);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSchema;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  } catch (const AssumptionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitAssumption;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
