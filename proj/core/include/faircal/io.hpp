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

#pragma once

#include <optional>
#include <string>

#include "faircal/bounds.hpp"
#include "faircal/calibrate.hpp"
#include "faircal/dataset.hpp"
#include "faircal/simulate.hpp"

namespace faircal {

// CSV schema: header row required; columns `y` and `fpred` (ints in
// [1,K]), optional `a` (int in [1,M]), `a1..aC` (ints in [1,M]), optional
// `x1..xd` (reals). Comma separated, UTF-8, no quoting. K and M are
// inferred from the data unless overridden. Errors name the offending
// row (1-based, counting the header as row 1) and column.
Dataset read_csv(const std::string& path,
                 std::optional<int> k_classes = std::nullopt,
                 std::optional<int> m_groups = std::nullopt);
void write_csv(const std::string& path, const Dataset& ds);

// Scenario documents are JSON; see docs/formats.md for the schema.
ScenarioSpec parse_scenario_json(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);
std::string scenario_to_json(const ScenarioSpec& spec);

// Rounds to `digits` significant digits. Report serialization passes every
// double through this so that reports are byte-stable.
double round_sig(double x, int digits = 10);

// Writes via a temp file in the same directory plus rename.
void write_text_atomic(const std::string& path, const std::string& text);

// Everything the measure command computes. The base (uncalibrated) result
// is always present; calibration only for Global/Local mode; truth-derived
// fields only when the dataset carries true attributes.
struct MeasureArtifacts {
  MetricKind kind = MetricKind::DP;
  PipelineMode mode = PipelineMode::Base;
  CalibrationResult base;
  std::optional<CalibrationResult> calibrated;
  std::optional<DisparityValue> truth;
  std::optional<EvalReport> evaluation;        // selected estimate vs truth
  std::optional<EvalReport> base_evaluation;   // base vs truth
  std::optional<CalibrationResult> oracle;     // perfect-estimator reference
  std::optional<double> oracle_max_abs_dev;    // vs empirical true H
  std::optional<double> bound_raw_value;
  std::optional<double> bound_cal_value;
  std::string bound_basis;  // "true", "estimate", or "" when unavailable
};

MeasureArtifacts run_measure(const Dataset& ds, MetricKind kind,
                             PipelineMode mode, const PipelineConfig& cfg);

// Deterministic JSON (sorted keys, 10 significant digits). The config
// echo excludes execution-only knobs such as the thread count.
std::string measure_report_json(const MeasureArtifacts& art,
                                const Dataset& ds,
                                const PipelineConfig& cfg);
// Flat key,value rendering of the same report.
std::string measure_report_csv(const MeasureArtifacts& art,
                               const Dataset& ds, const PipelineConfig& cfg);

std::string simulate_report_json(const ScenarioSpec& spec,
                                 const PopulationMoments& moments);

// Exact-population bound diagnostics for a scenario, optionally with
// perturbed estimates standing in for an imperfect estimator.
struct BoundsArtifacts {
  MetricKind kind = MetricKind::DP;
  double true_disparity = 0.0;
  double noisy_disparity = 0.0;
  double exact_raw_error = 0.0;
  double bound_raw_value = 0.0;
  std::optional<double> e1, e2, delta, binary_ci_exact_value;  // binary
  std::optional<double> gamma;                            // binary DP
  std::optional<double> epsilon_max;     // max over scopes, with estimates
  std::optional<double> bound_cal_value;
  std::optional<double> exact_cal_error;
};

BoundsArtifacts run_bounds(const ScenarioSpec& spec, MetricKind kind,
                           double perturb_t, double perturb_p,
                           uint64_t seed);
std::string bounds_report_json(const BoundsArtifacts& art,
                               const ScenarioSpec& spec);

std::string experiment_report_json(const ExperimentTable& table,
                                   const ScenarioSpec& spec,
                                   const ExperimentConfig& cfg);
std::string experiment_table_csv(const ExperimentTable& table);

}  // namespace faircal
