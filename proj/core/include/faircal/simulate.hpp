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

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "faircal/bounds.hpp"
#include "faircal/calibrate.hpp"
#include "faircal/dataset.hpp"
#include "faircal/types.hpp"

namespace faircal {

// How the noisy attributes depend on the rest of the sample. Global means
// one transition matrix for everything (conditional independence holds);
// the other levels attach one matrix per predicted class or per
// (prediction, label) cell, which lets the simulator violate conditional
// independence on purpose.
enum class NoiseScope { Global, PerPrediction, PerPredictionLabel };

struct FeatureSpec {
  int dim = 2;
  // Group a's centroid is `separation` along axis (a-1) mod dim; samples
  // get isotropic Gaussian noise. Large separation / small sd makes the
  // two nearest neighbors share the true attribute.
  double separation = 6.0;
  double noise_sd = 1.0;
};

// A fully specified synthetic population plus sampling directions.
// Sampling order: A ~ prior, Y | A, f | (A, Y), then each noisy copy from
// the transition matrix matching (f, Y).
struct ScenarioSpec {
  int m_groups = 2;
  int k_classes = 2;
  Eigen::VectorXd prior;                    // M
  Eigen::MatrixXd label_given_group;        // M x K, rows P(Y | A = a)
  Eigen::MatrixXd pred_given_group_label;   // M x K^2, col K*(k-1)+y
  NoiseScope noise_scope = NoiseScope::Global;
  std::vector<Eigen::MatrixXd> noise;       // 1, K, or K^2 matrices
  int c_models = 3;
  bool iid_copies = true;  // false: every column repeats the first draw
  long n_samples = 0;
  uint64_t seed = 0;
  std::optional<FeatureSpec> features;
};

// Uniform Y, prediction rates independent of Y. pred_given_group is M x K.
ScenarioSpec make_dp_scenario(const Eigen::VectorXd& prior,
                              const Eigen::MatrixXd& pred_given_group,
                              const Eigen::MatrixXd& noise_t, long n_samples,
                              uint64_t seed, int c_models = 3);

ScenarioSpec validate_scenario(ScenarioSpec spec);

// Exact moments of a scenario, all derived from the closed-form joint
// P(A, Y, f, noisy A). No sampling anywhere.
class PopulationMoments {
 public:
  explicit PopulationMoments(const ScenarioSpec& spec);

  int m_groups() const { return m_; }
  int k_classes() const { return k_; }

  FairnessMatrix true_h(MetricKind kind) const;
  FairnessMatrix noisy_h(MetricKind kind) const;
  double true_disparity(MetricKind kind) const;
  double noisy_disparity(MetricKind kind) const;

  Prior prior() const;
  Prior noisy_prior() const;
  Prior label_prior(int y) const;        // P(A | Y = y)
  Prior noisy_label_prior(int y) const;  // P(noisy A | Y = y)

  TransitionMatrix t_global() const;
  TransitionMatrix t_prediction(int k) const;
  TransitionMatrix t_label(int y) const;
  TransitionMatrix t_prediction_label(int k, int y) const;

  // Noisy-to-clean error rates of the binary case (Bayes inversion of the
  // global transition matrix): e1 = P(A=1 | noisy A=2), e2 = P(A=2 | noisy A=1).
  double e1() const;
  double e2() const;

  // Ground-truth-based inputs for bound_raw / bound_cal.
  BoundInputs bound_inputs(MetricKind kind) const;

  // P(A=a, Y=y, f=k, noisy=b), indexed (((a*K + y)*K + k)*M + b), 0-based.
  const std::vector<double>& joint() const { return joint_; }

 private:
  double at(int a, int y, int k, int b) const;  // 0-based joint lookup
  double marginal3(int a, int y, int k) const;
  int m_ = 0, k_ = 0;
  std::vector<double> joint_;
  // Kept so that accessors can return the spec's matrices bit-exactly
  // whenever the scope structure makes a conditional constant.
  NoiseScope noise_scope_ = NoiseScope::Global;
  std::vector<Eigen::MatrixXd> noise_;
};

PopulationMoments population_moments(const ScenarioSpec& spec);

// Draws spec.n_samples i.i.d. samples (with true attributes, and features
// when requested). Identical bytes for identical specs.
Dataset sample_dataset(const ScenarioSpec& spec);

// Re-draws every noisy attribute through the flip matrix built from the
// given off-diagonal rates (diagonal = 1 - row sum), independently per
// column. Labels, predictions, true attributes, features are untouched.
Dataset flip_attributes(const Dataset& ds, const Eigen::MatrixXd& off_diag,
                        uint64_t seed);
Eigen::MatrixXd flip_matrix(const Eigen::MatrixXd& off_diag);

// Controlled imperfect estimates: add uniform noise of the given magnitude
// and re-project onto row-stochastic / simplex form. Deterministic.
TransitionMatrix perturb_transition(const TransitionMatrix& t,
                                    double magnitude, uint64_t seed);
Prior perturb_prior(const Prior& p, double magnitude, uint64_t seed);

// Exact (no sampling) disparity of the calibrated metric when the given
// estimates are plugged into the closed-form correction of the population
// noisy fairness matrix. t_hat is indexed like BoundInputs::t_scope,
// p_hat like BoundInputs::p. Entries are not clipped.
double exact_calibrated_disparity(const PopulationMoments& mom,
                                  MetricKind kind,
                                  const std::vector<TransitionMatrix>& t_hat,
                                  const std::vector<Prior>& p_hat,
                                  double cond_max = 1e9);

struct TrialResult {
  int trial = 0;
  PipelineMode mode = PipelineMode::Base;
  double disparity = 0.0;
  double raw_error = 0.0;
  std::optional<double> normalized_error;
  std::optional<double> improvement;
  std::optional<double> bound_cal;  // truth-based, from this trial's estimates
  bool win_vs_base = false;
};

struct ModeSummary {
  PipelineMode mode = PipelineMode::Base;
  double mean_raw_error = 0.0;
  double std_raw_error = 0.0;
  double mean_normalized_error = 0.0;
  double std_normalized_error = 0.0;
  double win_rate_vs_base = 0.0;
};

struct ExperimentTable {
  MetricKind kind = MetricKind::DP;
  double true_disparity = 0.0;
  double noisy_disparity_population = 0.0;
  double bound_raw_population = 0.0;
  std::optional<double> gamma;  // binary DP only
  std::vector<TrialResult> rows;
  std::vector<ModeSummary> summaries;
};

struct ExperimentConfig {
  MetricKind kind = MetricKind::DP;
  std::vector<PipelineMode> modes = {PipelineMode::Base, PipelineMode::Global};
  int trials = 10;
  uint64_t seed = 1;
  PipelineConfig pipeline;
  int threads = 1;
};

// Samples `trials` datasets with derived seeds, runs every mode on each,
// scores against the scenario's exact disparity, and aggregates. Trials
// are independent; the table does not depend on the thread count.
ExperimentTable run_experiment(const ScenarioSpec& spec,
                               const ExperimentConfig& cfg);

}  // namespace faircal
