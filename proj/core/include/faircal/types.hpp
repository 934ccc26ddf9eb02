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
#include <optional>
#include <stdexcept>
#include <string>

namespace faircal {

inline constexpr const char* kVersion = "0.1.0";

// Tolerance used when checking that stochastic vectors/rows sum to one.
inline constexpr double kStochasticTol = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data, files, or arguments. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The moment-matching solver failed to reach its residual gate. Exit code 3.
class SolverError : public Error {
 public:
  using Error::Error;
};

// A model assumption is violated (singular transition, degenerate prior,
// zero disparity where a positive one is required). Exit code 4.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

enum class MetricKind { DP, EOd, EOp };

const char* metric_name(MetricKind kind);
std::optional<MetricKind> metric_from_name(const std::string& name);

// Number of columns of the fairness matrix for a metric: K, K^2, or 1.
int metric_columns(MetricKind kind, int k_classes);

// Identifies which conditional a transition matrix (or solver run) refers
// to: the whole sample, one predicted class k, or one (k, y) cell. k and y
// are 1-based.
struct Scope {
  enum class Level { Global, Prediction, PredictionLabel, Label };
  Level level = Level::Global;
  int k = 0;
  int y = 0;

  static Scope global() { return {}; }
  static Scope prediction(int k) { return {Level::Prediction, k, 0}; }
  static Scope prediction_label(int k, int y) {
    return {Level::PredictionLabel, k, y};
  }
  static Scope label(int y) { return {Level::Label, 0, y}; }
  std::string name() const;
  bool operator==(const Scope&) const = default;
};

// Row-stochastic M x M matrix of attribute noise rates. Rows index the
// clean attribute, columns the noisy one. Invertibility is deliberately
// not an invariant; use sites gate on the condition number instead.
class TransitionMatrix {
 public:
  TransitionMatrix(Eigen::MatrixXd entries, Scope scope);

  const Eigen::MatrixXd& entries() const { return entries_; }
  const Scope& scope() const { return scope_; }
  int groups() const { return static_cast<int>(entries_.rows()); }
  TransitionMatrix with_scope(Scope scope) const {
    return TransitionMatrix(entries_, scope);
  }

 private:
  Eigen::MatrixXd entries_;
  Scope scope_;
};

// Probability vector over the M sensitive groups, optionally conditioned
// on a label value.
class Prior {
 public:
  explicit Prior(Eigen::VectorXd probs);
  Prior(Eigen::VectorXd probs, int given_label);

  const Eigen::VectorXd& probs() const { return probs_; }
  int groups() const { return static_cast<int>(probs_.size()); }
  bool conditioned_on_label() const { return given_label_.has_value(); }
  int given_label() const { return given_label_.value(); }

 private:
  Eigen::VectorXd probs_;
  std::optional<int> given_label_;
};

// M x cols matrix of conditional prediction rates, one row per group.
// cols is K for DP, K^2 for EOd (column K(k-1)+y), and 1 for EOp.
// Entries of empirical matrices live in [0,1]; calibrated matrices may
// leave that range before clipping, so no range invariant is enforced.
class FairnessMatrix {
 public:
  FairnessMatrix(Eigen::MatrixXd entries, MetricKind kind, int k_classes);

  const Eigen::MatrixXd& entries() const { return entries_; }
  MetricKind kind() const { return kind_; }
  int groups() const { return static_cast<int>(entries_.rows()); }
  int k_classes() const { return k_classes_; }
  int columns() const { return static_cast<int>(entries_.cols()); }

 private:
  Eigen::MatrixXd entries_;
  MetricKind kind_;
  int k_classes_;
};

struct DisparityValue {
  enum class Source { True, Noisy, Calibrated };
  double value = 0.0;
  MetricKind kind = MetricKind::DP;
  Source source = Source::True;
};

// The three errors used to score a disparity estimate against the truth.
// normalized_error is absent when the true disparity is zero, improvement
// when the baseline raw error is zero.
struct EvalReport {
  double raw_error = 0.0;
  std::optional<double> normalized_error;
  std::optional<double> improvement;
};

// Matrix norms under the conventions used throughout: the induced 1-norm
// is the max absolute column sum, the infinity norm the max absolute row
// sum, so that norm1(A) == norm_inf(A^T).
double norm1(const Eigen::MatrixXd& a);
double norm_inf(const Eigen::MatrixXd& a);

// Exact 1-norm condition number via explicit inverse (M is small).
// Returns +inf for singular input.
double cond1(const Eigen::MatrixXd& a);

}  // namespace faircal
