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
#include <string>
#include <vector>

#include "faircal/dataset.hpp"
#include "faircal/estimator.hpp"
#include "faircal/types.hpp"

namespace faircal {

enum class PipelineMode { Base, Global, Local };

const char* mode_name(PipelineMode mode);
std::optional<PipelineMode> mode_from_name(const std::string& name);

struct PipelineConfig {
  HocConfig hoc;
  bool clip = true;        // clip calibrated entries into [0,1]
  double cond_max = 1e6;   // gate for the matrix inversion
};

// Inverts the noise on one fairness-matrix column:
//   out = (T^T diag(p_hat))^-1 diag(p_tilde) noisy_col.
// Fails loudly instead of regularizing: cond1(T) above cond_max is a
// "near-singular transition", a non-positive p_hat entry a "degenerate
// prior". The result is not clipped.
Eigen::VectorXd calibrate_column(const Eigen::VectorXd& noisy_col,
                                 const TransitionMatrix& t,
                                 const Prior& p_hat, const Prior& p_tilde,
                                 double cond_max = 1e6);

struct ScopeDiagnostic {
  Scope scope;
  double condition_number = 0.0;
  double residual = 0.0;
  bool fallback = false;
};

struct CalibrationResult {
  FairnessMatrix h;  // noisy H-tilde in Base mode, calibrated H otherwise
  Eigen::ArrayXXd pre_clip;  // calibrated entries before clipping
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> clipped;
  bool any_clipped = false;
  PipelineMode mode = PipelineMode::Base;
  DisparityValue disparity;
  std::vector<ScopeDiagnostic> diagnostics;
  std::optional<EstimatedStats> estimates;
  std::vector<std::string> warnings;
};

// The end-to-end measurement pipeline. Base mode reports the uncalibrated
// noisy disparity built from attribute column 1. Global/Local estimate
// (T, p) from the noisy columns alone, calibrate every column with the
// scope-appropriate transition matrix, optionally clip, and reduce.
CalibrationResult run_pipeline(const Dataset& ds, MetricKind kind,
                               PipelineMode mode, const PipelineConfig& cfg);

// Calibrates with the empirical transition matrices and priors computed
// from the joint (true, noisy) sample. By the counting identity behind
// the closed-form relation this reproduces the empirical true H exactly,
// up to float error; it is the reference point for a perfect estimator.
CalibrationResult oracle_calibrate(const Dataset& ds, MetricKind kind,
                                   double cond_max = 1e9);

}  // namespace faircal
