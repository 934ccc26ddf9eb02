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

#include <utility>
#include <vector>

#include "faircal/types.hpp"

namespace faircal {

// Inputs for the analytic error bounds. Quantities are indexed per scope:
//   DP : t_scope has K entries (one per predicted class), t_ref/p/p_tilde
//        have one entry (the global transition matrix and priors).
//   EOd: t_scope has K^2 entries (column order K*(k-1)+y), t_ref/p/p_tilde
//        have K entries (conditioned on the label y).
//   EOp: one scope (k=1, y=1); t_ref/p/p_tilde hold the y=1 conditionals.
// t_hat/p_hat mirror t_scope/p and are required only by bound_cal.
// The bounds are exact-population statements: fill these with ground truth
// (simulation) or with estimates, and label the result accordingly.
struct BoundInputs {
  FairnessMatrix true_h;
  std::vector<TransitionMatrix> t_scope;
  std::vector<TransitionMatrix> t_ref;
  std::vector<Prior> p;
  std::vector<Prior> p_tilde;
  std::vector<TransitionMatrix> t_hat;
  std::vector<Prior> p_hat;
};

// Mean of one H column and the max absolute deviation from that mean.
std::pair<double, double> column_mean_deviation(const FairnessMatrix& h, int column);

// Upper bound on |noisy disparity - true disparity|. Per column scope the
// bound adds a conditional-independence-violation term, which vanishes
// when the scoped transition matrix equals the reference one, and a
// noise-rate term. The noise-rate term takes the tighter of the two valid
// Holder splits, which makes the binary conditionally-independent case
// collapse exactly to binary_ci_exact_error.
double bound_raw(const BoundInputs& in, MetricKind kind);

// Exact error of the noisy metric for a binary classifier and binary
// attribute under conditional independence: 2 * delta * (e1 + e2), where
// e1 = P(A=1 | noisy A = 2), e2 = P(A=2 | noisy A = 1), and delta is half
// the gap between the two groups' positive rates.
double binary_ci_exact_error(double e1, double e2, double delta);

// Calibration error functional:
//   eps = |diag(p_hat)^-1 diag(p) - I|_1 * |T T_hat^-1|_1
//       + |I - T T_hat^-1|_1.
double epsilon_cal(const TransitionMatrix& t_true,
                   const TransitionMatrix& t_hat, const Prior& p_true,
                   const Prior& p_hat);

// Upper bound on |calibrated disparity - true disparity| given the
// estimates in `in.t_hat` / `in.p_hat`. Zero for a perfect estimator.
double bound_cal(const BoundInputs& in, MetricKind kind);

// Binary-DP threshold on epsilon_cal below which calibration is
// guaranteed to beat the raw noisy metric (uniform prior case):
//   gamma = max_{k'} (e1 + e2) / (1 + |H[:,k']|_1 / disparity).
double gamma_threshold(double e1, double e2, const FairnessMatrix& true_h,
                       double true_disparity);

}  // namespace faircal
