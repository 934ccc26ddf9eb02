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
#include <string>
#include <vector>

#include "faircal/dataset.hpp"
#include "faircal/types.hpp"

namespace faircal {

struct HocConfig {
  int restarts = 10;
  int max_iters = 10000;
  double improve_tol = 1e-10;  // stop when a step improves J by less
  double residual_tol = 1e-5;  // convergence gate on the final objective
  int min_subset = 50;         // below this a local scope falls back to global
  double cond_max = 1e6;       // informativeness gate on the estimated T
  uint64_t seed = 1;
  int threads = 1;  // execution detail; results are independent of it
};

// First/second/third-order agreement frequencies of the per-sample noisy
// attribute triples. Each tensor is a probability distribution (sums to 1);
// c2 and c3 are stored fully symmetrized.
struct ConsensusStats {
  Eigen::VectorXd c1;       // M
  Eigen::MatrixXd c2;       // M x M
  std::vector<double> c3;   // M^3, index (a*M + b)*M + c
  long n_used = 0;

  int groups() const { return static_cast<int>(c1.size()); }
  double c3_at(int a, int b, int c) const {
    int m = groups();
    return c3[static_cast<size_t>((a * m + b) * m + c)];
  }
};

// Empirical consensus statistics of the masked triples: c1 from the first
// element, c2 from (first, second) symmetrized, c3 from the full triple
// symmetrized over all six orderings.
ConsensusStats consensus(const Eigen::MatrixXi& triples,
                         const std::vector<int>& rows, int m_groups);

// Closed-form consensus statistics of the generating model:
//   c1[a]     = sum_i p[i] T[i,a]
//   c2[a,b]   = sum_i p[i] T[i,a] T[i,b]
//   c3[a,b,c] = sum_i p[i] T[i,a] T[i,b] T[i,c]
// This is the forward model the solver fits.
ConsensusStats model_consensus(const Eigen::MatrixXd& t,
                               const Eigen::VectorXd& p);

struct HocSolution {
  TransitionMatrix transition;
  Prior prior;
  double residual = 0.0;
  // Whether trace canonicalization relabeled the groups of the best
  // restart's raw optimum.
  bool permutation_adjusted = false;
  int restarts_used = 0;
};

// Fits (T, p) to the consensus statistics by minimizing the summed squared
// moment mismatch over row-stochastic T and simplex p, then resolves the
// group-relabeling ambiguity by picking the row permutation of T (p
// permuted consistently) that maximizes trace(T). Throws SolverError when
// the best residual exceeds cfg.residual_tol and AssumptionError when the
// recovered T fails the condition gate.
HocSolution hoc_solve(const ConsensusStats& stats, const HocConfig& cfg,
                      uint64_t seed);

// Appends the noisy attributes of each sample's two nearest neighbors
// (Euclidean distance on raw features, self excluded, ties broken by the
// lower index) as extra columns, turning C columns into 3C. Deterministic.
Dataset get2nn(const Dataset& ds);

// Picks, per sample, an ordered triple of distinct noisy-attribute columns
// uniformly at random and returns the corresponding attribute values
// (N x 3). With exactly three columns this is a random permutation of them.
Eigen::MatrixXi sample_three(const Dataset& ds, uint64_t seed);

struct ScopeEstimate {
  TransitionMatrix transition;
  double residual = 0.0;
  bool fell_back_to_global = false;
};

struct EstimatedStats {
  MetricKind kind = MetricKind::DP;
  bool local = false;
  // One entry per fairness-matrix column scope: K for DP, K^2 for EOd
  // (index K*(k-1)+y-1), 1 for EOp.
  std::vector<ScopeEstimate> transitions;
  Prior prior;  // global clean-prior estimate
  TransitionMatrix global_transition;
  std::vector<Prior> label_priors;  // p_y for EOd (EOp keeps only y=1)
  std::vector<bool> label_prior_fallback;
  double global_residual = 0.0;
  int restarts_used = 0;
  std::vector<std::string> warnings;

  const ScopeEstimate& scope_for(int k, int y, int k_classes) const;
};

// The full estimation pipeline: simulate extra noisy copies via 2-NN when
// fewer than three attribute columns exist, sample a triple per instance,
// fit the global (T, p), and, in local mode, refit T on each prediction
// (and label) subset. For EOd/EOp the per-label priors are estimated from
// the label subsets in both modes. Subsets smaller than cfg.min_subset
// fall back to the global estimate with a recorded warning.
EstimatedStats hocfair(const Dataset& ds, MetricKind kind, bool local,
                       const HocConfig& cfg);

}  // namespace faircal
