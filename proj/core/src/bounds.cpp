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

#include "faircal/bounds.hpp"

#include <cmath>
#include <sstream>

namespace faircal {

namespace {

struct Term {
  int column;  // 0-based column of H
  int scope;   // index into t_scope / t_hat
  int ref;     // index into t_ref / p / p_tilde / p_hat
};

// Column scopes and the prefactor multiplying the per-column terms.
std::pair<std::vector<Term>, double> terms_for(const FairnessMatrix& h,
                                               MetricKind kind) {
  std::vector<Term> terms;
  int kk = h.k_classes();
  double prefactor = 1.0;
  switch (kind) {
    case MetricKind::DP:
      for (int k = 0; k < kk; ++k) terms.push_back({k, k, 0});
      prefactor = 1.0 / kk;
      break;
    case MetricKind::EOd:
      for (int k = 0; k < kk; ++k)
        for (int y = 0; y < kk; ++y) {
          int col = kk * k + y;
          terms.push_back({col, col, y});
        }
      prefactor = 1.0 / (kk * kk);
      break;
    case MetricKind::EOp:
      terms.push_back({0, 0, 0});
      prefactor = 1.0;
      break;
  }
  return {terms, prefactor};
}

void check_sizes(const BoundInputs& in, MetricKind kind, bool need_hat) {
  auto [terms, prefactor] = terms_for(in.true_h, kind);
  (void)prefactor;
  size_t scopes = terms.size();
  size_t refs = 0;
  for (const Term& t : terms) refs = std::max(refs, size_t(t.ref + 1));
  if (in.t_scope.size() != scopes || in.t_ref.size() < refs ||
      in.p.size() < refs || in.p_tilde.size() < refs)
    throw ValidationError("bound inputs: scope/reference sizes do not match "
                          "the metric kind");
  if (need_hat && (in.t_hat.size() != scopes || in.p_hat.size() < refs))
    throw ValidationError("bound inputs: estimates are required");
}

bool same_entries(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() == 0.0;
}

Eigen::MatrixXd solve_right(const Eigen::MatrixXd& a,
                            const Eigen::MatrixXd& denom) {
  // a * denom^-1, with a loud failure on singular denom.
  if (!std::isfinite(cond1(denom)))
    throw AssumptionError("singular transition matrix in bound evaluation");
  return denom.transpose().partialPivLu().solve(a.transpose()).transpose();
}

}  // namespace

std::pair<double, double> column_mean_deviation(const FairnessMatrix& h, int column) {
  if (column < 1 || column > h.columns())
    throw ValidationError("column_mean_deviation: column out of range");
  Eigen::VectorXd col = h.entries().col(column - 1);
  double bar = col.mean();
  double delta = (col.array() - bar).abs().maxCoeff();
  return {bar, delta};
}

double bound_raw(const BoundInputs& in, MetricKind kind) {
  check_sizes(in, kind, /*need_hat=*/false);
  auto [terms, prefactor] = terms_for(in.true_h, kind);
  const int m = in.true_h.groups();
  double total = 0.0;
  for (const Term& t : terms) {
    auto [h_bar, delta] = column_mean_deviation(in.true_h, t.column + 1);
    const Eigen::MatrixXd& ts = in.t_scope[t.scope].entries();
    const Eigen::MatrixXd& tr = in.t_ref[t.ref].entries();
    const Eigen::VectorXd& p = in.p[t.ref].probs();
    const Eigen::VectorXd& pt = in.p_tilde[t.ref].probs();
    if (pt.minCoeff() <= 0.0)
      throw AssumptionError("bound_raw: noisy prior has a zero entry");

    // Conditional-independence violation term; identically zero when the
    // scoped matrix is the reference one.
    double ci = 0.0;
    if (!same_entries(ts, tr)) {
      if (!std::isfinite(cond1(tr)))
        throw AssumptionError("bound_raw: singular reference transition");
      Eigen::MatrixXd ratio = tr.partialPivLu().solve(ts);  // T_ref^-1 T_s
      Eigen::MatrixXd inner = pt.asDiagonal() *
                              (ratio - Eigen::MatrixXd::Identity(m, m)) *
                              pt.cwiseInverse().asDiagonal();
      ci = 2.0 * h_bar * norm1(inner);
    }

    // Noise-rate term: both Holder splits are valid upper bounds; take the
    // tighter. The second collapses the binary conditionally independent
    // case to binary_ci_exact_error exactly.
    Eigen::MatrixXd fwd = p.asDiagonal() * ts * pt.cwiseInverse().asDiagonal();
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
    double route_a = 2.0 * norm1(fwd - eye);
    double route_b = m * norm1(fwd.transpose() - eye);
    total += ci + delta * std::min(route_a, route_b);
  }
  return prefactor * total;
}

double binary_ci_exact_error(double e1, double e2, double delta) {
  if (e1 < 0.0 || e1 >= 1.0 || e2 < 0.0 || e2 >= 1.0)
    throw ValidationError("binary_ci_exact_error: e1 and e2 must lie in [0,1)");
  if (delta < 0.0 || delta > 0.5)
    throw ValidationError("binary_ci_exact_error: delta must lie in [0, 0.5]");
  return 2.0 * delta * (e1 + e2);
}

double epsilon_cal(const TransitionMatrix& t_true,
                   const TransitionMatrix& t_hat, const Prior& p_true,
                   const Prior& p_hat) {
  if (p_hat.probs().minCoeff() <= 0.0)
    throw AssumptionError("epsilon_cal: degenerate estimated prior");
  const int m = t_true.groups();
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd ratio =
      same_entries(t_true.entries(), t_hat.entries())
          ? eye
          : solve_right(t_true.entries(), t_hat.entries());
  double prior_term =
      same_entries(p_true.probs(), p_hat.probs())
          ? 0.0
          : norm1(Eigen::MatrixXd(
                (p_true.probs().array() / p_hat.probs().array() - 1.0)
                    .matrix()
                    .asDiagonal()));
  return prior_term * norm1(ratio) + norm1(eye - ratio);
}

double bound_cal(const BoundInputs& in, MetricKind kind) {
  check_sizes(in, kind, /*need_hat=*/true);
  auto [terms, prefactor] = terms_for(in.true_h, kind);
  double total = 0.0;
  for (const Term& t : terms) {
    const Eigen::VectorXd& p = in.p[t.ref].probs();
    if (p.minCoeff() <= 0.0)
      throw AssumptionError("bound_cal: prior has a zero entry");
    double inv_p = 1.0 / p.minCoeff();  // |diag(p)^-1|_1
    Eigen::VectorXd scaled =
        p.asDiagonal() * in.true_h.entries().col(t.column);
    double eps = epsilon_cal(in.t_scope[t.scope], in.t_hat[t.scope],
                             in.p[t.ref], in.p_hat[t.ref]);
    total += inv_p * scaled.cwiseAbs().maxCoeff() * eps;
  }
  return 2.0 * prefactor * total;
}

double gamma_threshold(double e1, double e2, const FairnessMatrix& true_h,
                       double true_disparity) {
  if (true_h.groups() != 2 || true_h.kind() != MetricKind::DP ||
      true_h.k_classes() != 2)
    throw ValidationError("gamma_threshold: binary DP (M=K=2) only");
  if (!(true_disparity > 0.0))
    throw AssumptionError("gamma_threshold: zero disparity");
  double best = 0.0;
  for (int k = 0; k < 2; ++k) {
    double col_norm = true_h.entries().col(k).cwiseAbs().sum();
    best = std::max(best, (e1 + e2) / (1.0 + col_norm / true_disparity));
  }
  return best;
}

}  // namespace faircal
