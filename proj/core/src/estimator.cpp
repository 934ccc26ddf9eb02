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

#include "faircal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "faircal/metrics.hpp"
#include "faircal/parallel.hpp"
#include "faircal/rng.hpp"

namespace faircal {

ConsensusStats consensus(const Eigen::MatrixXi& triples,
                         const std::vector<int>& rows, int m_groups) {
  if (rows.empty()) throw ValidationError("consensus: empty subset");
  const int m = m_groups;
  ConsensusStats out;
  out.c1 = Eigen::VectorXd::Zero(m);
  out.c2 = Eigen::MatrixXd::Zero(m, m);
  out.c3.assign(static_cast<size_t>(m) * m * m, 0.0);
  for (int r : rows) {
    int a = triples(r, 0) - 1;
    int b = triples(r, 1) - 1;
    int c = triples(r, 2) - 1;
    out.c1[a] += 1.0;
    out.c2(a, b) += 1.0;
    out.c3[static_cast<size_t>((a * m + b) * m + c)] += 1.0;
  }
  const double n = static_cast<double>(rows.size());
  out.c1 /= n;
  out.c2 /= n;
  out.c2 = 0.5 * (out.c2 + out.c2.transpose()).eval();
  // Symmetrize c3 over the six orderings of each index triple.
  std::vector<double> sym(out.c3.size(), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        double s = out.c3[(a * m + b) * m + c] + out.c3[(a * m + c) * m + b] +
                   out.c3[(b * m + a) * m + c] + out.c3[(b * m + c) * m + a] +
                   out.c3[(c * m + a) * m + b] + out.c3[(c * m + b) * m + a];
        sym[(a * m + b) * m + c] = s / 6.0;
      }
  for (auto& v : sym) v /= n;
  out.c3 = std::move(sym);
  out.n_used = static_cast<long>(rows.size());
  return out;
}

ConsensusStats model_consensus(const Eigen::MatrixXd& t,
                               const Eigen::VectorXd& p) {
  const int m = static_cast<int>(p.size());
  ConsensusStats out;
  out.c1 = Eigen::VectorXd::Zero(m);
  out.c2 = Eigen::MatrixXd::Zero(m, m);
  out.c3.assign(static_cast<size_t>(m) * m * m, 0.0);
  for (int i = 0; i < m; ++i) {
    out.c1 += p[i] * t.row(i).transpose();
    out.c2 += p[i] * (t.row(i).transpose() * t.row(i));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          out.c3[(a * m + b) * m + c] += p[i] * t(i, a) * t(i, b) * t(i, c);
  }
  out.n_used = 0;
  return out;
}

namespace {

// Unconstrained parameterization: theta = [u (M), V (M x M, row major)],
// p = softmax(u), T rows = softmax of V rows.
struct HocObjective {
  const ConsensusStats& stats;
  int m;

  int dims() const { return m + m * m; }

  void unpack(const Eigen::VectorXd& theta, Eigen::VectorXd& p,
              Eigen::MatrixXd& t) const {
    p = softmax(theta.head(m));
    t.resize(m, m);
    for (int i = 0; i < m; ++i)
      t.row(i) = softmax(theta.segment(m + i * m, m)).transpose();
  }

  static Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
  }

  // J and, when grad != nullptr, dJ/dtheta.
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    Eigen::VectorXd p;
    Eigen::MatrixXd t;
    unpack(theta, p, t);

    Eigen::VectorXd r1 = -stats.c1;
    Eigen::MatrixXd r2 = -stats.c2;
    std::vector<double> r3(stats.c3.size());
    for (size_t i = 0; i < r3.size(); ++i) r3[i] = -stats.c3[i];
    for (int i = 0; i < m; ++i) {
      r1 += p[i] * t.row(i).transpose();
      r2 += p[i] * (t.row(i).transpose() * t.row(i));
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int c = 0; c < m; ++c)
            r3[(a * m + b) * m + c] += p[i] * t(i, a) * t(i, b) * t(i, c);
    }
    double j = r1.squaredNorm() + r2.squaredNorm();
    for (double v : r3) j += v * v;
    if (!grad) return j;

    // r2 and r3 are index-symmetric (model and symmetrized data), which
    // collapses their gradient contributions to single sums.
    Eigen::VectorXd gp = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      double acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      for (int a = 0; a < m; ++a) {
        acc1 += r1[a] * t(i, a);
        double s2 = 0.0, s3 = 0.0;
        for (int b = 0; b < m; ++b) {
          s2 += r2(a, b) * t(i, b);
          double inner = 0.0;
          for (int c = 0; c < m; ++c)
            inner += r3[(a * m + b) * m + c] * t(i, c);
          s3 += inner * t(i, b);
        }
        acc2 += s2 * t(i, a);
        acc3 += s3 * t(i, a);
        gt(i, a) = 2.0 * p[i] * (r1[a] + 2.0 * s2 + 3.0 * s3);
      }
      gp[i] = 2.0 * (acc1 + acc2 + acc3);
    }

    grad->resize(dims());
    // Chain through the softmax of p and of each row of T.
    double dot = p.dot(gp);
    for (int jx = 0; jx < m; ++jx) (*grad)[jx] = p[jx] * (gp[jx] - dot);
    for (int i = 0; i < m; ++i) {
      double rowdot = t.row(i).dot(gt.row(i));
      for (int a = 0; a < m; ++a)
        (*grad)[m + i * m + a] = t(i, a) * (gt(i, a) - rowdot);
    }
    return j;
  }
};

struct RawSolution {
  Eigen::VectorXd p;
  Eigen::MatrixXd t;
  double residual = 0.0;
};

RawSolution minimize(const HocObjective& obj, Eigen::VectorXd theta,
                     const HocConfig& cfg) {
  Eigen::VectorXd grad, trial_grad;
  double j = obj.eval(theta, &grad);
  double lr = 0.5;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    double g2 = grad.squaredNorm();
    if (g2 < 1e-26) break;
    // Backtracking line search with Armijo acceptance.
    double j_new = j;
    Eigen::VectorXd theta_new;
    bool accepted = false;
    while (lr > 1e-18) {
      theta_new = theta - lr * grad;
      j_new = obj.eval(theta_new, &trial_grad);
      if (j_new <= j - 1e-4 * lr * g2) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
    double improvement = j - j_new;
    theta = std::move(theta_new);
    j = j_new;
    grad.swap(trial_grad);
    lr = std::min(lr * 1.5, 8.0);
    if (improvement < cfg.improve_tol) break;
  }
  RawSolution out;
  obj.unpack(theta, out.p, out.t);
  out.residual = j;
  return out;
}

Eigen::VectorXd log_clamped(const Eigen::VectorXd& v) {
  return (v.array().max(1e-9)).log().matrix();
}

Eigen::VectorXd initial_theta(const HocObjective& obj, int restart, Rng& rng) {
  const int m = obj.m;
  Eigen::VectorXd theta(obj.dims());
  if (restart == 0) {
    // Moment warm start: p from c1, T rows from the row-normalized pair
    // counts (exact when T is close to identity).
    theta.head(m) = log_clamped(obj.stats.c1);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd row = obj.stats.c2.row(i).transpose();
      double s = row.sum();
      if (s <= 0) row = Eigen::VectorXd::Constant(m, 1.0 / m);
      else row /= s;
      theta.segment(m + i * m, m) = log_clamped(row);
    }
    return theta;
  }
  for (int i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-1.0, 1.0);
  // Nudge toward diagonally dominant transitions; the informative basin
  // is the one the canonicalization keeps anyway.
  for (int i = 0; i < m; ++i) theta[m + i * m + i] += 1.0;
  return theta;
}

// Trace-maximal group relabeling: permute rows of T and entries of p.
// Returns true when a non-identity permutation was applied.
bool canonicalize(Eigen::MatrixXd& t, Eigen::VectorXd& p) {
  const int m = static_cast<int>(p.size());
  std::vector<int> perm(m), best(m);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_trace = -1.0;
  do {
    double tr = 0.0;
    for (int i = 0; i < m; ++i) tr += t(perm[i], i);
    if (tr > best_trace + 1e-15) {
      best_trace = tr;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  bool identity = true;
  for (int i = 0; i < m; ++i) identity = identity && best[i] == i;
  if (identity) return false;
  Eigen::MatrixXd t2(m, m);
  Eigen::VectorXd p2(m);
  for (int i = 0; i < m; ++i) {
    t2.row(i) = t.row(best[i]);
    p2[i] = p[best[i]];
  }
  t = std::move(t2);
  p = std::move(p2);
  return true;
}

}  // namespace

HocSolution hoc_solve(const ConsensusStats& stats, const HocConfig& cfg,
                      uint64_t seed) {
  const int m = stats.groups();
  if (m < 2) throw ValidationError("hoc_solve: need M >= 2 groups");
  HocObjective obj{stats, m};

  std::vector<RawSolution> candidates(cfg.restarts);
  parallel_for(cfg.restarts, cfg.threads, [&](int r) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(r)));
    candidates[r] = minimize(obj, initial_theta(obj, r, rng), cfg);
  });
  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (candidates[r].residual < candidates[best].residual) best = r;
  RawSolution sol = candidates[best];

  if (!(sol.residual <= cfg.residual_tol)) {
    std::ostringstream os;
    os << "hoc_solve: solver did not converge (residual " << sol.residual
       << " > " << cfg.residual_tol << " after " << cfg.restarts
       << " restarts)";
    throw SolverError(os.str());
  }
  bool adjusted = canonicalize(sol.t, sol.p);
  double cond = cond1(sol.t);
  if (!(cond <= cfg.cond_max)) {
    std::ostringstream os;
    os << "hoc_solve: informativeness violated (cond1(T)=" << cond << " > "
       << cfg.cond_max << ")";
    throw AssumptionError(os.str());
  }
  HocSolution out{TransitionMatrix(sol.t, Scope::global()), Prior(sol.p),
                  sol.residual, adjusted, cfg.restarts};
  return out;
}

Dataset get2nn(const Dataset& ds) {
  if (!ds.has_features())
    throw ValidationError("get2nn: features are required");
  const Eigen::Index n = ds.n();
  if (n < 3) throw ValidationError("get2nn: need at least 3 samples");
  const int c = ds.c_models();
  Eigen::MatrixXi wide(n, 3 * c);
  wide.leftCols(c) = ds.noisy_attrs;

  // Exact search, quadratic in N. Two smallest (distance, index) pairs
  // per sample; index order breaks distance ties.
  for (Eigen::Index i = 0; i < n; ++i) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int i1 = -1, i2 = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = (ds.features.row(i) - ds.features.row(j)).squaredNorm();
      if (d < d1 || (d == d1 && int(j) < i1)) {
        d2 = d1;
        i2 = i1;
        d1 = d;
        i1 = static_cast<int>(j);
      } else if (d < d2 || (d == d2 && int(j) < i2)) {
        d2 = d;
        i2 = static_cast<int>(j);
      }
    }
    wide.block(i, c, 1, c) = ds.noisy_attrs.row(i1);
    wide.block(i, 2 * c, 1, c) = ds.noisy_attrs.row(i2);
  }
  Dataset out = ds;
  out.noisy_attrs = std::move(wide);
  return out;
}

Eigen::MatrixXi sample_three(const Dataset& ds, uint64_t seed) {
  const int c = ds.c_models();
  if (c < 3)
    throw ValidationError("sample_three: need at least 3 attribute columns");
  Rng rng(seed);
  Eigen::MatrixXi triples(ds.n(), 3);
  std::vector<int> cols(static_cast<size_t>(c));
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    std::iota(cols.begin(), cols.end(), 0);
    // Partial Fisher-Yates: a uniformly random ordered triple of columns.
    for (int t = 0; t < 3; ++t) {
      int j = t + static_cast<int>(rng.below(static_cast<uint64_t>(c - t)));
      std::swap(cols[t], cols[j]);
      triples(i, t) = ds.noisy_attrs(i, cols[t]);
    }
  }
  return triples;
}

const ScopeEstimate& EstimatedStats::scope_for(int k, int y,
                                               int k_classes) const {
  switch (kind) {
    case MetricKind::DP:
      return transitions[static_cast<size_t>(k - 1)];
    case MetricKind::EOd:
      return transitions[static_cast<size_t>(flatten_index(k, y, k_classes) -
                                             1)];
    case MetricKind::EOp:
      return transitions[0];
  }
  throw Error("unreachable");
}

EstimatedStats hocfair(const Dataset& ds, MetricKind kind, bool local,
                       const HocConfig& cfg) {
  const Dataset& base = ds;
  Dataset augmented;
  const Dataset* work = &base;
  if (ds.c_models() < 3) {
    augmented = get2nn(ds);
    work = &augmented;
  }
  Eigen::MatrixXi triples = sample_three(*work, derive_seed(cfg.seed, 0));
  const int m = ds.m_groups;
  const int kk = ds.k_classes;

  HocSolution global = hoc_solve(consensus(triples, all_rows(ds.n()), m),
                                 cfg, derive_seed(cfg.seed, 1));
  EstimatedStats out{kind,
                     local,
                     {},
                     global.prior,
                     global.transition,
                     {},
                     {},
                     global.residual,
                     cfg.restarts,
                     {}};

  // Column scopes of the fairness matrix for this metric.
  std::vector<Scope> scopes;
  if (kind == MetricKind::DP) {
    for (int k = 1; k <= kk; ++k) scopes.push_back(Scope::prediction(k));
  } else if (kind == MetricKind::EOd) {
    for (int k = 1; k <= kk; ++k)
      for (int y = 1; y <= kk; ++y)
        scopes.push_back(Scope::prediction_label(k, y));
    // Order matches the flattened column index K*(k-1)+y.
  } else {
    scopes.push_back(Scope::prediction_label(1, 1));
  }

  out.transitions.assign(scopes.size(),
                         ScopeEstimate{global.transition, global.residual,
                                       false});
  std::vector<std::string> scope_warnings(scopes.size());
  if (local) {
    parallel_for(static_cast<int>(scopes.size()), cfg.threads, [&](int s) {
      const Scope& sc = scopes[static_cast<size_t>(s)];
      std::vector<int> rows = rows_where(ds, [&](int i) {
        bool ok = ds.predictions[i] == sc.k;
        if (sc.level == Scope::Level::PredictionLabel)
          ok = ok && ds.labels[i] == sc.y;
        return ok;
      });
      if (static_cast<int>(rows.size()) < cfg.min_subset) {
        std::ostringstream os;
        os << "scope " << sc.name() << ": only " << rows.size()
           << " samples (< " << cfg.min_subset
           << "), falling back to the global transition matrix";
        scope_warnings[static_cast<size_t>(s)] = os.str();
        out.transitions[static_cast<size_t>(s)] =
            ScopeEstimate{global.transition.with_scope(sc), global.residual,
                          true};
        return;
      }
      HocSolution sol = hoc_solve(consensus(triples, rows, m), cfg,
                                  derive_seed(cfg.seed, 2 + s));
      out.transitions[static_cast<size_t>(s)] =
          ScopeEstimate{sol.transition.with_scope(sc), sol.residual, false};
    });
  } else {
    for (size_t s = 0; s < scopes.size(); ++s)
      out.transitions[s].transition =
          global.transition.with_scope(scopes[s]);
  }
  for (auto& w : scope_warnings)
    if (!w.empty()) out.warnings.push_back(w);

  // Per-label priors feed the EOd/EOp calibration in both modes; the label
  // subsets reuse the same solver and keep only p. EOp touches only y=1.
  if (kind != MetricKind::DP) {
    int labels_needed = kind == MetricKind::EOp ? 1 : kk;
    out.label_priors.assign(static_cast<size_t>(labels_needed),
                            Prior(Eigen::VectorXd::Constant(m, 1.0 / m)));
    out.label_prior_fallback.assign(static_cast<size_t>(labels_needed), false);
    std::vector<std::string> label_warnings(
        static_cast<size_t>(labels_needed));
    parallel_for(labels_needed, cfg.threads, [&](int yi) {
      int y = yi + 1;
      std::vector<int> rows =
          rows_where(ds, [&](int i) { return ds.labels[i] == y; });
      if (static_cast<int>(rows.size()) < cfg.min_subset) {
        std::ostringstream os;
        os << "label y=" << y << ": only " << rows.size() << " samples (< "
           << cfg.min_subset << "), falling back to the global prior";
        label_warnings[static_cast<size_t>(yi)] = os.str();
        out.label_priors[static_cast<size_t>(yi)] =
            Prior(out.prior.probs(), y);
        out.label_prior_fallback[static_cast<size_t>(yi)] = true;
        return;
      }
      HocSolution sol = hoc_solve(consensus(triples, rows, m), cfg,
                                  derive_seed(cfg.seed, 1000 + yi));
      out.label_priors[static_cast<size_t>(yi)] = Prior(sol.prior.probs(), y);
    });
    for (auto& w : label_warnings)
      if (!w.empty()) out.warnings.push_back(w);
  }
  return out;
}

}  // namespace faircal
