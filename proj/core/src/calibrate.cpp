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

#include "faircal/calibrate.hpp"

#include <cmath>
#include <sstream>

#include "faircal/metrics.hpp"
#include "faircal/stats.hpp"

namespace faircal {

const char* mode_name(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Base:
      return "base";
    case PipelineMode::Global:
      return "global";
    case PipelineMode::Local:
      return "local";
  }
  return "?";
}

std::optional<PipelineMode> mode_from_name(const std::string& name) {
  if (name == "base") return PipelineMode::Base;
  if (name == "global") return PipelineMode::Global;
  if (name == "local") return PipelineMode::Local;
  return std::nullopt;
}

Eigen::VectorXd calibrate_column(const Eigen::VectorXd& noisy_col,
                                 const TransitionMatrix& t,
                                 const Prior& p_hat, const Prior& p_tilde,
                                 double cond_max) {
  if (p_hat.probs().minCoeff() <= 0.0)
    throw AssumptionError("calibrate_column: degenerate prior (zero entry)");
  double cond = cond1(t.entries());
  if (!(cond <= cond_max)) {
    std::ostringstream os;
    os << "calibrate_column: near-singular transition in scope "
       << t.scope().name() << " (cond1=" << cond << " > " << cond_max << ")";
    throw AssumptionError(os.str());
  }
  Eigen::MatrixXd lhs =
      t.entries().transpose() * p_hat.probs().asDiagonal();
  Eigen::VectorXd rhs = p_tilde.probs().asDiagonal() * noisy_col;
  return lhs.partialPivLu().solve(rhs);
}

namespace {

struct ColumnScope {
  int column;  // 0-based column of H
  Scope scope;
  int y;  // 1-based label behind this column; 0 for DP
};

std::vector<ColumnScope> column_scopes(MetricKind kind, int kk) {
  std::vector<ColumnScope> cols;
  if (kind == MetricKind::DP) {
    for (int k = 1; k <= kk; ++k)
      cols.push_back({k - 1, Scope::prediction(k), 0});
  } else if (kind == MetricKind::EOd) {
    for (int k = 1; k <= kk; ++k)
      for (int y = 1; y <= kk; ++y)
        cols.push_back(
            {flatten_index(k, y, kk) - 1, Scope::prediction_label(k, y), y});
  } else {
    cols.push_back({0, Scope::prediction_label(1, 1), 0 + 1});
  }
  return cols;
}

// Sample-mean noisy priors: the DP prior of noisy column 1, or one prior
// per label value for EOd (EOp only needs y=1, stored at index 0).
std::vector<Prior> noisy_priors(const Dataset& ds, MetricKind kind) {
  Eigen::VectorXi col = ds.noisy_attrs.col(0);
  std::vector<Prior> out;
  if (kind == MetricKind::DP) {
    out.push_back(empirical_prior(col, all_rows(ds.n()), ds.m_groups));
    return out;
  }
  int last = kind == MetricKind::EOp ? 1 : ds.k_classes;
  for (int y = 1; y <= last; ++y) {
    std::vector<int> rows =
        rows_where(ds, [&](int i) { return ds.labels[i] == y; });
    if (rows.empty()) {
      std::ostringstream os;
      os << "no samples with label y=" << y;
      throw ValidationError(os.str());
    }
    Prior p = empirical_prior(col, rows, ds.m_groups);
    out.push_back(Prior(p.probs(), y));
  }
  return out;
}

CalibrationResult reduce(FairnessMatrix h, Eigen::MatrixXd raw,
                         PipelineMode mode, bool clip,
                         DisparityValue::Source source) {
  const Eigen::MatrixXd& entries = h.entries();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> clipped(entries.rows(),
                                                             entries.cols());
  clipped.setConstant(false);
  bool any = false;
  if (clip) {
    Eigen::MatrixXd clipped_entries = entries;
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
      for (Eigen::Index j = 0; j < entries.cols(); ++j) {
        double v = entries(i, j);
        double cv = std::min(1.0, std::max(0.0, v));
        if (cv != v) {
          clipped(i, j) = true;
          any = true;
          clipped_entries(i, j) = cv;
        }
      }
    h = FairnessMatrix(std::move(clipped_entries), h.kind(), h.k_classes());
  }
  DisparityValue d = disparity(h, source);
  CalibrationResult out{std::move(h), raw.array(), std::move(clipped), any,
                        mode, d,      {},          std::nullopt,
                        {}};
  return out;
}

}  // namespace

CalibrationResult run_pipeline(const Dataset& ds, MetricKind kind,
                               PipelineMode mode, const PipelineConfig& cfg) {
  Dataset checked = validate(ds);
  FairnessMatrix h_tilde = build_h(checked, AttrSource::noisy(1), kind);

  if (mode == PipelineMode::Base) {
    Eigen::MatrixXd raw = h_tilde.entries();
    CalibrationResult out =
        reduce(std::move(h_tilde), std::move(raw), mode, /*clip=*/false,
               DisparityValue::Source::Noisy);
    return out;
  }

  std::vector<Prior> p_tilde = noisy_priors(checked, kind);
  EstimatedStats est =
      hocfair(checked, kind, mode == PipelineMode::Local, cfg.hoc);

  Eigen::MatrixXd calibrated(h_tilde.groups(), h_tilde.columns());
  std::vector<ScopeDiagnostic> diags;
  for (const ColumnScope& cs : column_scopes(kind, checked.k_classes)) {
    const ScopeEstimate& se = est.transitions[diags.size()];
    const Prior& p_hat =
        kind == MetricKind::DP
            ? est.prior
            : est.label_priors[static_cast<size_t>(cs.y - 1)];
    const Prior& pt = kind == MetricKind::DP
                          ? p_tilde[0]
                          : p_tilde[static_cast<size_t>(cs.y - 1)];
    calibrated.col(cs.column) =
        calibrate_column(h_tilde.entries().col(cs.column), se.transition,
                         p_hat, pt, cfg.cond_max);
    diags.push_back(ScopeDiagnostic{cs.scope, cond1(se.transition.entries()),
                                    se.residual, se.fell_back_to_global});
  }

  Eigen::MatrixXd raw = calibrated;
  CalibrationResult out = reduce(
      FairnessMatrix(std::move(calibrated), kind, checked.k_classes),
      std::move(raw), mode, cfg.clip, DisparityValue::Source::Calibrated);
  out.diagnostics = std::move(diags);
  out.warnings = est.warnings;
  out.estimates = std::move(est);
  return out;
}

CalibrationResult oracle_calibrate(const Dataset& ds, MetricKind kind,
                                   double cond_max) {
  Dataset checked = validate(ds);
  if (!checked.has_true_attrs())
    throw ValidationError("oracle_calibrate: true attributes are required");
  FairnessMatrix h_tilde = build_h(checked, AttrSource::noisy(1), kind);
  std::vector<Prior> p_tilde = noisy_priors(checked, kind);
  Eigen::VectorXi noisy_col = checked.noisy_attrs.col(0);

  Eigen::MatrixXd calibrated(h_tilde.groups(), h_tilde.columns());
  std::vector<ScopeDiagnostic> diags;
  for (const ColumnScope& cs : column_scopes(kind, checked.k_classes)) {
    std::vector<int> rows = rows_where(checked, [&](int i) {
      bool ok = checked.predictions[i] == cs.scope.k;
      if (cs.scope.level == Scope::Level::PredictionLabel)
        ok = ok && checked.labels[i] == cs.scope.y;
      return ok;
    });
    TransitionMatrix t = empirical_transition(
        checked.true_attrs, noisy_col, rows, checked.m_groups, cs.scope);
    Prior p_true =
        kind == MetricKind::DP
            ? empirical_prior(checked.true_attrs, all_rows(checked.n()),
                              checked.m_groups)
            : empirical_prior(
                  checked.true_attrs,
                  rows_where(checked,
                             [&](int i) { return checked.labels[i] == cs.y; }),
                  checked.m_groups);
    const Prior& pt = kind == MetricKind::DP
                          ? p_tilde[0]
                          : p_tilde[static_cast<size_t>(cs.y - 1)];
    calibrated.col(cs.column) = calibrate_column(
        h_tilde.entries().col(cs.column), t, p_true, pt, cond_max);
    diags.push_back(
        ScopeDiagnostic{cs.scope, cond1(t.entries()), 0.0, false});
  }
  Eigen::MatrixXd raw = calibrated;
  CalibrationResult out = reduce(
      FairnessMatrix(std::move(calibrated), kind, checked.k_classes),
      std::move(raw), PipelineMode::Global, /*clip=*/false,
      DisparityValue::Source::Calibrated);
  out.diagnostics = std::move(diags);
  return out;
}

}  // namespace faircal
