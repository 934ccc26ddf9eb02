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

#include "faircal/types.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace faircal {

const char* metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::DP:
      return "dp";
    case MetricKind::EOd:
      return "eod";
    case MetricKind::EOp:
      return "eop";
  }
  return "?";
}

std::optional<MetricKind> metric_from_name(const std::string& name) {
  if (name == "dp") return MetricKind::DP;
  if (name == "eod") return MetricKind::EOd;
  if (name == "eop") return MetricKind::EOp;
  return std::nullopt;
}

int metric_columns(MetricKind kind, int k_classes) {
  switch (kind) {
    case MetricKind::DP:
      return k_classes;
    case MetricKind::EOd:
      return k_classes * k_classes;
    case MetricKind::EOp:
      return 1;
  }
  return 0;
}

std::string Scope::name() const {
  std::ostringstream os;
  switch (level) {
    case Level::Global:
      os << "global";
      break;
    case Level::Prediction:
      os << "k=" << k;
      break;
    case Level::PredictionLabel:
      os << "k=" << k << ",y=" << y;
      break;
    case Level::Label:
      os << "y=" << y;
      break;
  }
  return os.str();
}

namespace {

void check_probability_row(const Eigen::MatrixXd& m, Eigen::Index a,
                           const char* what) {
  double sum = 0.0;
  for (Eigen::Index b = 0; b < m.cols(); ++b) {
    double v = m(a, b);
    if (!(v >= -kStochasticTol) || !(v <= 1.0 + kStochasticTol)) {
      std::ostringstream os;
      os << what << ": entry (" << (a + 1) << "," << (b + 1) << ")=" << v
         << " outside [0,1]";
      throw ValidationError(os.str());
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochasticTol) {
    std::ostringstream os;
    os << what << ": row " << (a + 1) << " sums to " << sum;
    throw ValidationError(os.str());
  }
}

void check_stochastic_rows(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ValidationError(std::string(what) + ": matrix must be square M x M");
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    check_probability_row(m, a, what);
}

void check_simplex(const Eigen::VectorXd& v, const char* what) {
  if (v.size() < 2)
    throw ValidationError(std::string(what) + ": needs at least 2 entries");
  check_probability_row(v.transpose(), 0, what);
}

}  // namespace

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd entries, Scope scope)
    : entries_(std::move(entries)), scope_(scope) {
  check_stochastic_rows(entries_, "transition matrix");
}

Prior::Prior(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  check_simplex(probs_, "prior");
}

Prior::Prior(Eigen::VectorXd probs, int given_label)
    : probs_(std::move(probs)), given_label_(given_label) {
  check_simplex(probs_, "prior");
}

FairnessMatrix::FairnessMatrix(Eigen::MatrixXd entries, MetricKind kind,
                               int k_classes)
    : entries_(std::move(entries)), kind_(kind), k_classes_(k_classes) {
  if (entries_.rows() < 2)
    throw ValidationError("fairness matrix needs at least two group rows");
  int want = metric_columns(kind, k_classes);
  if (entries_.cols() != want) {
    std::ostringstream os;
    os << "fairness matrix for " << metric_name(kind) << " needs " << want
       << " columns, got " << entries_.cols();
    throw ValidationError(os.str());
  }
}

double norm1(const Eigen::MatrixXd& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

double norm_inf(const Eigen::MatrixXd& a) {
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double cond1(const Eigen::MatrixXd& a) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  // PartialPivLU has no rank query; a vanishing |det| marks singularity.
  double det = std::abs(lu.determinant());
  if (det == 0.0 || !std::isfinite(det))
    return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd inv = lu.inverse();
  if (!inv.allFinite()) return std::numeric_limits<double>::infinity();
  return norm1(a) * norm1(inv);
}

}  // namespace faircal
