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

#include "faircal/metrics.hpp"

#include <cmath>
#include <sstream>

namespace faircal {

int flatten_index(int k, int y, int k_classes) {
  if (k < 1 || k > k_classes || y < 1 || y > k_classes) {
    std::ostringstream os;
    os << "flatten_index: (k=" << k << ", y=" << y << ") out of range for K="
       << k_classes;
    throw ValidationError(os.str());
  }
  return k_classes * (k - 1) + y;
}

namespace {

const Eigen::VectorXi& attr_column(const Dataset& ds, AttrSource source,
                                   Eigen::VectorXi& storage) {
  if (source.use_true) {
    if (!ds.has_true_attrs())
      throw ValidationError("build_h: true attributes are not present");
    return ds.true_attrs;
  }
  if (source.column < 1 || source.column > ds.c_models()) {
    std::ostringstream os;
    os << "build_h: noisy column " << source.column << " out of range (C="
       << ds.c_models() << ")";
    throw ValidationError(os.str());
  }
  storage = ds.noisy_attrs.col(source.column - 1);
  return storage;
}

}  // namespace

FairnessMatrix build_h(const Dataset& ds, AttrSource source, MetricKind kind) {
  Eigen::VectorXi storage;
  const Eigen::VectorXi& attrs = attr_column(ds, source, storage);
  const int m = ds.m_groups;
  const int kk = ds.k_classes;
  const int cols = metric_columns(kind, kk);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, cols);

  if (kind == MetricKind::DP) {
    Eigen::VectorXd group_count = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      int a = attrs[i] - 1;
      group_count[a] += 1.0;
      h(a, ds.predictions[i] - 1) += 1.0;
    }
    for (int a = 0; a < m; ++a) {
      if (group_count[a] == 0.0) {
        std::ostringstream os;
        os << "build_h: empty group " << (a + 1);
        throw ValidationError(os.str());
      }
      h.row(a) /= group_count[a];
    }
    return FairnessMatrix(std::move(h), kind, kk);
  }

  // EOd / EOp condition on (Y = y, A = a) cells.
  Eigen::MatrixXd cell_count = Eigen::MatrixXd::Zero(m, kk);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(m, kk * kk);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    int a = attrs[i] - 1;
    int y = ds.labels[i] - 1;
    int k = ds.predictions[i] - 1;
    cell_count(a, y) += 1.0;
    joint(a, kk * k + y) += 1.0;
  }
  auto cell_or_throw = [&](int a, int y) {
    double c = cell_count(a, y);
    if (c == 0.0) {
      std::ostringstream os;
      os << "build_h: empty cell (a=" << (a + 1) << ", y=" << (y + 1) << ")";
      throw ValidationError(os.str());
    }
    return c;
  };
  if (kind == MetricKind::EOd) {
    for (int a = 0; a < m; ++a)
      for (int k = 0; k < kk; ++k)
        for (int y = 0; y < kk; ++y)
          h(a, kk * k + y) = joint(a, kk * k + y) / cell_or_throw(a, y);
  } else {  // EOp: the single (k=1, y=1) column
    for (int a = 0; a < m; ++a) h(a, 0) = joint(a, 0) / cell_or_throw(a, 0);
  }
  return FairnessMatrix(std::move(h), kind, kk);
}

DisparityValue disparity(const FairnessMatrix& h,
                         DisparityValue::Source source) {
  const Eigen::MatrixXd& e = h.entries();
  const int m = h.groups();
  double sum = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      if (a != b) sum += (e.row(a) - e.row(b)).cwiseAbs().sum();
  double value = sum / (double(h.columns()) * m * (m - 1));
  return DisparityValue{value, h.kind(), source};
}

EvalReport eval_metrics(const DisparityValue& estimate,
                        const DisparityValue& truth,
                        const DisparityValue& base) {
  EvalReport out;
  out.raw_error = std::abs(estimate.value - truth.value);
  if (truth.value > 0.0) out.normalized_error = out.raw_error / truth.value;
  double base_raw = std::abs(base.value - truth.value);
  if (base_raw > 0.0) out.improvement = 1.0 - out.raw_error / base_raw;
  return out;
}

}  // namespace faircal
