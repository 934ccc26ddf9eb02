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

#include "faircal/dataset.hpp"

#include <cmath>
#include <sstream>

namespace faircal {

namespace {

std::string at_row(const char* what, Eigen::Index row) {
  std::ostringstream os;
  os << what << " at row " << (row + 1);
  return os.str();
}

void check_categorical(const Eigen::VectorXi& v, int hi, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 1 || v[i] > hi) {
      std::ostringstream os;
      os << "category out of range at row " << (i + 1) << ": " << name << "="
         << v[i] << " not in [1," << hi << "]";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace

Dataset validate(Dataset ds) {
  const Eigen::Index n = ds.labels.size();
  if (n == 0) throw ValidationError("empty dataset (N=0)");
  if (ds.k_classes < 1) throw ValidationError("k_classes must be >= 1");
  if (ds.m_groups < 2) throw ValidationError("m_groups must be >= 2");
  if (ds.predictions.size() != n)
    throw ValidationError("mismatched array lengths: predictions");
  if (ds.noisy_attrs.rows() != n)
    throw ValidationError("mismatched array lengths: noisy_attrs");
  if (ds.noisy_attrs.cols() < 1)
    throw ValidationError("at least one noisy attribute column is required");
  if (ds.has_true_attrs() && ds.true_attrs.size() != n)
    throw ValidationError("mismatched array lengths: true_attrs");
  if (ds.has_features()) {
    if (ds.features.rows() != n)
      throw ValidationError("mismatched array lengths: features");
    if (ds.features.cols() < 1)
      throw ValidationError("feature dimension must be >= 1");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
        if (!std::isfinite(ds.features(i, j)))
          throw ValidationError(at_row("non-finite feature", i));
  }

  check_categorical(ds.labels, ds.k_classes, "y");
  check_categorical(ds.predictions, ds.k_classes, "fpred");
  if (ds.has_true_attrs()) check_categorical(ds.true_attrs, ds.m_groups, "a");
  for (int c = 0; c < ds.c_models(); ++c) {
    Eigen::VectorXi col = ds.noisy_attrs.col(c);
    std::ostringstream name;
    name << "a" << (c + 1);
    check_categorical(col, ds.m_groups, name.str().c_str());
  }
  return ds;
}

Eigen::MatrixXd make_features(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const size_t d = rows[0].size();
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      std::ostringstream os;
      os << "ragged features: row " << (i + 1) << " has dim " << rows[i].size()
         << ", expected " << d;
      throw ValidationError(os.str());
    }
  }
  Eigen::MatrixXd out(rows.size(), d);
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < d; ++j) out(i, j) = rows[i][j];
  return out;
}

std::vector<int> all_rows(Eigen::Index n) {
  std::vector<int> rows(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<size_t>(i)] = int(i);
  return rows;
}

std::vector<int> rows_where(const Dataset& ds,
                            const std::function<bool(int)>& pred) {
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    if (pred(static_cast<int>(i))) rows.push_back(static_cast<int>(i));
  return rows;
}

}  // namespace faircal
