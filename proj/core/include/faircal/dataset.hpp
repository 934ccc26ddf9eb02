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
#include <functional>
#include <vector>

#include "faircal/types.hpp"

namespace faircal {

// A target dataset with model predictions and auxiliary-model attribute
// columns. All categorical values are 1-based: labels and predictions in
// [1, k_classes], attribute columns in [1, m_groups]. true_attrs and
// features are optional (size 0 when absent). Treat instances as
// immutable after validate(); every function here takes const refs.
struct Dataset {
  Eigen::VectorXi labels;       // N
  Eigen::VectorXi predictions;  // N
  Eigen::MatrixXi noisy_attrs;  // N x C
  Eigen::VectorXi true_attrs;   // N or empty
  Eigen::MatrixXd features;     // N x d or empty
  int k_classes = 0;
  int m_groups = 0;

  Eigen::Index n() const { return labels.size(); }
  int c_models() const { return static_cast<int>(noisy_attrs.cols()); }
  bool has_true_attrs() const { return true_attrs.size() > 0; }
  bool has_features() const { return features.size() > 0; }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

// Checks every Dataset invariant and returns the dataset unchanged, or
// throws ValidationError naming the first offending row/column (1-based).
Dataset validate(Dataset ds);

// Builds an N x d feature matrix, rejecting ragged input.
Eigen::MatrixXd make_features(const std::vector<std::vector<double>>& rows);

// Row-index masks. Rows are 0-based internally.
std::vector<int> all_rows(Eigen::Index n);
std::vector<int> rows_where(const Dataset& ds,
                            const std::function<bool(int)>& pred);

}  // namespace faircal
