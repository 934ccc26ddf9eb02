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

#include "faircal/stats.hpp"

#include <sstream>

namespace faircal {

Prior empirical_prior(const Eigen::VectorXi& attrs,
                      const std::vector<int>& rows, int m_groups,
                      double smoothing) {
  if (rows.empty()) throw ValidationError("empirical_prior: empty subset");
  Eigen::VectorXd counts = Eigen::VectorXd::Constant(m_groups, smoothing);
  for (int r : rows) counts[attrs[r] - 1] += 1.0;
  return Prior(counts / counts.sum());
}

TransitionMatrix empirical_transition(const Eigen::VectorXi& true_attrs,
                                      const Eigen::VectorXi& noisy_col,
                                      const std::vector<int>& rows,
                                      int m_groups, Scope scope,
                                      double smoothing) {
  if (rows.empty())
    throw ValidationError("empirical_transition: empty subset");
  Eigen::MatrixXd counts =
      Eigen::MatrixXd::Constant(m_groups, m_groups, smoothing);
  for (int r : rows) counts(true_attrs[r] - 1, noisy_col[r] - 1) += 1.0;
  Eigen::MatrixXd t(m_groups, m_groups);
  for (int a = 0; a < m_groups; ++a) {
    double total = counts.row(a).sum();
    if (total <= 0.0) {
      std::ostringstream os;
      os << "empirical_transition: empty group " << (a + 1) << " in scope "
         << scope.name();
      throw ValidationError(os.str());
    }
    t.row(a) = counts.row(a) / total;
  }
  return TransitionMatrix(std::move(t), scope);
}

}  // namespace faircal
