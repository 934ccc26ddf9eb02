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
#include <vector>

#include "faircal/types.hpp"

namespace faircal {

// Sample-mean prior of a categorical column over the masked rows.
// `smoothing` adds that many pseudo-counts to every category; the default
// of zero keeps the exact-identity tests exact. Throws on an empty mask.
Prior empirical_prior(const Eigen::VectorXi& attrs,
                      const std::vector<int>& rows, int m_groups,
                      double smoothing = 0.0);

// Empirical transition matrix P(noisy = b | clean = a) over the masked
// rows. Every clean group must appear at least once in the mask; a group
// with zero samples is an error ("empty group a"), not a smoothed row,
// unless smoothing > 0.
TransitionMatrix empirical_transition(const Eigen::VectorXi& true_attrs,
                                      const Eigen::VectorXi& noisy_col,
                                      const std::vector<int>& rows,
                                      int m_groups,
                                      Scope scope = Scope::global(),
                                      double smoothing = 0.0);

}  // namespace faircal
