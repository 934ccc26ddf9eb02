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

#include "faircal/dataset.hpp"
#include "faircal/types.hpp"

namespace faircal {

// Flattens the (prediction k, label y) cell into the 1-based column index
// K*(k-1) + y used by EOd fairness matrices.
int flatten_index(int k, int y, int k_classes);

// Which attribute column conditions the fairness matrix: the ground-truth
// attributes or noisy column c (1-based).
struct AttrSource {
  static AttrSource truth() { return {true, 0}; }
  static AttrSource noisy(int c) { return {false, c}; }
  bool use_true = true;
  int column = 0;
};

// Builds the fairness matrix H for the requested metric.
//   DP : H[a,k]          = P(f = k | A = a)
//   EOd: H[a,K(k-1)+y]   = P(f = k | Y = y, A = a)
//   EOp: the single (k=1, y=1) column.
// Conditioning cells with no samples are errors, never imputed.
FairnessMatrix build_h(const Dataset& ds, AttrSource source, MetricKind kind);

// Mean pairwise normalized L1 distance between the rows of H, averaged
// over all ordered group pairs: sum_{a != a'} |H[a]-H[a']|_1 / cols(H)
// divided by M(M-1). Coincides with the per-metric disparity definitions.
DisparityValue disparity(const FairnessMatrix& h,
                         DisparityValue::Source source);

// Raw error |E - truth|, normalized error raw/truth, and improvement
// 1 - raw(E)/raw(base). Degenerate denominators yield absent fields.
EvalReport eval_metrics(const DisparityValue& estimate,
                        const DisparityValue& truth,
                        const DisparityValue& base);

}  // namespace faircal
