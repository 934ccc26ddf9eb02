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
#include <cmath>
#include <string>
#include <vector>

#include "faircal/dataset.hpp"
#include "faircal/estimator.hpp"
#include "faircal/rng.hpp"
#include "faircal/types.hpp"

namespace faircal::test {

// Random categorical dataset whose noisy attributes follow a diagonally
// dominant transition from the true ones. Regenerates until every
// (group, label, prediction) cell is populated so the count-identity tests
// have no empty conditionals.
inline Dataset random_dataset(Rng& rng, long n, int m, int k, int c,
                              double noise = 0.25) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Dataset ds;
    ds.k_classes = k;
    ds.m_groups = m;
    ds.labels.resize(n);
    ds.predictions.resize(n);
    ds.true_attrs.resize(n);
    ds.noisy_attrs.resize(n, c);
    // Group-dependent prediction rates keep the disparity away from zero.
    Eigen::MatrixXd pred(m, k);
    for (int a = 0; a < m; ++a) {
      double sum = 0.0;
      for (int j = 0; j < k; ++j) {
        pred(a, j) = 0.2 + rng.uniform01();
        sum += pred(a, j);
      }
      pred.row(a) /= sum;
    }
    for (long i = 0; i < n; ++i) {
      int a = static_cast<int>(rng.below(static_cast<uint64_t>(m)));
      ds.true_attrs[i] = a + 1;
      ds.labels[i] = static_cast<int>(rng.below(static_cast<uint64_t>(k))) + 1;
      Eigen::VectorXd row = pred.row(a);
      ds.predictions[i] = rng.categorical(row.data(), k) + 1;
      for (int cc = 0; cc < c; ++cc) {
        if (rng.uniform01() < noise) {
          int other = static_cast<int>(rng.below(static_cast<uint64_t>(m)));
          ds.noisy_attrs(i, cc) = other + 1;
        } else {
          ds.noisy_attrs(i, cc) = a + 1;
        }
      }
    }
    // All (a, y, fpred) cells populated?
    std::vector<int> seen(static_cast<size_t>(m) * k * k, 0);
    std::vector<int> noisy_seen(static_cast<size_t>(m) * k * k, 0);
    for (long i = 0; i < n; ++i) {
      int a = ds.true_attrs[i] - 1, b = ds.noisy_attrs(i, 0) - 1;
      int y = ds.labels[i] - 1, f = ds.predictions[i] - 1;
      seen[static_cast<size_t>((a * k + y) * k + f)] = 1;
      noisy_seen[static_cast<size_t>((b * k + y) * k + f)] = 1;
    }
    bool complete = true;
    for (int v : seen) complete = complete && v;
    for (int v : noisy_seen) complete = complete && v;
    if (complete) return ds;
  }
  throw Error("random_dataset: could not populate all cells");
}

// Definition-style disparity: mean absolute pairwise difference over all
// ordered group pairs and all columns, divided by the column count.
// Independent of the production implementation.
inline double naive_disparity(const Eigen::MatrixXd& h) {
  const int m = static_cast<int>(h.rows());
  const int cols = static_cast<int>(h.cols());
  double sum = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int j = 0; j < cols; ++j)
        if (a != b) sum += std::abs(h(a, j) - h(b, j));
  return sum / (double(m) * (m - 1) * cols);
}

// Direct-sum consensus model, written independently of model_consensus.
inline double naive_c3(const Eigen::MatrixXd& t, const Eigen::VectorXd& p,
                       int a, int b, int c) {
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) s += p[i] * t(i, a) * t(i, b) * t(i, c);
  return s;
}

inline Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace faircal::test
