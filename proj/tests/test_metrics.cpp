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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "faircal/metrics.hpp"
#include "helpers.hpp"

using namespace faircal;
using namespace faircal::test;

TEST_SUITE("metrics") {

TEST_CASE("flatten_index is the K(k-1)+y bijection") {
  CHECK(flatten_index(1, 1, 2) == 1);
  CHECK(flatten_index(2, 1, 2) == 3);
  std::set<int> seen;
  for (int k = 1; k <= 3; ++k)
    for (int y = 1; y <= 3; ++y) seen.insert(flatten_index(k, y, 3));
  CHECK(seen.size() == 9);
  CHECK(*seen.begin() == 1);
  CHECK(*seen.rbegin() == 9);
  CHECK_THROWS_AS(flatten_index(0, 1, 2), ValidationError);
  CHECK_THROWS_AS(flatten_index(1, 3, 2), ValidationError);
}

TEST_CASE("build_h DP matches per-group positive rates") {
  // Groups with positive rates 0.1, 0.2, 0.6 on class 1.
  const int per_group = 100;
  Eigen::VectorXi labels(3 * per_group), preds(3 * per_group);
  Eigen::MatrixXi attrs(3 * per_group, 1);
  const int positives[3] = {10, 20, 60};
  int i = 0;
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < per_group; ++j, ++i) {
      labels[i] = 1;
      preds[i] = j < positives[a] ? 1 : 2;
      attrs(i, 0) = a + 1;
    }
  Dataset ds{labels, preds, attrs, attrs.col(0), {}, 2, 3};
  FairnessMatrix h = build_h(ds, AttrSource::truth(), MetricKind::DP);
  CHECK(h.entries()(0, 0) == doctest::Approx(0.1));
  CHECK(h.entries()(1, 0) == doctest::Approx(0.2));
  CHECK(h.entries()(2, 0) == doctest::Approx(0.6));
}

TEST_CASE("identical rows give zero disparity") {
  Eigen::MatrixXd e(2, 2);
  e << 0.3, 0.7, 0.3, 0.7;
  FairnessMatrix h(e, MetricKind::DP, 2);
  CHECK(disparity(h, DisparityValue::Source::True).value == 0.0);
}

TEST_CASE("DP rows of H sum to one over k (brute-force check)") {
  Rng rng(123);
  Dataset ds = random_dataset(rng, 200, 2, 2, 1);
  FairnessMatrix h = build_h(ds, AttrSource::truth(), MetricKind::DP);
  for (int a = 0; a < 2; ++a)
    CHECK(h.entries().row(a).sum() == doctest::Approx(1.0).epsilon(1e-9));
  // EOd: each y-slice of a row sums to one.
  FairnessMatrix he = build_h(ds, AttrSource::truth(), MetricKind::EOd);
  for (int a = 0; a < 2; ++a)
    for (int y = 1; y <= 2; ++y) {
      double s = 0.0;
      for (int k = 1; k <= 2; ++k)
        s += he.entries()(a, flatten_index(k, y, 2) - 1);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("disparity matches the definition-style enumeration") {
  Eigen::MatrixXd e(2, 2);
  e << 0.6, 0.4, 0.2, 0.8;
  FairnessMatrix h(e, MetricKind::DP, 2);
  CHECK(disparity(h, DisparityValue::Source::True).value ==
        doctest::Approx(0.4).epsilon(1e-12));

  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    Dataset ds = random_dataset(rng, 300, 3, 2, 1);
    for (MetricKind kind :
         {MetricKind::DP, MetricKind::EOd, MetricKind::EOp}) {
      FairnessMatrix h2 = build_h(ds, AttrSource::truth(), kind);
      CHECK(disparity(h2, DisparityValue::Source::True).value ==
            doctest::Approx(naive_disparity(h2.entries())).epsilon(1e-12));
    }
  }
}

TEST_CASE("a known binary disparity reconstructs 0.2424") {
  Eigen::MatrixXd e(2, 2);
  e << 0.6212, 0.3788, 0.3788, 0.6212;
  FairnessMatrix h(e, MetricKind::DP, 2);
  CHECK(disparity(h, DisparityValue::Source::True).value ==
        doctest::Approx(0.2424).epsilon(1e-12));
}

TEST_CASE("group permutation leaves the disparity unchanged") {
  Rng rng(99);
  Dataset ds = random_dataset(rng, 400, 3, 2, 1);
  double base =
      disparity(build_h(ds, AttrSource::truth(), MetricKind::DP),
                DisparityValue::Source::True)
          .value;
  // Relabel groups by the cycle 1->2->3->1 everywhere.
  Dataset permuted = ds;
  auto relabel = [](int a) { return a % 3 + 1; };
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    permuted.true_attrs[i] = relabel(ds.true_attrs[i]);
    permuted.noisy_attrs(i, 0) = relabel(ds.noisy_attrs(i, 0));
  }
  double permuted_value =
      disparity(build_h(permuted, AttrSource::truth(), MetricKind::DP),
                DisparityValue::Source::True)
          .value;
  CHECK(permuted_value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("disparity vanishes only when all rows coincide") {
  Rng rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd e(2, 2);
    double p = rng.uniform01(), q = rng.uniform01();
    e << p, 1 - p, q, 1 - q;
    FairnessMatrix h(e, MetricKind::DP, 2);
    double d = disparity(h, DisparityValue::Source::True).value;
    CHECK(d >= 0.0);
    if (std::abs(p - q) > 1e-9)
      CHECK(d > 0.0);
    else
      CHECK(d == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("empty EOd cell is an error, not an imputation") {
  Dataset ds;
  ds.k_classes = 2;
  ds.m_groups = 2;
  ds.labels = Eigen::VectorXi(4);
  ds.labels << 1, 1, 1, 2;  // group 2 never sees label 2
  ds.predictions = Eigen::VectorXi(4);
  ds.predictions << 1, 2, 1, 2;
  ds.noisy_attrs = Eigen::MatrixXi(4, 1);
  ds.noisy_attrs << 1, 1, 2, 1;
  ds.true_attrs = Eigen::VectorXi(4);
  ds.true_attrs << 1, 1, 2, 1;
  CHECK_THROWS_WITH_AS(build_h(ds, AttrSource::truth(), MetricKind::EOd),
                       doctest::Contains("empty cell (a=2, y=2)"),
                       ValidationError);
}

TEST_CASE("eval_metrics reproduces the published error arithmetic") {
  DisparityValue truth{0.2424, MetricKind::DP, DisparityValue::Source::True};
  DisparityValue noisy{0.1362, MetricKind::DP, DisparityValue::Source::Noisy};
  EvalReport base = eval_metrics(noisy, truth, noisy);
  CHECK(std::abs(base.raw_error - 0.1062) < 5e-4);
  REQUIRE(base.normalized_error.has_value());
  CHECK(std::abs(*base.normalized_error * 100 - 43.82) < 0.05);

  // Calibrated estimate with published raw error 0.0540.
  DisparityValue cal{0.2424 - 0.0540, MetricKind::DP,
                     DisparityValue::Source::Calibrated};
  EvalReport ev = eval_metrics(cal, truth, noisy);
  REQUIRE(ev.improvement.has_value());
  CHECK(std::abs(*ev.improvement * 100 - 49.15) < 0.05);
}

TEST_CASE("eval_metrics of an exact estimate") {
  DisparityValue truth{0.3, MetricKind::DP, DisparityValue::Source::True};
  DisparityValue base{0.2, MetricKind::DP, DisparityValue::Source::Noisy};
  EvalReport ev = eval_metrics(truth, truth, base);
  CHECK(ev.raw_error == 0.0);
  CHECK(*ev.normalized_error == 0.0);
  CHECK(*ev.improvement == doctest::Approx(1.0));
}

TEST_CASE("eval_metrics leaves undefined ratios absent instead of crashing") {
  DisparityValue zero{0.0, MetricKind::DP, DisparityValue::Source::True};
  DisparityValue est{0.1, MetricKind::DP, DisparityValue::Source::Noisy};
  DisparityValue perfect_base{0.0, MetricKind::DP,
                              DisparityValue::Source::Noisy};
  EvalReport ev = eval_metrics(est, zero, perfect_base);
  CHECK(ev.raw_error == doctest::Approx(0.1));
  CHECK(!ev.normalized_error.has_value());  // truth is zero
  CHECK(!ev.improvement.has_value());       // base raw error is zero
}

TEST_CASE("raw error equals normalized times truth") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    DisparityValue truth{0.05 + rng.uniform01(), MetricKind::DP,
                         DisparityValue::Source::True};
    DisparityValue est{rng.uniform01(), MetricKind::DP,
                       DisparityValue::Source::Noisy};
    EvalReport ev = eval_metrics(est, truth, est);
    REQUIRE(ev.normalized_error.has_value());
    CHECK(ev.raw_error ==
          doctest::Approx(*ev.normalized_error * truth.value).epsilon(1e-12));
  }
}

}  // TEST_SUITE
