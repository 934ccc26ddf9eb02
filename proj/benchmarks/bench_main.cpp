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

#include <benchmark/benchmark.h>

#include "faircal/calibrate.hpp"
#include "faircal/estimator.hpp"
#include "faircal/metrics.hpp"
#include "faircal/simulate.hpp"

namespace {

using namespace faircal;

ScenarioSpec bench_scenario(long n) {
  Eigen::VectorXd prior(2);
  prior << 0.5, 0.5;
  Eigen::MatrixXd pred(2, 2);
  pred << 0.6, 0.4, 0.2, 0.8;
  Eigen::MatrixXd noise(2, 2);
  noise << 0.8, 0.2, 0.3, 0.7;
  return make_dp_scenario(prior, pred, noise, n, 7);
}

void BM_SampleDataset(benchmark::State& state) {
  ScenarioSpec spec = bench_scenario(state.range(0));
  for (auto _ : state) {
    Dataset ds = sample_dataset(spec);
    benchmark::DoNotOptimize(ds.noisy_attrs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleDataset)->Arg(10000)->Arg(100000);

void BM_BuildH(benchmark::State& state) {
  Dataset ds = sample_dataset(bench_scenario(state.range(0)));
  for (auto _ : state) {
    FairnessMatrix h = build_h(ds, AttrSource::noisy(1), MetricKind::DP);
    benchmark::DoNotOptimize(h.entries().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildH)->Arg(100000);

void BM_Consensus(benchmark::State& state) {
  Dataset ds = sample_dataset(bench_scenario(state.range(0)));
  Eigen::MatrixXi triples = sample_three(ds, 3);
  std::vector<int> rows = all_rows(ds.n());
  for (auto _ : state) {
    ConsensusStats s = consensus(triples, rows, 2);
    benchmark::DoNotOptimize(s.c1.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Consensus)->Arg(100000);

void BM_HocSolve(benchmark::State& state) {
  Eigen::MatrixXd t(2, 2);
  t << 0.8, 0.2, 0.3, 0.7;
  Eigen::VectorXd p(2);
  p << 0.4, 0.6;
  ConsensusStats stats = model_consensus(t, p);
  HocConfig cfg;
  for (auto _ : state) {
    HocSolution sol = hoc_solve(stats, cfg, 1);
    benchmark::DoNotOptimize(sol.residual);
  }
}
BENCHMARK(BM_HocSolve);

void BM_PipelineGlobal(benchmark::State& state) {
  Dataset ds = sample_dataset(bench_scenario(state.range(0)));
  PipelineConfig cfg;
  cfg.hoc.residual_tol = 1e-3;
  for (auto _ : state) {
    CalibrationResult res =
        run_pipeline(ds, MetricKind::DP, PipelineMode::Global, cfg);
    benchmark::DoNotOptimize(res.disparity.value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipelineGlobal)->Arg(20000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
