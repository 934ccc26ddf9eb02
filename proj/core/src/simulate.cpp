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

#include "faircal/simulate.hpp"

#include <cmath>
#include <sstream>

#include "faircal/metrics.hpp"
#include "faircal/parallel.hpp"
#include "faircal/rng.hpp"

namespace faircal {

namespace {

void check_distribution_rows(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) < -kStochasticTol)
        throw ValidationError(std::string(what) + ": negative probability");
      sum += m(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-8) {
      std::ostringstream os;
      os << what << ": row " << (i + 1) << " sums to " << sum;
      throw ValidationError(os.str());
    }
  }
}

int noise_count(NoiseScope scope, int kk) {
  switch (scope) {
    case NoiseScope::Global:
      return 1;
    case NoiseScope::PerPrediction:
      return kk;
    case NoiseScope::PerPredictionLabel:
      return kk * kk;
  }
  return 0;
}

// 0-based (k, y) -> noise matrix index.
int noise_index(NoiseScope scope, int kk, int k, int y) {
  switch (scope) {
    case NoiseScope::Global:
      return 0;
    case NoiseScope::PerPrediction:
      return k;
    case NoiseScope::PerPredictionLabel:
      return kk * k + y;
  }
  return 0;
}

}  // namespace

ScenarioSpec make_dp_scenario(const Eigen::VectorXd& prior,
                              const Eigen::MatrixXd& pred_given_group,
                              const Eigen::MatrixXd& noise_t, long n_samples,
                              uint64_t seed, int c_models) {
  ScenarioSpec spec;
  spec.m_groups = static_cast<int>(prior.size());
  spec.k_classes = static_cast<int>(pred_given_group.cols());
  spec.prior = prior;
  spec.label_given_group = Eigen::MatrixXd::Constant(
      spec.m_groups, spec.k_classes, 1.0 / spec.k_classes);
  // Prediction rates independent of the label.
  spec.pred_given_group_label =
      Eigen::MatrixXd(spec.m_groups, spec.k_classes * spec.k_classes);
  for (int k = 0; k < spec.k_classes; ++k)
    for (int y = 0; y < spec.k_classes; ++y)
      spec.pred_given_group_label.col(spec.k_classes * k + y) =
          pred_given_group.col(k);
  spec.noise_scope = NoiseScope::Global;
  spec.noise = {noise_t};
  spec.c_models = c_models;
  spec.n_samples = n_samples;
  spec.seed = seed;
  return spec;
}

ScenarioSpec validate_scenario(ScenarioSpec spec) {
  const int m = spec.m_groups;
  const int kk = spec.k_classes;
  if (m < 2) throw ValidationError("scenario: m_groups must be >= 2");
  if (kk < 1) throw ValidationError("scenario: k_classes must be >= 1");
  if (spec.prior.size() != m)
    throw ValidationError("scenario: prior has wrong length");
  check_distribution_rows(spec.prior.transpose(), "scenario prior");
  if (spec.prior.minCoeff() <= 0.0)
    throw ValidationError("scenario: every group needs positive prior mass");
  if (spec.label_given_group.rows() != m ||
      spec.label_given_group.cols() != kk)
    throw ValidationError("scenario: label_given_group must be M x K");
  check_distribution_rows(spec.label_given_group, "label_given_group");
  if (spec.pred_given_group_label.rows() != m ||
      spec.pred_given_group_label.cols() != kk * kk)
    throw ValidationError(
        "scenario: pred_given_group_label must be M x K^2");
  // Each (a, y) slice over k must be a distribution.
  for (int a = 0; a < m; ++a)
    for (int y = 0; y < kk; ++y) {
      double sum = 0.0;
      for (int k = 0; k < kk; ++k) {
        double v = spec.pred_given_group_label(a, kk * k + y);
        if (v < -kStochasticTol)
          throw ValidationError("scenario: negative prediction rate");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-8) {
        std::ostringstream os;
        os << "scenario: prediction rates of (a=" << (a + 1)
           << ", y=" << (y + 1) << ") sum to " << sum;
        throw ValidationError(os.str());
      }
    }
  int want = noise_count(spec.noise_scope, kk);
  if (static_cast<int>(spec.noise.size()) != want) {
    std::ostringstream os;
    os << "scenario: noise scope needs " << want << " matrices, got "
       << spec.noise.size();
    throw ValidationError(os.str());
  }
  for (const auto& t : spec.noise) {
    if (t.rows() != m || t.cols() != m)
      throw ValidationError("scenario: noise matrices must be M x M");
    check_distribution_rows(t, "noise matrix");
  }
  if (spec.c_models < 1)
    throw ValidationError("scenario: c_models must be >= 1");
  if (spec.features && spec.features->dim < 1)
    throw ValidationError("scenario: feature dim must be >= 1");
  return spec;
}

PopulationMoments::PopulationMoments(const ScenarioSpec& raw_spec) {
  ScenarioSpec spec = validate_scenario(raw_spec);
  m_ = spec.m_groups;
  k_ = spec.k_classes;
  noise_scope_ = spec.noise_scope;
  noise_ = spec.noise;
  joint_.assign(static_cast<size_t>(m_) * k_ * k_ * m_, 0.0);
  for (int a = 0; a < m_; ++a)
    for (int y = 0; y < k_; ++y)
      for (int k = 0; k < k_; ++k) {
        double base = spec.prior[a] * spec.label_given_group(a, y) *
                      spec.pred_given_group_label(a, k_ * k + y);
        const Eigen::MatrixXd& t =
            spec.noise[noise_index(noise_scope_, k_, k, y)];
        for (int b = 0; b < m_; ++b)
          joint_[static_cast<size_t>(((a * k_ + y) * k_ + k) * m_ + b)] =
              base * t(a, b);
      }
  // Every group and every noisy value must be reachable, otherwise the
  // fairness matrices are undefined.
  if (noisy_prior().probs().minCoeff() <= 0.0)
    throw ValidationError(
        "scenario: some noisy attribute value has zero probability");
}

double PopulationMoments::at(int a, int y, int k, int b) const {
  return joint_[static_cast<size_t>(((a * k_ + y) * k_ + k) * m_ + b)];
}

double PopulationMoments::marginal3(int a, int y, int k) const {
  double s = 0.0;
  for (int b = 0; b < m_; ++b) s += at(a, y, k, b);
  return s;
}

Prior PopulationMoments::prior() const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m_);
  for (int a = 0; a < m_; ++a)
    for (int y = 0; y < k_; ++y)
      for (int k = 0; k < k_; ++k) p[a] += marginal3(a, y, k);
  return Prior(p / p.sum());
}

Prior PopulationMoments::noisy_prior() const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m_);
  for (int a = 0; a < m_; ++a)
    for (int y = 0; y < k_; ++y)
      for (int k = 0; k < k_; ++k)
        for (int b = 0; b < m_; ++b) p[b] += at(a, y, k, b);
  return Prior(p / p.sum());
}

Prior PopulationMoments::label_prior(int y) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m_);
  for (int a = 0; a < m_; ++a)
    for (int k = 0; k < k_; ++k) p[a] += marginal3(a, y - 1, k);
  double s = p.sum();
  if (s <= 0.0) {
    std::ostringstream os;
    os << "scenario: label y=" << y << " has zero probability";
    throw ValidationError(os.str());
  }
  return Prior(p / s, y);
}

Prior PopulationMoments::noisy_label_prior(int y) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m_);
  for (int a = 0; a < m_; ++a)
    for (int k = 0; k < k_; ++k)
      for (int b = 0; b < m_; ++b) p[b] += at(a, y - 1, k, b);
  double s = p.sum();
  if (s <= 0.0) {
    std::ostringstream os;
    os << "scenario: label y=" << y << " has zero probability";
    throw ValidationError(os.str());
  }
  return Prior(p / s, y);
}

FairnessMatrix PopulationMoments::true_h(MetricKind kind) const {
  const int cols = metric_columns(kind, k_);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m_, cols);
  if (kind == MetricKind::DP) {
    for (int a = 0; a < m_; ++a) {
      double pa = 0.0;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(k_);
      for (int y = 0; y < k_; ++y)
        for (int k = 0; k < k_; ++k) {
          double v = marginal3(a, y, k);
          pa += v;
          row[k] += v;
        }
      if (pa <= 0.0) throw ValidationError("scenario: empty group");
      h.row(a) = row.transpose() / pa;
    }
  } else {
    for (int a = 0; a < m_; ++a)
      for (int y = 0; y < k_; ++y) {
        double cell = 0.0;
        for (int k = 0; k < k_; ++k) cell += marginal3(a, y, k);
        if (cell <= 0.0) {
          std::ostringstream os;
          os << "scenario: empty cell (a=" << (a + 1) << ", y=" << (y + 1)
             << ")";
          throw ValidationError(os.str());
        }
        for (int k = 0; k < k_; ++k) {
          if (kind == MetricKind::EOd)
            h(a, k_ * k + y) = marginal3(a, y, k) / cell;
          else if (k == 0 && y == 0)
            h(a, 0) = marginal3(a, 0, 0) / cell;
        }
      }
  }
  return FairnessMatrix(std::move(h), kind, k_);
}

FairnessMatrix PopulationMoments::noisy_h(MetricKind kind) const {
  const int cols = metric_columns(kind, k_);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m_, cols);
  if (kind == MetricKind::DP) {
    for (int b = 0; b < m_; ++b) {
      double pb = 0.0;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(k_);
      for (int a = 0; a < m_; ++a)
        for (int y = 0; y < k_; ++y)
          for (int k = 0; k < k_; ++k) {
            double v = at(a, y, k, b);
            pb += v;
            row[k] += v;
          }
      h.row(b) = row.transpose() / pb;
    }
  } else {
    for (int b = 0; b < m_; ++b)
      for (int y = 0; y < k_; ++y) {
        double cell = 0.0;
        Eigen::VectorXd row = Eigen::VectorXd::Zero(k_);
        for (int a = 0; a < m_; ++a)
          for (int k = 0; k < k_; ++k) {
            double v = at(a, y, k, b);
            cell += v;
            row[k] += v;
          }
        if (cell <= 0.0) {
          std::ostringstream os;
          os << "scenario: empty noisy cell (b=" << (b + 1)
             << ", y=" << (y + 1) << ")";
          throw ValidationError(os.str());
        }
        for (int k = 0; k < k_; ++k) {
          if (kind == MetricKind::EOd)
            h(b, k_ * k + y) = row[k] / cell;
          else if (k == 0 && y == 0)
            h(b, 0) = row[0] / cell;
        }
      }
  }
  return FairnessMatrix(std::move(h), kind, k_);
}

double PopulationMoments::true_disparity(MetricKind kind) const {
  return disparity(true_h(kind), DisparityValue::Source::True).value;
}

double PopulationMoments::noisy_disparity(MetricKind kind) const {
  return disparity(noisy_h(kind), DisparityValue::Source::Noisy).value;
}

TransitionMatrix PopulationMoments::t_global() const {
  if (noise_scope_ == NoiseScope::Global)
    return TransitionMatrix(noise_[0], Scope::global());
  Eigen::MatrixXd t(m_, m_);
  for (int a = 0; a < m_; ++a) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(m_);
    double pa = 0.0;
    for (int y = 0; y < k_; ++y)
      for (int k = 0; k < k_; ++k)
        for (int b = 0; b < m_; ++b) {
          row[b] += at(a, y, k, b);
          pa += at(a, y, k, b);
        }
    t.row(a) = row.transpose() / pa;
  }
  return TransitionMatrix(std::move(t), Scope::global());
}

TransitionMatrix PopulationMoments::t_prediction(int k) const {
  Scope scope = Scope::prediction(k);
  if (noise_scope_ == NoiseScope::Global)
    return TransitionMatrix(noise_[0], scope);
  if (noise_scope_ == NoiseScope::PerPrediction)
    return TransitionMatrix(noise_[static_cast<size_t>(k - 1)], scope);
  Eigen::MatrixXd t(m_, m_);
  for (int a = 0; a < m_; ++a) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(m_);
    double denom = 0.0;
    for (int y = 0; y < k_; ++y)
      for (int b = 0; b < m_; ++b) {
        double v = at(a, y, k - 1, b);
        row[b] += v;
        denom += v;
      }
    if (denom <= 0.0) {
      std::ostringstream os;
      os << "scenario: P(f=" << k << ", A=" << (a + 1) << ") is zero";
      throw ValidationError(os.str());
    }
    t.row(a) = row.transpose() / denom;
  }
  return TransitionMatrix(std::move(t), scope);
}

TransitionMatrix PopulationMoments::t_label(int y) const {
  Scope scope = Scope::label(y);
  if (noise_scope_ == NoiseScope::Global)
    return TransitionMatrix(noise_[0], scope);
  Eigen::MatrixXd t(m_, m_);
  for (int a = 0; a < m_; ++a) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(m_);
    double denom = 0.0;
    for (int k = 0; k < k_; ++k)
      for (int b = 0; b < m_; ++b) {
        double v = at(a, y - 1, k, b);
        row[b] += v;
        denom += v;
      }
    if (denom <= 0.0) {
      std::ostringstream os;
      os << "scenario: P(Y=" << y << ", A=" << (a + 1) << ") is zero";
      throw ValidationError(os.str());
    }
    t.row(a) = row.transpose() / denom;
  }
  return TransitionMatrix(std::move(t), scope);
}

TransitionMatrix PopulationMoments::t_prediction_label(int k, int y) const {
  Scope scope = Scope::prediction_label(k, y);
  switch (noise_scope_) {
    case NoiseScope::Global:
      return TransitionMatrix(noise_[0], scope);
    case NoiseScope::PerPrediction:
      return TransitionMatrix(noise_[static_cast<size_t>(k - 1)], scope);
    case NoiseScope::PerPredictionLabel:
      return TransitionMatrix(
          noise_[static_cast<size_t>(k_ * (k - 1) + y - 1)], scope);
  }
  throw Error("unreachable");
}

double PopulationMoments::e1() const {
  if (m_ != 2) throw ValidationError("e1/e2 are defined for M=2 only");
  // P(A=1 | noisy A=2)
  double joint_a1_b2 = 0.0, pb2 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int y = 0; y < k_; ++y)
      for (int k = 0; k < k_; ++k) {
        double v = at(a, y, k, 1);
        pb2 += v;
        if (a == 0) joint_a1_b2 += v;
      }
  return joint_a1_b2 / pb2;
}

double PopulationMoments::e2() const {
  if (m_ != 2) throw ValidationError("e1/e2 are defined for M=2 only");
  double joint_a2_b1 = 0.0, pb1 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int y = 0; y < k_; ++y)
      for (int k = 0; k < k_; ++k) {
        double v = at(a, y, k, 0);
        pb1 += v;
        if (a == 1) joint_a2_b1 += v;
      }
  return joint_a2_b1 / pb1;
}

BoundInputs PopulationMoments::bound_inputs(MetricKind kind) const {
  BoundInputs in{true_h(kind), {}, {}, {}, {}, {}, {}};
  if (kind == MetricKind::DP) {
    for (int k = 1; k <= k_; ++k) in.t_scope.push_back(t_prediction(k));
    in.t_ref.push_back(t_global());
    in.p.push_back(prior());
    in.p_tilde.push_back(noisy_prior());
  } else if (kind == MetricKind::EOd) {
    for (int k = 1; k <= k_; ++k)
      for (int y = 1; y <= k_; ++y)
        in.t_scope.push_back(t_prediction_label(k, y));
    for (int y = 1; y <= k_; ++y) {
      in.t_ref.push_back(t_label(y));
      in.p.push_back(label_prior(y));
      in.p_tilde.push_back(noisy_label_prior(y));
    }
  } else {
    in.t_scope.push_back(t_prediction_label(1, 1));
    in.t_ref.push_back(t_label(1));
    in.p.push_back(label_prior(1));
    in.p_tilde.push_back(noisy_label_prior(1));
  }
  return in;
}

PopulationMoments population_moments(const ScenarioSpec& spec) {
  return PopulationMoments(spec);
}

Dataset sample_dataset(const ScenarioSpec& raw_spec) {
  ScenarioSpec spec = validate_scenario(raw_spec);
  if (spec.n_samples <= 0)
    throw ValidationError("scenario: n_samples must be positive");
  const int m = spec.m_groups;
  const int kk = spec.k_classes;
  const long n = spec.n_samples;
  Rng rng(spec.seed);

  Dataset ds;
  ds.k_classes = kk;
  ds.m_groups = m;
  ds.labels.resize(n);
  ds.predictions.resize(n);
  ds.true_attrs.resize(n);
  ds.noisy_attrs.resize(n, spec.c_models);
  const bool with_features = spec.features.has_value();
  if (with_features) ds.features.resize(n, spec.features->dim);

  std::vector<double> pred_slice(static_cast<size_t>(kk));
  for (long i = 0; i < n; ++i) {
    int a = rng.categorical(spec.prior.data(), m);
    Eigen::VectorXd lrow = spec.label_given_group.row(a);
    int y = rng.categorical(lrow.data(), kk);
    for (int k = 0; k < kk; ++k)
      pred_slice[static_cast<size_t>(k)] =
          spec.pred_given_group_label(a, kk * k + y);
    int k = rng.categorical(pred_slice.data(), kk);
    const Eigen::MatrixXd& t =
        spec.noise[noise_index(spec.noise_scope, kk, k, y)];
    Eigen::VectorXd trow = t.row(a);
    int first = rng.categorical(trow.data(), m);
    ds.noisy_attrs(i, 0) = first + 1;
    for (int c = 1; c < spec.c_models; ++c)
      ds.noisy_attrs(i, c) =
          spec.iid_copies ? rng.categorical(trow.data(), m) + 1 : first + 1;
    ds.labels[i] = y + 1;
    ds.predictions[i] = k + 1;
    ds.true_attrs[i] = a + 1;
    if (with_features) {
      const FeatureSpec& fs = *spec.features;
      for (int d = 0; d < fs.dim; ++d) {
        double center = (a % fs.dim == d) ? fs.separation * (1 + a / fs.dim)
                                          : 0.0;
        ds.features(i, d) = center + rng.gaussian(0.0, fs.noise_sd);
      }
    }
  }
  return validate(std::move(ds));
}

Eigen::MatrixXd flip_matrix(const Eigen::MatrixXd& off_diag) {
  if (off_diag.rows() != off_diag.cols() || off_diag.rows() < 2)
    throw ValidationError("flip rates: matrix must be square M x M");
  const int m = static_cast<int>(off_diag.rows());
  Eigen::MatrixXd f = off_diag;
  for (int a = 0; a < m; ++a) {
    double off = 0.0;
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      if (off_diag(a, b) < 0.0 || off_diag(a, b) > 1.0)
        throw ValidationError("flip rates: entries must lie in [0,1]");
      off += off_diag(a, b);
    }
    if (off > 1.0 + kStochasticTol)
      throw ValidationError("flip rates: row exceeds total probability 1");
    f(a, a) = 1.0 - off;
  }
  return f;
}

Dataset flip_attributes(const Dataset& ds, const Eigen::MatrixXd& off_diag,
                        uint64_t seed) {
  Eigen::MatrixXd f = flip_matrix(off_diag);
  if (f.rows() != ds.m_groups)
    throw ValidationError("flip rates: dimension does not match m_groups");
  Rng rng(seed);
  Dataset out = ds;
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (int c = 0; c < ds.c_models(); ++c) {
      int cur = ds.noisy_attrs(i, c) - 1;
      Eigen::VectorXd row = f.row(cur);
      out.noisy_attrs(i, c) = rng.categorical(row.data(), ds.m_groups) + 1;
    }
  return out;
}

TransitionMatrix perturb_transition(const TransitionMatrix& t,
                                    double magnitude, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd e = t.entries();
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      e(i, j) = std::max(1e-6, e(i, j) + rng.uniform(-magnitude, magnitude));
    e.row(i) /= e.row(i).sum();
  }
  return TransitionMatrix(std::move(e), t.scope());
}

Prior perturb_prior(const Prior& p, double magnitude, uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v = p.probs();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = std::max(1e-6, v[i] + rng.uniform(-magnitude, magnitude));
  v /= v.sum();
  return p.conditioned_on_label() ? Prior(v, p.given_label()) : Prior(v);
}

double exact_calibrated_disparity(const PopulationMoments& mom,
                                  MetricKind kind,
                                  const std::vector<TransitionMatrix>& t_hat,
                                  const std::vector<Prior>& p_hat,
                                  double cond_max) {
  const int kk = mom.k_classes();
  FairnessMatrix noisy = mom.noisy_h(kind);
  Eigen::MatrixXd calibrated(noisy.groups(), noisy.columns());
  if (kind == MetricKind::DP) {
    Prior pt = mom.noisy_prior();
    for (int k = 1; k <= kk; ++k)
      calibrated.col(k - 1) = calibrate_column(
          noisy.entries().col(k - 1), t_hat[static_cast<size_t>(k - 1)],
          p_hat[0], pt, cond_max);
  } else if (kind == MetricKind::EOd) {
    for (int k = 1; k <= kk; ++k)
      for (int y = 1; y <= kk; ++y) {
        int col = kk * (k - 1) + y - 1;
        calibrated.col(col) = calibrate_column(
            noisy.entries().col(col), t_hat[static_cast<size_t>(col)],
            p_hat[static_cast<size_t>(y - 1)], mom.noisy_label_prior(y),
            cond_max);
      }
  } else {
    calibrated.col(0) =
        calibrate_column(noisy.entries().col(0), t_hat[0], p_hat[0],
                         mom.noisy_label_prior(1), cond_max);
  }
  FairnessMatrix h(std::move(calibrated), kind, kk);
  return disparity(h, DisparityValue::Source::Calibrated).value;
}

namespace {

std::optional<double> experiment_bound_cal(const PopulationMoments& mom,
                                           MetricKind kind,
                                           const EstimatedStats& est) {
  BoundInputs in = mom.bound_inputs(kind);
  for (const ScopeEstimate& se : est.transitions)
    in.t_hat.push_back(se.transition);
  if (kind == MetricKind::DP) {
    in.p_hat.push_back(est.prior);
  } else {
    for (const Prior& p : est.label_priors) in.p_hat.push_back(p);
  }
  return bound_cal(in, kind);
}

}  // namespace

ExperimentTable run_experiment(const ScenarioSpec& raw_spec,
                               const ExperimentConfig& cfg) {
  ScenarioSpec spec = validate_scenario(raw_spec);
  if (cfg.trials < 1) throw ValidationError("experiment: trials must be >= 1");
  PopulationMoments mom(spec);
  ExperimentTable table;
  table.kind = cfg.kind;
  table.true_disparity = mom.true_disparity(cfg.kind);
  table.noisy_disparity_population = mom.noisy_disparity(cfg.kind);
  table.bound_raw_population = bound_raw(mom.bound_inputs(cfg.kind), cfg.kind);
  if (spec.m_groups == 2 && spec.k_classes == 2 &&
      cfg.kind == MetricKind::DP && table.true_disparity > 0.0) {
    table.gamma = gamma_threshold(mom.e1(), mom.e2(),
                                  mom.true_h(MetricKind::DP),
                                  table.true_disparity);
  }

  const double truth = table.true_disparity;
  const size_t n_modes = cfg.modes.size();
  table.rows.assign(static_cast<size_t>(cfg.trials) * n_modes, TrialResult{});

  parallel_for(cfg.trials, cfg.threads, [&](int t) {
    ScenarioSpec trial_spec = spec;
    trial_spec.seed = derive_seed(cfg.seed, 2 * static_cast<uint64_t>(t));
    Dataset ds = sample_dataset(trial_spec);

    PipelineConfig pipe = cfg.pipeline;
    pipe.hoc.seed = derive_seed(cfg.seed, 2 * static_cast<uint64_t>(t) + 1);

    CalibrationResult base =
        run_pipeline(ds, cfg.kind, PipelineMode::Base, pipe);
    double base_raw = std::abs(base.disparity.value - truth);
    DisparityValue truth_value{truth, cfg.kind, DisparityValue::Source::True};

    for (size_t mi = 0; mi < n_modes; ++mi) {
      PipelineMode mode = cfg.modes[mi];
      TrialResult row;
      row.trial = t;
      row.mode = mode;
      std::optional<EstimatedStats> est;
      if (mode == PipelineMode::Base) {
        row.disparity = base.disparity.value;
      } else {
        CalibrationResult res = run_pipeline(ds, cfg.kind, mode, pipe);
        row.disparity = res.disparity.value;
        est = std::move(res.estimates);
      }
      DisparityValue est_value{row.disparity, cfg.kind,
                               DisparityValue::Source::Calibrated};
      EvalReport ev = eval_metrics(est_value, truth_value, base.disparity);
      row.raw_error = ev.raw_error;
      row.normalized_error = ev.normalized_error;
      row.improvement = ev.improvement;
      if (est) row.bound_cal = experiment_bound_cal(mom, cfg.kind, *est);
      row.win_vs_base = row.raw_error < base_raw;
      table.rows[static_cast<size_t>(t) * n_modes + mi] = std::move(row);
    }
  });

  // Aggregate per mode in declaration order.
  for (size_t mi = 0; mi < n_modes; ++mi) {
    ModeSummary s;
    s.mode = cfg.modes[mi];
    double wins = 0.0;
    std::vector<double> raws, norms;
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialResult& row = table.rows[static_cast<size_t>(t) * n_modes + mi];
      raws.push_back(row.raw_error);
      if (row.normalized_error) norms.push_back(*row.normalized_error);
      if (row.win_vs_base) wins += 1.0;
    }
    auto mean_std = [](const std::vector<double>& v) {
      if (v.empty()) return std::pair<double, double>{0.0, 0.0};
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      if (v.size() > 1) var /= static_cast<double>(v.size() - 1);
      return std::pair<double, double>{mean, std::sqrt(var)};
    };
    std::tie(s.mean_raw_error, s.std_raw_error) = mean_std(raws);
    std::tie(s.mean_normalized_error, s.std_normalized_error) =
        mean_std(norms);
    s.win_rate_vs_base = wins / static_cast<double>(cfg.trials);
    table.summaries.push_back(s);
  }
  return table;
}

}  // namespace faircal
