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

#include "faircal/io.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "faircal/metrics.hpp"
#include "faircal/rng.hpp"
#include "faircal/stats.hpp"

namespace faircal {

using nlohmann::json;

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

int parse_int(const std::string& s, long row, const std::string& col) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    std::ostringstream os;
    os << "row " << row << ", column '" << col << "': not an integer ('" << s
       << "')";
    throw ValidationError(os.str());
  }
  return static_cast<int>(v);
}

double parse_double(const std::string& s, long row, const std::string& col) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    std::ostringstream os;
    os << "row " << row << ", column '" << col << "': not a number ('" << s
       << "')";
    throw ValidationError(os.str());
  }
  return v;
}

// Indices of a contiguous numbered column family prefix1..prefixN, or an
// error if the numbering has gaps.
std::vector<int> family_columns(
    const std::map<std::string, int>& header, char prefix) {
  std::vector<int> cols;
  for (int i = 1;; ++i) {
    std::string name = std::string(1, prefix) + std::to_string(i);
    auto it = header.find(name);
    if (it == header.end()) break;
    cols.push_back(it->second);
  }
  // Any leftover columns with this prefix mean a gap or an alias in the
  // numbering (a4 after a1..a2, or a01).
  for (const auto& [name, idx] : header) {
    if (name.size() < 2 || name[0] != prefix) continue;
    bool digits = true;
    for (size_t i = 1; i < name.size(); ++i)
      digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
    if (!digits) continue;
    int num = std::atoi(name.c_str() + 1);
    bool canonical = name.substr(1) == std::to_string(num);
    if (!canonical || num < 1 || num > static_cast<int>(cols.size())) {
      std::ostringstream os;
      os << "column '" << name << "' breaks the contiguous numbering "
         << prefix << "1.." << prefix << static_cast<int>(cols.size());
      throw ValidationError(os.str());
    }
  }
  return cols;
}

}  // namespace

Dataset read_csv(const std::string& path, std::optional<int> k_classes,
                 std::optional<int> m_groups) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("'" + path + "': empty file, header row required");

  std::map<std::string, int> header;
  std::vector<std::string> names = split_line(line);
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty())
      throw ValidationError("header has an empty column name");
    if (!header.emplace(names[i], static_cast<int>(i)).second)
      throw ValidationError("duplicate column '" + names[i] + "'");
  }
  for (const char* required : {"y", "fpred"})
    if (!header.count(required))
      throw ValidationError(std::string("missing column '") + required + "'");
  std::vector<int> a_cols = family_columns(header, 'a');
  std::vector<int> x_cols = family_columns(header, 'x');
  bool has_truth = header.count("a") > 0;
  // Reject unknown columns so typos fail loudly.
  size_t known = 2 + a_cols.size() + x_cols.size() + (has_truth ? 1 : 0);
  if (known != names.size()) {
    for (const auto& [name, idx] : header) {
      if (name == "y" || name == "fpred" || name == "a") continue;
      bool family = name.size() >= 2 && (name[0] == 'a' || name[0] == 'x');
      for (size_t i = 1; family && i < name.size(); ++i)
        family = std::isdigit(static_cast<unsigned char>(name[i]));
      if (!family)
        throw ValidationError("unknown column '" + name + "'");
    }
  }
  if (a_cols.empty())
    throw ValidationError("missing columns 'a1..aC' (need at least a1)");

  std::vector<int> ys, fs, as;
  std::vector<std::vector<int>> noisy(a_cols.size());
  std::vector<std::vector<double>> feats;
  long row = 1;  // header row
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() && in.eof()) break;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != names.size()) {
      std::ostringstream os;
      os << "row " << row << ": expected " << names.size() << " fields, got "
         << fields.size();
      throw ValidationError(os.str());
    }
    ys.push_back(parse_int(fields[header["y"]], row, "y"));
    fs.push_back(parse_int(fields[header["fpred"]], row, "fpred"));
    if (has_truth) as.push_back(parse_int(fields[header["a"]], row, "a"));
    for (size_t c = 0; c < a_cols.size(); ++c)
      noisy[c].push_back(parse_int(fields[a_cols[c]], row,
                                   "a" + std::to_string(c + 1)));
    if (!x_cols.empty()) {
      std::vector<double> x(x_cols.size());
      for (size_t d = 0; d < x_cols.size(); ++d)
        x[d] = parse_double(fields[x_cols[d]], row,
                            "x" + std::to_string(d + 1));
      feats.push_back(std::move(x));
    }
  }
  if (ys.empty()) throw ValidationError("'" + path + "': no data rows");

  Dataset ds;
  const long n = static_cast<long>(ys.size());
  ds.labels.resize(n);
  ds.predictions.resize(n);
  ds.noisy_attrs.resize(n, static_cast<int>(a_cols.size()));
  if (has_truth) ds.true_attrs.resize(n);
  for (long i = 0; i < n; ++i) {
    ds.labels[i] = ys[static_cast<size_t>(i)];
    ds.predictions[i] = fs[static_cast<size_t>(i)];
    if (has_truth) ds.true_attrs[i] = as[static_cast<size_t>(i)];
    for (size_t c = 0; c < a_cols.size(); ++c)
      ds.noisy_attrs(i, static_cast<int>(c)) = noisy[c][static_cast<size_t>(i)];
  }
  if (!feats.empty()) ds.features = make_features(feats);

  int k_seen = std::max(ds.labels.maxCoeff(), ds.predictions.maxCoeff());
  int m_seen = ds.noisy_attrs.maxCoeff();
  if (has_truth) m_seen = std::max(m_seen, ds.true_attrs.maxCoeff());
  ds.k_classes = k_classes.value_or(k_seen);
  ds.m_groups = m_groups.value_or(std::max(m_seen, 2));
  return validate(std::move(ds));
}

void write_csv(const std::string& path, const Dataset& ds) {
  std::ostringstream out;
  out << "y,fpred";
  if (ds.has_true_attrs()) out << ",a";
  for (int c = 1; c <= ds.c_models(); ++c) out << ",a" << c;
  for (int d = 1; d <= ds.feature_dim(); ++d) out << ",x" << d;
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << ds.labels[i] << ',' << ds.predictions[i];
    if (ds.has_true_attrs()) out << ',' << ds.true_attrs[i];
    for (int c = 0; c < ds.c_models(); ++c) out << ',' << ds.noisy_attrs(i, c);
    for (int d = 0; d < ds.feature_dim(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, d));
      out << ',' << buf;
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

double round_sig(double x, int digits) {
  if (!std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

namespace {

json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_sig(x, 10);
}

json num_opt(const std::optional<double>& x) {
  return x ? num(*x) : json(nullptr);
}

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(num(v[i]));
  return arr;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ValidationError(std::string(what) + ": expected a matrix");
  size_t cols = 0;
  for (const auto& row : j) {
    if (!row.is_array())
      throw ValidationError(std::string(what) + ": expected rows of numbers");
    if (cols == 0) cols = row.size();
    if (row.size() != cols)
      throw ValidationError(std::string(what) + ": ragged matrix rows");
  }
  Eigen::MatrixXd m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i)
    for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ValidationError(std::string(what) + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

const char* noise_scope_name(NoiseScope s) {
  switch (s) {
    case NoiseScope::Global:
      return "global";
    case NoiseScope::PerPrediction:
      return "per_prediction";
    case NoiseScope::PerPredictionLabel:
      return "per_prediction_label";
  }
  return "?";
}

NoiseScope noise_scope_from_name(const std::string& s) {
  if (s == "global") return NoiseScope::Global;
  if (s == "per_prediction") return NoiseScope::PerPrediction;
  if (s == "per_prediction_label") return NoiseScope::PerPredictionLabel;
  throw ValidationError("unknown noise scope '" + s + "'");
}

}  // namespace

ScenarioSpec parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario: invalid JSON: ") + e.what());
  }
  ScenarioSpec spec;
  try {
    spec.m_groups = j.at("m_groups").get<int>();
    spec.k_classes = j.at("k_classes").get<int>();
    spec.prior = vector_from_json(j.at("prior"), "prior");
    if (j.count("label_given_group"))
      spec.label_given_group =
          matrix_from_json(j["label_given_group"], "label_given_group");
    else
      spec.label_given_group = Eigen::MatrixXd::Constant(
          spec.m_groups, spec.k_classes, 1.0 / spec.k_classes);
    if (j.count("pred_given_group_label")) {
      spec.pred_given_group_label = matrix_from_json(
          j["pred_given_group_label"], "pred_given_group_label");
    } else if (j.count("pred_given_group")) {
      Eigen::MatrixXd p =
          matrix_from_json(j["pred_given_group"], "pred_given_group");
      if (p.cols() != spec.k_classes || p.rows() != spec.m_groups)
        throw ValidationError("pred_given_group must be M x K");
      spec.pred_given_group_label =
          Eigen::MatrixXd(spec.m_groups, spec.k_classes * spec.k_classes);
      for (int k = 0; k < spec.k_classes; ++k)
        for (int y = 0; y < spec.k_classes; ++y)
          spec.pred_given_group_label.col(spec.k_classes * k + y) = p.col(k);
    } else {
      throw ValidationError(
          "scenario needs pred_given_group or pred_given_group_label");
    }
    const json& noise = j.at("noise");
    spec.noise_scope =
        noise_scope_from_name(noise.at("scope").get<std::string>());
    if (noise.count("t")) {
      spec.noise = {matrix_from_json(noise["t"], "noise.t")};
    } else {
      for (const auto& m : noise.at("matrices"))
        spec.noise.push_back(matrix_from_json(m, "noise.matrices"));
    }
    spec.c_models = j.value("c_models", 3);
    spec.iid_copies = j.value("iid_copies", true);
    spec.n_samples = j.value("n_samples", 0L);
    spec.seed = j.value("seed", uint64_t{0});
    if (j.count("features")) {
      FeatureSpec fs;
      fs.dim = j["features"].value("dim", 2);
      fs.separation = j["features"].value("separation", 6.0);
      fs.noise_sd = j["features"].value("noise_sd", 1.0);
      spec.features = fs;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  return validate_scenario(std::move(spec));
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str());
}

std::string scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["m_groups"] = spec.m_groups;
  j["k_classes"] = spec.k_classes;
  j["prior"] = vector_json(spec.prior);
  j["label_given_group"] = matrix_json(spec.label_given_group);
  j["pred_given_group_label"] = matrix_json(spec.pred_given_group_label);
  json noise;
  noise["scope"] = noise_scope_name(spec.noise_scope);
  json mats = json::array();
  for (const auto& m : spec.noise) mats.push_back(matrix_json(m));
  noise["matrices"] = mats;
  j["noise"] = noise;
  j["c_models"] = spec.c_models;
  j["iid_copies"] = spec.iid_copies;
  j["n_samples"] = spec.n_samples;
  j["seed"] = spec.seed;
  if (spec.features) {
    j["features"] = {{"dim", spec.features->dim},
                     {"separation", num(spec.features->separation)},
                     {"noise_sd", num(spec.features->noise_sd)}};
  }
  return j.dump(2) + "\n";
}

namespace {

json config_echo(const PipelineConfig& cfg, MetricKind kind,
                 PipelineMode mode) {
  // The thread count is deliberately not echoed: it cannot change any
  // reported value and reports must be byte-identical across schedules.
  json c;
  c["metric"] = metric_name(kind);
  c["mode"] = mode_name(mode);
  c["clip"] = cfg.clip;
  c["cond_max"] = num(cfg.cond_max);
  c["restarts"] = cfg.hoc.restarts;
  c["max_iters"] = cfg.hoc.max_iters;
  c["residual_tol"] = num(cfg.hoc.residual_tol);
  c["min_subset"] = cfg.hoc.min_subset;
  c["seed"] = cfg.hoc.seed;
  return c;
}

json estimates_json(const EstimatedStats& est) {
  json e;
  e["p_hat"] = vector_json(est.prior.probs());
  if (!est.label_priors.empty()) {
    json lp = json::array();
    for (const Prior& p : est.label_priors) lp.push_back(vector_json(p.probs()));
    e["p_hat_by_label"] = lp;
  }
  json ts = json::array();
  for (const ScopeEstimate& se : est.transitions) {
    json t;
    t["scope"] = se.transition.scope().name();
    t["t_hat"] = matrix_json(se.transition.entries());
    t["residual"] = num(se.residual);
    t["fallback_to_global"] = se.fell_back_to_global;
    ts.push_back(t);
  }
  e["transitions"] = ts;
  e["global_residual"] = num(est.global_residual);
  e["restarts_used"] = est.restarts_used;
  return e;
}

json calibration_json(const CalibrationResult& res) {
  json c;
  c["disparity"] = num(res.disparity.value);
  c["any_clipped"] = res.any_clipped;
  c["h"] = matrix_json(res.h.entries());
  json diags = json::array();
  for (const ScopeDiagnostic& d : res.diagnostics) {
    json dj;
    dj["scope"] = d.scope.name();
    dj["condition_number"] = num(d.condition_number);
    dj["residual"] = num(d.residual);
    dj["fallback"] = d.fallback;
    diags.push_back(dj);
  }
  c["diagnostics"] = diags;
  return c;
}

json eval_json(const EvalReport& ev) {
  json e;
  e["raw_error"] = num(ev.raw_error);
  e["normalized_error"] = num_opt(ev.normalized_error);
  e["improvement"] = num_opt(ev.improvement);
  return e;
}

// Truth-based bound inputs computed empirically from a dataset that
// carries true attributes.
BoundInputs empirical_bound_inputs(const Dataset& ds, MetricKind kind) {
  Eigen::VectorXi noisy_col = ds.noisy_attrs.col(0);
  BoundInputs in{build_h(ds, AttrSource::truth(), kind), {}, {}, {}, {}, {},
                 {}};
  const int kk = ds.k_classes;
  if (kind == MetricKind::DP) {
    for (int k = 1; k <= kk; ++k) {
      std::vector<int> rows =
          rows_where(ds, [&](int i) { return ds.predictions[i] == k; });
      in.t_scope.push_back(empirical_transition(ds.true_attrs, noisy_col,
                                                rows, ds.m_groups,
                                                Scope::prediction(k)));
    }
    in.t_ref.push_back(empirical_transition(
        ds.true_attrs, noisy_col, all_rows(ds.n()), ds.m_groups));
    in.p.push_back(
        empirical_prior(ds.true_attrs, all_rows(ds.n()), ds.m_groups));
    in.p_tilde.push_back(
        empirical_prior(noisy_col, all_rows(ds.n()), ds.m_groups));
    return in;
  }
  int k_hi = kind == MetricKind::EOp ? 1 : kk;
  int y_hi = kind == MetricKind::EOp ? 1 : kk;
  for (int k = 1; k <= k_hi; ++k)
    for (int y = 1; y <= y_hi; ++y) {
      std::vector<int> rows = rows_where(ds, [&](int i) {
        return ds.predictions[i] == k && ds.labels[i] == y;
      });
      in.t_scope.push_back(empirical_transition(
          ds.true_attrs, noisy_col, rows, ds.m_groups,
          Scope::prediction_label(k, y)));
    }
  for (int y = 1; y <= y_hi; ++y) {
    std::vector<int> rows =
        rows_where(ds, [&](int i) { return ds.labels[i] == y; });
    in.t_ref.push_back(empirical_transition(ds.true_attrs, noisy_col, rows,
                                            ds.m_groups, Scope::label(y)));
    in.p.push_back(empirical_prior(ds.true_attrs, rows, ds.m_groups));
    in.p_tilde.push_back(empirical_prior(noisy_col, rows, ds.m_groups));
  }
  return in;
}

}  // namespace

MeasureArtifacts run_measure(const Dataset& ds, MetricKind kind,
                             PipelineMode mode, const PipelineConfig& cfg) {
  MeasureArtifacts art{kind,
                       mode,
                       run_pipeline(ds, kind, PipelineMode::Base, cfg),
                       std::nullopt,
                       std::nullopt,
                       std::nullopt,
                       std::nullopt,
                       std::nullopt,
                       std::nullopt,
                       std::nullopt,
                       std::nullopt,
                       ""};
  if (mode != PipelineMode::Base)
    art.calibrated = run_pipeline(ds, kind, mode, cfg);

  const CalibrationResult& selected =
      art.calibrated ? *art.calibrated : art.base;

  if (ds.has_true_attrs()) {
    DisparityValue truth = disparity(build_h(ds, AttrSource::truth(), kind),
                                     DisparityValue::Source::True);
    art.truth = truth;
    art.evaluation = eval_metrics(selected.disparity, truth,
                                  art.base.disparity);
    art.base_evaluation =
        eval_metrics(art.base.disparity, truth, art.base.disparity);
    try {
      CalibrationResult oracle = oracle_calibrate(ds, kind);
      FairnessMatrix true_h = build_h(ds, AttrSource::truth(), kind);
      art.oracle_max_abs_dev =
          (oracle.h.entries() - true_h.entries()).cwiseAbs().maxCoeff();
      art.oracle = std::move(oracle);
    } catch (const Error&) {
      // Empty conditioning cells; the oracle section is simply omitted.
    }
    try {
      BoundInputs in = empirical_bound_inputs(ds, kind);
      art.bound_raw_value = bound_raw(in, kind);
      if (art.calibrated && art.calibrated->estimates) {
        const EstimatedStats& est = *art.calibrated->estimates;
        for (const ScopeEstimate& se : est.transitions)
          in.t_hat.push_back(se.transition);
        if (kind == MetricKind::DP)
          in.p_hat.push_back(est.prior);
        else
          for (const Prior& p : est.label_priors) in.p_hat.push_back(p);
        art.bound_cal_value = bound_cal(in, kind);
      }
      art.bound_basis = "true";
    } catch (const Error&) {
      art.bound_basis = "";
    }
  } else if (art.calibrated && art.calibrated->estimates) {
    // No ground truth: evaluate the bound at the estimates themselves and
    // label it as such. The calibrated H stands in for the true one.
    try {
      const EstimatedStats& est = *art.calibrated->estimates;
      BoundInputs in{art.calibrated->h, {}, {}, {}, {}, {}, {}};
      Eigen::VectorXi noisy_col = ds.noisy_attrs.col(0);
      for (const ScopeEstimate& se : est.transitions)
        in.t_scope.push_back(se.transition);
      if (kind == MetricKind::DP) {
        in.t_ref.push_back(est.global_transition);
        in.p.push_back(est.prior);
        in.p_tilde.push_back(
            empirical_prior(noisy_col, all_rows(ds.n()), ds.m_groups));
      } else {
        int y_hi = kind == MetricKind::EOp ? 1 : ds.k_classes;
        for (int y = 1; y <= y_hi; ++y) {
          in.t_ref.push_back(
              est.global_transition.with_scope(Scope::label(y)));
          in.p.push_back(est.label_priors[static_cast<size_t>(y - 1)]);
          std::vector<int> rows =
              rows_where(ds, [&](int i) { return ds.labels[i] == y; });
          in.p_tilde.push_back(empirical_prior(noisy_col, rows, ds.m_groups));
        }
      }
      art.bound_raw_value = bound_raw(in, kind);
      art.bound_basis = "estimate";
    } catch (const Error&) {
      art.bound_basis = "";
    }
  }
  return art;
}

namespace {

json measure_report_tree(const MeasureArtifacts& art, const Dataset& ds,
                         const PipelineConfig& cfg) {
  json j;
  j["tool_version"] = std::string("faircal ") + kVersion;
  j["config"] = config_echo(cfg, art.kind, art.mode);
  j["seed"] = cfg.hoc.seed;
  json d;
  d["n_samples"] = static_cast<long>(ds.n());
  d["k_classes"] = ds.k_classes;
  d["m_groups"] = ds.m_groups;
  d["c_models"] = ds.c_models();
  d["has_true_attrs"] = ds.has_true_attrs();
  d["has_features"] = ds.has_features();
  j["dataset"] = d;

  j["base"] = {{"disparity", num(art.base.disparity.value)}};
  if (art.calibrated) {
    j["calibrated"] = calibration_json(*art.calibrated);
    if (art.calibrated->estimates)
      j["estimates"] = estimates_json(*art.calibrated->estimates);
  }
  if (art.truth) {
    json ev;
    ev["true_disparity"] = num(art.truth->value);
    ev["selected"] = eval_json(*art.evaluation);
    ev["base"] = eval_json(*art.base_evaluation);
    if (art.oracle) {
      ev["oracle"] = {{"disparity", num(art.oracle->disparity.value)},
                      {"max_abs_dev_from_true_h",
                       num_opt(art.oracle_max_abs_dev)}};
    }
    j["evaluation"] = ev;
  }
  if (!art.bound_basis.empty()) {
    json b;
    b["basis"] = art.bound_basis;
    b["raw"] = num_opt(art.bound_raw_value);
    b["cal"] = num_opt(art.bound_cal_value);
    j["bounds"] = b;
  }
  json warnings = json::array();
  for (const std::string& w : art.base.warnings) warnings.push_back(w);
  if (art.calibrated)
    for (const std::string& w : art.calibrated->warnings)
      warnings.push_back(w);
  j["warnings"] = warnings;
  return j;
}

void flatten_json(const json& j, const std::string& prefix,
                  std::ostringstream& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      flatten_json(value, prefix.empty() ? key : prefix + "." + key, out);
  } else if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i)
      flatten_json(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out << prefix << "," << j.dump() << "\n";
  }
}

}  // namespace

std::string measure_report_json(const MeasureArtifacts& art,
                                const Dataset& ds,
                                const PipelineConfig& cfg) {
  return measure_report_tree(art, ds, cfg).dump(2) + "\n";
}

std::string measure_report_csv(const MeasureArtifacts& art, const Dataset& ds,
                               const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "key,value\n";
  flatten_json(measure_report_tree(art, ds, cfg), "", out);
  return out.str();
}

std::string simulate_report_json(const ScenarioSpec& spec,
                                 const PopulationMoments& moments) {
  json j;
  j["tool_version"] = std::string("faircal ") + kVersion;
  j["seed"] = spec.seed;
  j["n_samples"] = spec.n_samples;
  j["population"] = json::object();
  for (MetricKind kind :
       {MetricKind::DP, MetricKind::EOd, MetricKind::EOp}) {
    try {
      json m;
      m["true_disparity"] = num(moments.true_disparity(kind));
      m["noisy_disparity"] = num(moments.noisy_disparity(kind));
      j["population"][metric_name(kind)] = m;
    } catch (const Error&) {
      // Metric undefined for this scenario (empty label cell); skip it.
    }
  }
  j["population"]["prior"] = vector_json(moments.prior().probs());
  j["population"]["noisy_prior"] = vector_json(moments.noisy_prior().probs());
  j["population"]["t_global"] = matrix_json(moments.t_global().entries());
  return j.dump(2) + "\n";
}

BoundsArtifacts run_bounds(const ScenarioSpec& raw_spec, MetricKind kind,
                           double perturb_t, double perturb_p,
                           uint64_t seed) {
  ScenarioSpec spec = validate_scenario(raw_spec);
  PopulationMoments mom(spec);
  BoundsArtifacts art;
  art.kind = kind;
  art.true_disparity = mom.true_disparity(kind);
  art.noisy_disparity = mom.noisy_disparity(kind);
  art.exact_raw_error = std::abs(art.noisy_disparity - art.true_disparity);
  BoundInputs in = mom.bound_inputs(kind);
  art.bound_raw_value = bound_raw(in, kind);

  if (spec.m_groups == 2) {
    art.e1 = mom.e1();
    art.e2 = mom.e2();
    if (kind == MetricKind::DP && spec.k_classes == 2) {
      FairnessMatrix h = mom.true_h(MetricKind::DP);
      art.delta = std::abs(h.entries()(0, 0) - h.entries()(1, 0)) / 2.0;
      art.binary_ci_exact_value = binary_ci_exact_error(*art.e1, *art.e2, *art.delta);
      if (art.true_disparity > 0.0)
        art.gamma =
            gamma_threshold(*art.e1, *art.e2, h, art.true_disparity);
    }
  }

  // Bound of the calibrated metric at (possibly perturbed) estimates.
  std::vector<TransitionMatrix> t_hat;
  std::vector<Prior> p_hat;
  for (size_t s = 0; s < in.t_scope.size(); ++s)
    t_hat.push_back(perturb_t > 0.0
                        ? perturb_transition(in.t_scope[s], perturb_t,
                                             derive_seed(seed, s))
                        : in.t_scope[s]);
  for (size_t r = 0; r < in.p.size(); ++r)
    p_hat.push_back(perturb_p > 0.0
                        ? perturb_prior(in.p[r], perturb_p,
                                        derive_seed(seed, 100 + r))
                        : in.p[r]);
  in.t_hat = t_hat;
  in.p_hat = p_hat;
  art.bound_cal_value = bound_cal(in, kind);
  double eps_max = 0.0;
  for (size_t s = 0; s < in.t_scope.size(); ++s) {
    size_t r = in.t_scope.size() == in.p.size() ? s : 0;
    if (kind == MetricKind::EOd) r = s % static_cast<size_t>(spec.k_classes);
    eps_max = std::max(eps_max, epsilon_cal(in.t_scope[s], in.t_hat[s],
                                            in.p[r], in.p_hat[r]));
  }
  art.epsilon_max = eps_max;
  art.exact_cal_error = std::abs(
      exact_calibrated_disparity(mom, kind, t_hat, p_hat) -
      art.true_disparity);
  return art;
}

std::string bounds_report_json(const BoundsArtifacts& art,
                               const ScenarioSpec& spec) {
  json j;
  j["tool_version"] = std::string("faircal ") + kVersion;
  j["metric"] = metric_name(art.kind);
  j["m_groups"] = spec.m_groups;
  j["k_classes"] = spec.k_classes;
  j["true_disparity"] = num(art.true_disparity);
  j["noisy_disparity"] = num(art.noisy_disparity);
  j["exact_raw_error"] = num(art.exact_raw_error);
  j["bound_raw"] = num(art.bound_raw_value);
  j["e1"] = num_opt(art.e1);
  j["e2"] = num_opt(art.e2);
  j["delta"] = num_opt(art.delta);
  j["binary_ci_exact_error"] = num_opt(art.binary_ci_exact_value);
  j["gamma"] = num_opt(art.gamma);
  j["epsilon_max"] = num_opt(art.epsilon_max);
  j["bound_cal"] = num_opt(art.bound_cal_value);
  j["exact_cal_error"] = num_opt(art.exact_cal_error);
  return j.dump(2) + "\n";
}

std::string experiment_report_json(const ExperimentTable& table,
                                   const ScenarioSpec& spec,
                                   const ExperimentConfig& cfg) {
  json j;
  j["tool_version"] = std::string("faircal ") + kVersion;
  j["metric"] = metric_name(table.kind);
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["n_samples"] = spec.n_samples;
  j["true_disparity"] = num(table.true_disparity);
  j["noisy_disparity_population"] = num(table.noisy_disparity_population);
  j["bound_raw_population"] = num(table.bound_raw_population);
  j["gamma"] = num_opt(table.gamma);
  json sums = json::array();
  for (const ModeSummary& s : table.summaries) {
    json sj;
    sj["mode"] = mode_name(s.mode);
    sj["mean_raw_error"] = num(s.mean_raw_error);
    sj["std_raw_error"] = num(s.std_raw_error);
    sj["mean_normalized_error"] = num(s.mean_normalized_error);
    sj["std_normalized_error"] = num(s.std_normalized_error);
    sj["win_rate_vs_base"] = num(s.win_rate_vs_base);
    sums.push_back(sj);
  }
  j["summaries"] = sums;
  return j.dump(2) + "\n";
}

std::string experiment_table_csv(const ExperimentTable& table) {
  std::ostringstream out;
  out << "trial,mode,disparity,raw_error,normalized_error,improvement,"
         "bound_cal,win_vs_base\n";
  char buf[64];
  auto fmt = [&](std::optional<double> v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof buf, "%.10g", round_sig(*v, 10));
    return buf;
  };
  for (const TrialResult& r : table.rows) {
    out << r.trial + 1 << ',' << mode_name(r.mode) << ','
        << fmt(r.disparity) << ',' << fmt(r.raw_error) << ','
        << fmt(r.normalized_error) << ',' << fmt(r.improvement) << ','
        << fmt(r.bound_cal) << ',' << (r.win_vs_base ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace faircal
