#pragma once
//
// Deterministic serialization: JSON objects with sorted keys and every number
// printed with 17 significant digits, so equal reports give identical bytes
// and parse back exactly. CSV has one row per sample plus aggregate rows.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinch/analyzer.hpp"
#include "pinch/errors.hpp"
#include "pinch/extremal.hpp"
#include "pinch/ineq.hpp"
#include "pinch/matcore.hpp"

namespace pinch::report {

using Json = nlohmann::json; // std::map-backed, so object keys come out sorted

inline std::string format_number(double v) {
  if (!std::isfinite(v))
    return "null";
  if (v == 0.0)
    v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // Keep the token a JSON float so integral-valued doubles parse back as doubles.
  if (s.find_first_of(".eE") == std::string::npos)
    s += ".0";
  return s;
}

namespace detail {

inline void dump(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
  case Json::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      out += first ? "" : ",";
      out += pad;
      out += Json(it.key()).dump();
      out += sep;
      dump(it.value(), out, indent, depth + 1);
      first = false;
    }
    out += close + "}";
    return;
  }
  case Json::value_t::array: {
    if (j.empty()) {
      out += "[]";
      return;
    }
    // Arrays of scalars stay on one line.
    const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
    out += "[";
    bool first = true;
    for (const auto& e : j) {
      out += first ? "" : (flat ? ", " : ",");
      if (!flat)
        out += pad;
      dump(e, out, indent, depth + 1);
      first = false;
    }
    out += (flat ? "" : close) + "]";
    return;
  }
  case Json::value_t::number_float:
    out += format_number(j.get<double>());
    return;
  default:
    out += j.dump();
  }
}

} // namespace detail

/// Serializes with sorted keys and %.17g floats.
inline std::string dump(const Json& j, int indent = 2) {
  std::string out;
  detail::dump(j, out, indent, 0);
  return out;
}

inline Json number_or_null(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> opt_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null())
    return std::nullopt;
  return j.at(key).get<double>();
}

// ---------------------------------------------------------------------------
// Operator sets
// ---------------------------------------------------------------------------

inline Json to_json(const GenMat& a) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < a.cols(); ++j)
      r.push_back(a(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline GenMat genmat_from_json(const Json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("matrix must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).size();
  GenMat a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j.at(i).is_array() || j.at(i).size() != cols)
      throw ConfigError("matrix rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k)
      a(i, k) = j.at(i).at(k).get<double>();
  }
  return a;
}

/// {"n": n, "m": m, "ops": [A^1, ..., A^m]} with each A a list of rows.
inline Json to_json(const ShapeOperatorSet& ops) {
  Json j;
  j["n"] = ops.n();
  j["m"] = ops.m();
  j["ops"] = Json::array();
  for (const auto& a : ops.ops())
    j["ops"].push_back(to_json(a.mat()));
  return j;
}

/// Rejects non-symmetric input (beyond 1e-12 relative) rather than silently symmetrizing.
inline ShapeOperatorSet ops_from_json(const Json& j) {
  try {
    const std::size_t n = j.at("n").get<std::size_t>();
    const std::size_t m = j.at("m").get<std::size_t>();
    const Json& arr = j.at("ops");
    if (arr.size() != m)
      throw ConfigError("ops: expected " + std::to_string(m) + " matrices");
    std::vector<SymMat> ops;
    for (const auto& a : arr) {
      const GenMat g = genmat_from_json(a);
      if (g.rows() != n || g.cols() != n)
        throw ConfigError("ops: every matrix must be n x n");
      const double tol = 1e-12 * (1.0 + frob_norm(g));
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c)
          if (std::abs(g(r, c) - g(c, r)) > tol)
            throw ConfigError("ops: matrices must be symmetric");
      ops.emplace_back(g);
    }
    return ShapeOperatorSet(std::move(ops));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("ops: ") + e.what());
  }
}

inline Json to_json(const ineq::GapReport& g) {
  Json j;
  j["name"] = g.name;
  j["value"] = g.value;
  j["inputs_digest"] = g.inputs_digest;
  j["seed"] = g.seed ? Json(*g.seed) : Json(nullptr);
  return j;
}

inline Json to_json(const extremal::SearchResult& r, extremal::Functional f) {
  Json j;
  j["functional"] = extremal::to_string(f);
  j["best_ratio"] = r.best_ratio;
  j["theoretical_max"] = extremal::theoretical_max(f);
  j["iterations_used"] = r.iterations_used;
  j["seed"] = r.seed;
  j["best_restart"] = r.best_restart;
  j["diagnostics"] = r.diagnostics;
  j["digest"] = r.digest();
  j["best_matrices"] = Json::array();
  for (const auto& x : r.best_matrices)
    j["best_matrices"].push_back(to_json(x));
  return j;
}

inline Json to_json(const analyzer::SweepSummary& s) {
  Json j;
  j["suite"] = s.suite;
  j["count"] = s.count;
  j["seed"] = s.seed;
  j["tol"] = s.tol;
  if (s.suite == "frame_invariance" || s.suite == "rel_identity")
    j["max_drift"] = s.max_drift;
  else
    j["min_normalized_gap"] = s.min_normalized;
  j["worst_index"] = s.argmin_index;
  j["worst_digest"] = s.argmin_digest;
  j["failures"] = s.failures;
  j["passed"] = s.passed;
  return j;
}

// ---------------------------------------------------------------------------
// PinchReport
// ---------------------------------------------------------------------------

inline Json to_json(const models::ModelParams& p) {
  Json j = Json::object();
  if (p.n)
    j["n"] = *p.n;
  if (p.m)
    j["m"] = *p.m;
  if (p.k)
    j["k"] = *p.k;
  if (!p.partition.empty())
    j["partition"] = p.partition;
  if (p.radius)
    j["radius"] = *p.radius;
  return j;
}

inline models::ModelParams params_from_json(const Json& j) {
  if (!j.is_object())
    throw ConfigError("params must be an object");
  models::ModelParams p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    try {
      if (k == "n")
        p.n = it.value().get<std::size_t>();
      else if (k == "m")
        p.m = it.value().get<std::size_t>();
      else if (k == "k")
        p.k = it.value().get<std::size_t>();
      else if (k == "partition")
        p.partition = it.value().get<std::vector<std::size_t>>();
      else if (k == "radius")
        p.radius = it.value().get<double>();
      else
        throw ConfigError("unknown model parameter '" + k + "'");
    } catch (const Json::exception&) {
      throw ConfigError("model parameter '" + k + "' has the wrong type");
    }
  }
  return p;
}

inline Json to_json(const analyzer::Tolerances& t) {
  return Json{{"hyp_tol", t.hyp_tol},
              {"flat_tol", t.flat_tol},
              {"class_tol", t.class_tol},
              {"const_rel", t.const_rel},
              {"rank_tol", t.rank_tol}};
}

inline analyzer::Tolerances tolerances_from_json(const Json& j) {
  analyzer::Tolerances t;
  t.hyp_tol = j.at("hyp_tol").get<double>();
  t.flat_tol = j.at("flat_tol").get<double>();
  t.class_tol = j.at("class_tol").get<double>();
  t.const_rel = j.at("const_rel").get<double>();
  t.rank_tol = j.at("rank_tol").get<double>();
  return t;
}

inline Json to_json(const analyzer::PinchReport& r) {
  Json j;
  j["model"] = r.model;
  j["params"] = to_json(r.params);
  j["n"] = r.n;
  j["m"] = r.m;
  j["grid"] = r.grid;
  j["expected_verdict"] = r.expected_verdict;
  j["expected"] = Json::array();
  for (const auto& e : r.expected)
    j["expected"].push_back(Json{{"key", e.key}, {"value", e.value}, {"provenance", e.provenance}});

  Json agg = Json::object();
  for (const auto& [k, a] : r.aggregates)
    agg[k] = Json{{"min", a.min}, {"max", a.max}, {"mean", a.mean}};
  j["aggregates"] = agg;

  j["samples"] = Json::array();
  for (const auto& s : r.samples) {
    Json row;
    row["u"] = s.u;
    row["weight"] = s.weight;
    row["normal_rank"] = s.normal_rank;
    for (std::size_t k = 0; k < analyzer::sample_fields().size(); ++k)
      row[analyzer::sample_fields()[k]] = s.values[k];
    j["samples"].push_back(row);
  }

  j["quadrature"] = Json{{"vol", r.vol}, {"int_S", r.int_S}, {"int_S2", r.int_S2}};

  Json h;
  h["minimal"] = r.minimal;
  h["inf_n_minus_lambda1"] = r.inf_n_minus_lambda1;
  h["thm11_bound"] = number_or_null(r.thm11_bound);
  h["max_rho_perp0"] = r.max_rho_perp0;
  h["thm11_hypothesis"] = r.thm11_hypothesis;
  h["thm12_hypothesis"] = r.thm12_hypothesis;
  h["cor13_delta"] = r.cor13_delta;
  h["cor13_delta_sign"] = r.cor13_delta_sign;
  h["cor13_low"] = number_or_null(r.cor13_low);
  h["cor13_high"] = number_or_null(r.cor13_high);
  h["cor13_branch"] = r.cor13_branch ? Json(*r.cor13_branch) : Json(nullptr);
  h["S_constant"] = r.S_constant;
  h["rho_perp_constant"] = r.rho_perp_constant;
  h["cor14_threshold"] = number_or_null(r.cor14_threshold);
  h["cor14_hypothesis"] = r.cor14_hypothesis ? Json(*r.cor14_hypothesis) : Json(nullptr);
  h["inf_approximated"] = r.inf_approximated;
  j["hypotheses"] = h;

  j["first_normal_rank"] = r.first_normal_rank;
  j["verdict"] = r.verdict;
  j["failed_checks"] = r.failed_checks;
  if (r.convergence) {
    const auto& c = *r.convergence;
    j["convergence"] = Json{{"coarse_grid", c.coarse_grid},
                            {"coarse_mean_S", c.coarse_mean_S},
                            {"coarse_max_lambda1", c.coarse_max_lambda1},
                            {"coarse_vol", c.coarse_vol},
                            {"note", c.note}};
  } else {
    j["convergence"] = nullptr;
  }
  const auto& p = r.provenance;
  j["provenance"] = Json{{"version", p.version},
                         {"tolerances", to_json(p.tol)},
                         {"seed", p.seed ? Json(*p.seed) : Json(nullptr)},
                         {"fd_step", p.fd_step},
                         {"margin", p.margin},
                         {"richardson", p.richardson}};
  return j;
}

inline analyzer::PinchReport report_from_json(const Json& j) {
  try {
    analyzer::PinchReport r;
    r.model = j.at("model").get<std::string>();
    r.params = params_from_json(j.at("params"));
    r.n = j.at("n").get<std::size_t>();
    r.m = j.at("m").get<std::size_t>();
    r.grid = j.at("grid").get<std::vector<std::size_t>>();
    r.expected_verdict = j.at("expected_verdict").get<std::string>();
    for (const auto& e : j.at("expected"))
      r.expected.push_back(
          {e.at("key").get<std::string>(), e.at("value").get<double>(), e.at("provenance").get<std::string>()});
    for (auto it = j.at("aggregates").begin(); it != j.at("aggregates").end(); ++it)
      r.aggregates[it.key()] = {it.value().at("min").get<double>(), it.value().at("max").get<double>(),
                                it.value().at("mean").get<double>()};
    for (const auto& s : j.at("samples")) {
      analyzer::SampleRow row;
      row.u = s.at("u").get<std::vector<double>>();
      row.weight = s.at("weight").get<double>();
      row.normal_rank = s.at("normal_rank").get<std::size_t>();
      for (const auto& f : analyzer::sample_fields())
        row.values.push_back(s.at(f).get<double>());
      r.samples.push_back(std::move(row));
    }
    const Json& q = j.at("quadrature");
    r.vol = q.at("vol").get<double>();
    r.int_S = q.at("int_S").get<double>();
    r.int_S2 = q.at("int_S2").get<double>();

    const Json& h = j.at("hypotheses");
    r.minimal = h.at("minimal").get<bool>();
    r.inf_n_minus_lambda1 = h.at("inf_n_minus_lambda1").get<double>();
    r.thm11_bound = opt_number(h, "thm11_bound");
    r.max_rho_perp0 = h.at("max_rho_perp0").get<double>();
    r.thm11_hypothesis = h.at("thm11_hypothesis").get<bool>();
    r.thm12_hypothesis = h.at("thm12_hypothesis").get<bool>();
    r.cor13_delta = h.at("cor13_delta").get<double>();
    r.cor13_delta_sign = h.at("cor13_delta_sign").get<int>();
    r.cor13_low = opt_number(h, "cor13_low");
    r.cor13_high = opt_number(h, "cor13_high");
    if (!h.at("cor13_branch").is_null())
      r.cor13_branch = h.at("cor13_branch").get<std::string>();
    r.S_constant = h.at("S_constant").get<bool>();
    r.rho_perp_constant = h.at("rho_perp_constant").get<bool>();
    r.cor14_threshold = opt_number(h, "cor14_threshold");
    if (!h.at("cor14_hypothesis").is_null())
      r.cor14_hypothesis = h.at("cor14_hypothesis").get<bool>();
    r.inf_approximated = h.at("inf_approximated").get<bool>();

    r.first_normal_rank = j.at("first_normal_rank").get<std::size_t>();
    r.verdict = j.at("verdict").get<std::string>();
    r.failed_checks = j.at("failed_checks").get<std::vector<std::string>>();
    if (!j.at("convergence").is_null()) {
      const Json& c = j.at("convergence");
      analyzer::Convergence cv;
      cv.coarse_grid = c.at("coarse_grid").get<std::vector<std::size_t>>();
      cv.coarse_mean_S = c.at("coarse_mean_S").get<double>();
      cv.coarse_max_lambda1 = c.at("coarse_max_lambda1").get<double>();
      cv.coarse_vol = c.at("coarse_vol").get<double>();
      cv.note = c.at("note").get<std::string>();
      r.convergence = cv;
    }
    const Json& p = j.at("provenance");
    r.provenance.version = p.at("version").get<std::string>();
    r.provenance.tol = tolerances_from_json(p.at("tolerances"));
    if (!p.at("seed").is_null())
      r.provenance.seed = p.at("seed").get<std::uint64_t>();
    r.provenance.fd_step = p.at("fd_step").get<double>();
    r.provenance.margin = p.at("margin").get<double>();
    r.provenance.richardson = p.at("richardson").get<bool>();
    return r;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

inline analyzer::PinchReport report_from_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

inline std::string emit_csv(const analyzer::PinchReport& r) {
  std::ostringstream os;
  const auto& fields = analyzer::sample_fields();
  os << "row";
  for (std::size_t a = 0; a < r.n; ++a)
    os << ",u" << a;
  os << ",weight,normal_rank";
  for (const auto& f : fields)
    os << "," << f;
  os << "\n";
  for (std::size_t k = 0; k < r.samples.size(); ++k) {
    const auto& s = r.samples[k];
    os << k;
    for (double u : s.u)
      os << "," << format_number(u);
    os << "," << format_number(s.weight) << "," << s.normal_rank;
    for (double v : s.values)
      os << "," << format_number(v);
    os << "\n";
  }
  for (const char* kind : {"min", "max", "mean"}) {
    os << kind;
    for (std::size_t a = 0; a < r.n + 2; ++a)
      os << ",";
    for (const auto& f : fields) {
      const auto& ag = r.at(f);
      const double v = std::string(kind) == "min" ? ag.min : (std::string(kind) == "max" ? ag.max : ag.mean);
      os << "," << format_number(v);
    }
    os << "\n";
  }
  return os.str();
}

inline std::string emit_text(const analyzer::PinchReport& r) {
  std::ostringstream os;
  auto num = [](std::optional<double> v) { return v ? format_number(*v) : std::string("n/a"); };
  os << "model       " << r.model << " " << dump(to_json(r.params), 0) << "  (n=" << r.n << ", m=" << r.m << ")\n";
  os << "grid        " << dump(Json(r.grid), 0) << "  nodes=" << r.samples.size() << "\n";
  os << "verdict     " << r.verdict << " (expected " << r.expected_verdict << "), first normal rank "
     << r.first_normal_rank << "\n";
  for (const auto& [k, a] : r.aggregates)
    os << "  " << k << std::string(k.size() < 16 ? 16 - k.size() : 1, ' ') << "min " << format_number(a.min)
       << "  max " << format_number(a.max) << "  mean " << format_number(a.mean) << "\n";
  os << "volume      " << format_number(r.vol) << "\n";
  os << "minimal     " << (r.minimal ? "yes" : "no") << "\n";
  os << "thm11       bound " << num(r.thm11_bound) << "  hypothesis " << (r.thm11_hypothesis ? "holds" : "fails")
     << "\n";
  os << "thm12       hypothesis " << (r.thm12_hypothesis ? "holds" : "fails") << "\n";
  os << "cor13       delta " << format_number(r.cor13_delta) << "  branches [" << num(r.cor13_low) << ", "
     << num(r.cor13_high) << "]  rho_perp in " << r.cor13_branch.value_or("n/a") << "\n";
  os << "cor14       threshold " << num(r.cor14_threshold) << "  hypothesis "
     << (r.cor14_hypothesis ? (*r.cor14_hypothesis ? "holds" : "fails") : "n/a") << "\n";
  for (const auto& e : r.expected)
    os << "expected    " << e.key << " = " << format_number(e.value) << " [" << e.provenance << "]\n";
  if (r.inf_approximated)
    os << "note        lambda1 varies over the samples; inf over M is approximated by the sampled minimum\n";
  if (r.convergence)
    os << "convergence " << r.convergence->note << "\n";
  if (r.failed_checks.empty())
    os << "checks      all consistent\n";
  for (const auto& f : r.failed_checks)
    os << "FAILED      " << f << "\n";
  return os.str();
}

inline std::string report_emit(const analyzer::PinchReport& r, const std::string& format) {
  if (format == "json")
    return dump(to_json(r)) + "\n";
  if (format == "csv")
    return emit_csv(r);
  if (format == "text")
    return emit_text(r);
  throw ConfigError("unknown format '" + format + "' (expected json, csv or text)");
}

// ---------------------------------------------------------------------------
// Model configuration files
// ---------------------------------------------------------------------------

/// {"model": name, "params": {...}, "grid": [...], "fd_step": x, "margin": y}
struct ModelConfig {
  std::string model;
  models::ModelParams params;
  analyzer::AnalyzeOptions options;
};

inline ModelConfig model_config_from_json(const Json& j) {
  if (!j.is_object())
    throw ConfigError("model config must be a JSON object");
  static const std::vector<std::string> known{"model", "params", "grid", "fd_step", "margin", "richardson"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("model config: unknown key '" + it.key() + "'");
  ModelConfig c;
  try {
    c.model = j.at("model").get<std::string>();
    if (j.contains("params"))
      c.params = params_from_json(j.at("params"));
    if (j.contains("grid"))
      c.options.grid = j.at("grid").get<std::vector<std::size_t>>();
    if (j.contains("fd_step"))
      c.options.fd_step = j.at("fd_step").get<double>();
    if (j.contains("margin"))
      c.options.margin = j.at("margin").get<double>();
    if (j.contains("richardson"))
      c.options.richardson = j.at("richardson").get<bool>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

} // namespace pinch::report
