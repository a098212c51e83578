// pinch: command-line front end.
//
//   pinch verify   [--suite S] [--count N] [--seed K] [--tol T] [--ops FILE]
//   pinch model    NAME [--n --m --k --partition --radius] | --config FILE
//   pinch extremal [--functional ddvv|bw] [--n] [--m] [--restarts] [--seed]
//   pinch report   --in FILE [--format json|csv|text]
//
// Exit codes: 0 everything passed, 1 a property or consistency check failed,
// 2 invalid configuration.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pinch/pinch.hpp"

namespace {

using pinch::report::Json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw pinch::ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out)
    throw pinch::ConfigError("cannot write '" + out_path + "'");
  out << text;
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw pinch::ConfigError(what + " is not valid JSON: " + e.what());
  }
}

struct Common {
  std::string format = "json";
  std::string out;
  std::uint64_t seed = 42;
  bool seed_given = false;
};

void add_format(CLI::App* app, Common& c, std::vector<std::string> allowed) {
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember(std::move(allowed)));
  app->add_option("--out", c.out, "write output to this file instead of stdout");
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  Common common;
  std::string suite = "all";
  std::size_t count = 1000;
  double tol = 1e-9;
  std::string ops_file;
  std::size_t max_n = 5;
  std::size_t max_m = 4;
  std::size_t fixed_m = 0;
  bool corrupt_sign = false;
};

int run_verify(const VerifyArgs& a) {
  std::ostringstream os;
  bool ok = true;
  if (!a.ops_file.empty()) {
    const auto ops = pinch::report::ops_from_json(parse_json(read_file(a.ops_file), a.ops_file));
    const auto check = pinch::analyzer::check_ops(ops, a.tol);
    for (const auto& g : check.gaps)
      os << pinch::report::dump(pinch::report::to_json(g), 0) << "\n";
    ok = check.passed;
  } else {
    std::vector<std::string> suites;
    if (a.suite == "all")
      suites = pinch::analyzer::suite_names();
    else
      suites = {a.suite};
    for (const auto& s : suites) {
      pinch::analyzer::SweepOptions o;
      o.suite = s;
      o.count = a.count;
      o.seed = a.common.seed;
      o.tol = a.tol;
      o.max_n = a.max_n;
      o.max_m = a.max_m;
      if (a.fixed_m > 0)
        o.fixed_m = a.fixed_m;
      o.corrupt_sign = a.corrupt_sign;
      const auto summary = pinch::analyzer::sweep(o);
      ok = ok && summary.passed;
      if (a.common.format == "text") {
        os << s << ": " << (summary.passed ? "pass" : "FAIL") << "  count=" << summary.count
           << "  failures=" << summary.failures << "  worst="
           << pinch::report::format_number(pinch::analyzer::detail::is_drift_suite(s) ? summary.max_drift
                                                                                      : summary.min_normalized)
           << "  at sample " << summary.argmin_index << " (" << summary.argmin_digest << ")\n";
      } else {
        os << pinch::report::dump(pinch::report::to_json(summary), 0) << "\n";
      }
    }
  }
  write_output(a.common.out, os.str());
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
  Common common;
  std::string name;
  std::string config;
  std::size_t n = 0, m = 0, k = 0;
  std::vector<std::size_t> partition;
  double radius = 0.0;
  std::vector<std::size_t> grid;
  double fd_step = 0.0;
  double margin = -1.0;
  bool no_richardson = false;
  bool no_convergence = false;
  double tol = 1e-6;
};

int run_model(const ModelArgs& a, const CLI::App& sub) {
  pinch::report::ModelConfig cfg;
  if (!a.config.empty()) {
    cfg = pinch::report::model_config_from_json(parse_json(read_file(a.config), a.config));
  } else {
    if (a.name.empty())
      throw pinch::ConfigError("model: give a model name or --config");
    cfg.model = a.name;
  }
  if (sub.count("--n"))
    cfg.params.n = a.n;
  if (sub.count("--m"))
    cfg.params.m = a.m;
  if (sub.count("--k"))
    cfg.params.k = a.k;
  if (sub.count("--partition"))
    cfg.params.partition = a.partition;
  if (sub.count("--radius"))
    cfg.params.radius = a.radius;
  if (!a.grid.empty())
    cfg.options.grid = a.grid;
  if (sub.count("--fd-step"))
    cfg.options.fd_step = a.fd_step;
  if (sub.count("--margin"))
    cfg.options.margin = a.margin;
  if (a.no_richardson)
    cfg.options.richardson = false;
  cfg.options.convergence = !a.no_convergence;
  cfg.options.tol.hyp_tol = a.tol;
  if (a.common.seed_given)
    cfg.options.seed = a.common.seed;

  const auto model = pinch::models::make_model(cfg.model, cfg.params);
  if (cfg.options.grid && cfg.options.grid->size() != 1 && cfg.options.grid->size() != model.chart.n)
    throw pinch::ConfigError("--grid needs 1 or n = " + std::to_string(model.chart.n) + " entries");
  const auto report = pinch::analyzer::analyze(model, cfg.options);
  write_output(a.common.out, pinch::report::report_emit(report, a.common.format));
  return report.consistent() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ExtremalArgs {
  Common common;
  std::string functional = "ddvv";
  pinch::extremal::SearchConfig cfg;
};

int run_extremal(ExtremalArgs a) {
  a.cfg.seed = a.common.seed;
  a.cfg.validate();
  const auto f = a.functional == "bw" ? pinch::extremal::Functional::bw : pinch::extremal::Functional::ddvv;
  const auto r = f == pinch::extremal::Functional::bw ? pinch::extremal::maximize_bw_ratio(a.cfg)
                                                      : pinch::extremal::maximize_ddvv_ratio(a.cfg);
  const double max = pinch::extremal::theoretical_max(f);
  if (a.common.format == "text") {
    std::ostringstream os;
    os << a.functional << " ratio " << pinch::report::format_number(r.best_ratio) << " (bound "
       << pinch::report::format_number(max) << ") after " << r.iterations_used << " iterations, best restart "
       << r.best_restart << "\n";
    write_output(a.common.out, os.str());
  } else {
    write_output(a.common.out, pinch::report::dump(pinch::report::to_json(r, f)) + "\n");
  }
  return r.best_ratio <= max + 1e-9 ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  Common common;
  std::string in;
};

int run_report(const ReportArgs& a) {
  const auto r = pinch::report::report_from_string(read_file(a.in));
  write_output(a.common.out, pinch::report::report_emit(r, a.common.format));
  return r.consistent() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pinching invariants of minimal submanifolds in spheres"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "randomized property sweeps");
  std::vector<std::string> suites = pinch::analyzer::suite_names();
  suites.push_back("all");
  verify->add_option("--suite", va.suite, "suite to run (default: all)")->check(CLI::IsMember(suites));
  verify->add_option("--count", va.count, "instances per suite")->check(CLI::PositiveNumber);
  verify->add_option("--seed", va.common.seed, "base seed");
  verify->add_option("--tol", va.tol, "relative tolerance on gaps and drifts");
  verify->add_option("--ops", va.ops_file, "evaluate the gaps of one operator set from a JSON file");
  verify->add_option("--max-n", va.max_n, "largest matrix size");
  verify->add_option("--max-m", va.max_m, "largest number of matrices");
  verify->add_option("--m", va.fixed_m, "fix the number of matrices");
  verify->add_flag("--corrupt-sign", va.corrupt_sign, "negate every gap (harness self-test; must fail)");
  add_format(verify, va.common, {"json", "text"});

  ModelArgs ma;
  auto* model = app.add_subcommand("model", "analyze a registered model");
  model->add_option("name", ma.name, "great_sphere | clifford | sphere_product | veronese | nonminimal_torus");
  model->add_option("--config", ma.config, "JSON model configuration");
  model->add_option("--n", ma.n, "intrinsic dimension");
  model->add_option("--m", ma.m, "codimension (great_sphere)");
  model->add_option("--k", ma.k, "first factor dimension (clifford)");
  model->add_option("--partition", ma.partition, "factor dimensions (sphere_product)")->expected(2, 64);
  model->add_option("--radius", ma.radius, "first circle radius (nonminimal_torus)");
  model->add_option("--grid", ma.grid, "points per axis (one value or one per axis)");
  model->add_option("--fd-step", ma.fd_step, "finite-difference step, relative to the axis length");
  model->add_option("--margin", ma.margin, "shrink of non-periodic axes, relative to the axis length");
  model->add_flag("--no-richardson", ma.no_richardson, "plain central differences");
  model->add_flag("--no-convergence", ma.no_convergence, "skip the coarse-grid comparison");
  model->add_option("--tol", ma.tol, "slack when testing hypotheses");
  model->add_option("--seed", ma.common.seed, "recorded in the report");
  add_format(model, ma.common, {"json", "csv", "text"});

  ExtremalArgs ea;
  auto* extremal = app.add_subcommand("extremal", "search for inequality-sharp configurations");
  extremal->add_option("--functional", ea.functional, "ddvv or bw")->check(CLI::IsMember({"ddvv", "bw"}));
  extremal->add_option("--n", ea.cfg.n, "matrix size");
  extremal->add_option("--m", ea.cfg.m, "number of matrices (ddvv)");
  extremal->add_option("--restarts", ea.cfg.restarts, "random restarts");
  extremal->add_option("--max-iters", ea.cfg.max_iters, "iterations per restart");
  extremal->add_option("--tol", ea.cfg.tol, "stop when the step falls below tol * initial step");
  extremal->add_option("--seed", ea.common.seed, "seed");
  add_format(extremal, ea.common, {"json", "text"});
  ea.common.seed = 1;

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "re-render a saved JSON report");
  rep->add_option("--in", ra.in, "report file")->required();
  add_format(rep, ra.common, {"json", "csv", "text"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  ma.common.seed_given = model->count("--seed") > 0;

  try {
    if (*verify)
      return run_verify(va);
    if (*model)
      return run_model(ma, *model);
    if (*extremal)
      return run_extremal(ea);
    if (*rep)
      return run_report(ra);
  } catch (const pinch::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const pinch::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
