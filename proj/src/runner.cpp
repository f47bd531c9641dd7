#include "curvquot/runner.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace curvquot::runner {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Verification thresholds. The h^2 slack tracks the discretization order;
// the rest are absolute guards on quantities that are exact in the
// continuum.
constexpr double kResidualFactor = 10.0;   // times the Newton tolerance
constexpr double kGridSlackFactor = 5.0;   // times h_theta^2
constexpr double kMinkowskiBase = 1e-3;
constexpr double kEvennessBound = 1e-9;
constexpr double kTauSlack = 1e-6;
constexpr double kUniquenessBound = 1e-7;

void expect_keys(const ordered_json& j,
                 const std::vector<std::string>& allowed,
                 const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end())
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

const ordered_json& require_key(const ordered_json& j, const char* key,
                                const std::string& where) {
  if (!j.contains(key))
    throw ConfigError(where + " needs a '" + std::string(key) + "' entry");
  return j.at(key);
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void parse_f(const ordered_json& j, FSpec& f) {
  expect_keys(j, {"constant", "expr", "file", "even"}, "config.f");
  int sources = 0;
  if (j.contains("constant")) {
    ++sources;
    f.kind = FSpec::Kind::constant;
    f.constant = j.at("constant").get<double>();
  }
  if (j.contains("expr")) {
    ++sources;
    f.kind = FSpec::Kind::expr;
    const ordered_json& e = j.at("expr");
    expect_keys(e, {"terms"}, "config.f.expr");
    for (const ordered_json& tj : require_key(e, "terms", "config.f.expr")) {
      expect_keys(tj, {"coeff", "powers"}, "config.f.expr.terms[]");
      FExprTerm term;
      term.coeff = require_key(tj, "coeff", "term").get<double>();
      term.powers = require_key(tj, "powers", "term").get<std::vector<int>>();
      f.terms.push_back(std::move(term));
    }
  }
  if (j.contains("file")) {
    ++sources;
    f.kind = FSpec::Kind::file;
    f.file = j.at("file").get<std::string>();
  }
  if (sources != 1)
    throw ConfigError(
        "config.f needs exactly one of 'constant', 'expr', 'file'");
  f.declared_even = get_or(j, "even", false);
}

ParsedConfig parse_config_json(const ordered_json& j) {
  expect_keys(j,
              {"mode", "n", "k", "l", "p", "f", "grid", "newton", "seed",
               "beta", "solution_csv", "uniqueness_trials", "sweep"},
              "config");
  ParsedConfig c;
  c.mode = require_key(j, "mode", "config").get<std::string>();
  const std::vector<std::string> modes = {"solve", "eigen", "subcritical",
                                          "verify", "sweep"};
  if (std::find(modes.begin(), modes.end(), c.mode) == modes.end())
    throw ConfigError("unknown mode '" + c.mode + "'");

  c.spec.n = require_key(j, "n", "config").get<int>();
  c.spec.k = require_key(j, "k", "config").get<int>();
  c.spec.l = require_key(j, "l", "config").get<int>();
  c.spec.p = require_key(j, "p", "config").get<double>();
  c.spec.validate();
  parse_f(require_key(j, "f", "config"), c.spec.f);

  if (j.contains("grid")) {
    const ordered_json& g = j.at("grid");
    const std::string kind =
        require_key(g, "kind", "config.grid").get<std::string>();
    if (kind == "axisymmetric") {
      expect_keys(g, {"kind", "M"}, "config.grid");
      c.grid_kind = GridKind::axisymmetric;
      c.M = get_or(g, "M", 256);
    } else if (kind == "full2d") {
      expect_keys(g, {"kind", "M_theta", "M_phi"}, "config.grid");
      c.grid_kind = GridKind::full2d;
      c.Mt = get_or(g, "M_theta", 96);
      c.Mp = get_or(g, "M_phi", 192);
      if (c.spec.n != 2)
        throw ConfigError("full2d grids are for n = 2 only");
    } else {
      throw ConfigError("unknown grid kind '" + kind + "'");
    }
  }

  if (j.contains("newton")) {
    const ordered_json& nj = j.at("newton");
    expect_keys(nj,
                {"max_iterations", "tolerance", "backtrack_factor",
                 "min_step"},
                "config.newton");
    c.newton.max_iterations =
        get_or(nj, "max_iterations", c.newton.max_iterations);
    c.newton.tolerance = get_or(nj, "tolerance", c.newton.tolerance);
    c.newton.backtrack_factor =
        get_or(nj, "backtrack_factor", c.newton.backtrack_factor);
    c.newton.min_step = get_or(nj, "min_step", c.newton.min_step);
    if (c.newton.max_iterations < 1 || !(c.newton.tolerance > 0.0) ||
        !(c.newton.backtrack_factor > 0.0 &&
          c.newton.backtrack_factor < 1.0) ||
        !(c.newton.min_step > 0.0))
      throw ConfigError("config.newton values out of range");
  }

  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (j.contains("beta")) {
    c.beta = j.at("beta").get<double>();
    c.beta_given = true;
  }

  if (c.mode == "verify") {
    c.solution_csv =
        require_key(j, "solution_csv", "config").get<std::string>();
  } else if (j.contains("solution_csv")) {
    throw ConfigError("'solution_csv' only belongs in verify mode");
  }

  c.uniqueness_trials = get_or(j, "uniqueness_trials", 0);
  if (c.uniqueness_trials < 0)
    throw ConfigError("uniqueness_trials must be nonnegative");
  if (c.uniqueness_trials > 0 && c.mode != "solve")
    throw ConfigError("'uniqueness_trials' only belongs in solve mode");

  if (c.mode == "sweep") {
    const ordered_json& s = require_key(j, "sweep", "config");
    expect_keys(s, {"p", "resolution"}, "config.sweep");
    c.sweep_p = get_or(s, "p", std::vector<double>{});
    c.sweep_resolution = get_or(s, "resolution", std::vector<int>{});
    if (c.sweep_p.empty() && c.sweep_resolution.empty())
      throw ConfigError("config.sweep needs a nonempty 'p' or 'resolution'");
  } else if (j.contains("sweep")) {
    throw ConfigError("'sweep' only belongs in sweep mode");
  }

  // Mode and exponent regime must agree up front; a critical-exponent run
  // under plain solve would quietly be a different problem.
  const Regime r = c.spec.regime();
  if (c.mode == "solve" && r != Regime::supercritical)
    throw ConfigError("solve mode needs p > k-l+1 (got " +
                      std::string(regime_name(r)) + "); use '" +
                      (r == Regime::critical ? "eigen" : "subcritical") +
                      "' mode");
  if (c.mode == "eigen" && r != Regime::critical)
    throw ConfigError("eigen mode needs the critical exponent p = k-l+1");
  if (c.mode == "subcritical" && r != Regime::subcritical)
    throw ConfigError("subcritical mode needs 1 < p < k-l+1");
  if (c.mode == "verify" && r == Regime::critical)
    throw ConfigError(
        "verify mode replays supercritical or subcritical solutions; the "
        "critical problem carries an eigenvalue the CSV does not");

  auto check_beta = [&](double p_row) {
    if (!c.beta_given) return;
    if (classify_regime(p_row, c.spec.k, c.spec.l) != Regime::subcritical)
      return;
    const double upper = 2.0 * (p_row - 1.0) / (c.spec.k - c.spec.l);
    if (!(c.beta > 0.0 && c.beta < upper))
      throw ConfigError("beta must lie in (0, 2(p-1)/(k-l)) for p = " +
                        std::to_string(p_row));
  };
  check_beta(c.spec.p);
  for (double pr : c.sweep_p) check_beta(pr);
  return c;
}

double resolve_beta(const ParsedConfig& cfg, double p_row) {
  if (cfg.beta_given) return cfg.beta;
  return (p_row - 1.0) / (cfg.spec.k - cfg.spec.l);  // mid-interval default
}

std::string iso_timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

ordered_json echo_f(const FSpec& f) {
  ordered_json out;
  switch (f.kind) {
    case FSpec::Kind::constant:
      out["constant"] = f.constant;
      break;
    case FSpec::Kind::expr: {
      ordered_json terms = ordered_json::array();
      for (const FExprTerm& t : f.terms)
        terms.push_back({{"coeff", t.coeff}, {"powers", t.powers}});
      out["expr"] = {{"terms", terms}};
      break;
    }
    case FSpec::Kind::file:
      out["file"] = f.file;
      break;
  }
  out["even"] = f.declared_even;
  return out;
}

ordered_json echo_config(const ParsedConfig& c) {
  ordered_json out;
  out["mode"] = c.mode;
  out["n"] = c.spec.n;
  out["k"] = c.spec.k;
  out["l"] = c.spec.l;
  out["p"] = c.spec.p;
  out["f"] = echo_f(c.spec.f);
  if (c.grid_kind == GridKind::axisymmetric)
    out["grid"] = {{"kind", "axisymmetric"}, {"M", c.M}};
  else
    out["grid"] = {{"kind", "full2d"}, {"M_theta", c.Mt}, {"M_phi", c.Mp}};
  out["newton"] = {{"max_iterations", c.newton.max_iterations},
                   {"tolerance", c.newton.tolerance},
                   {"backtrack_factor", c.newton.backtrack_factor},
                   {"min_step", c.newton.min_step}};
  out["seed"] = c.seed;
  if (c.beta_given) out["beta"] = c.beta;
  if (c.mode == "verify") out["solution_csv"] = c.solution_csv;
  if (c.uniqueness_trials > 0)
    out["uniqueness_trials"] = c.uniqueness_trials;
  if (c.mode == "sweep")
    out["sweep"] = {{"p", c.sweep_p}, {"resolution", c.sweep_resolution}};
  return out;
}

void write_json_file(const ordered_json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_trace_csv(const ContinuationTrace& trace, const fs::path& path) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(out, "t,steps,residual,min_margin,min_u,max_u\n");
  for (const TraceRecord& r : trace)
    std::fprintf(out, "%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", r.t, r.steps,
                 r.residual, r.min_margin, r.min_u, r.max_u);
  std::fclose(out);
}

struct Verdicts {
  ordered_json list = ordered_json::array();
  bool enforced_failure = false;

  void add(const char* check, const char* anchor, bool pass, bool enforced,
           ordered_json details) {
    list.push_back({{"check", check},
                    {"anchor", anchor},
                    {"pass", pass},
                    {"enforced", enforced},
                    {"details", std::move(details)}});
    if (enforced && !pass) enforced_failure = true;
  }
};

struct BatteryResult {
  Verdicts verdicts;
  ordered_json diagnostics;
  ordered_json scalars;
};

// Every check that can be run against a solution field, in one place so the
// solve, eigen, subcritical and verify paths all see the same battery. For
// eigenvalue runs the equation-side checks use the stage-J exponent and the
// data rescaled by tau, which is the equation the output actually solves.
BatteryResult run_battery(const ProblemSpec& spec, const ScalarField& u,
                          const ScalarField& f, const NewtonConfig& ncfg,
                          const std::string& mode, double beta,
                          const EigenResult* eig) {
  BatteryResult out;
  const SphereGrid& g = *u.grid;
  const double h2slack = kGridSlackFactor * g.ht * g.ht;
  const double tol = std::max(ncfg.tolerance, residual_floor(g));

  ProblemSpec eff = spec;
  ScalarField feff = f;
  if (eig) {
    const double eps_J = eig->epsilon_sequence.back();
    const double tau_J = eig->tau_sequence.back();
    eff.p = spec.k - spec.l + 1 + eps_J;
    for (auto& x : feff.v) x /= tau_J;
  }
  const ScalarField phi_eff =
      homotopy_phi(1.0, feff, eff.p, eff.k, eff.l);
  const ResidualReport rr = residual(eff, u, phi_eff);

  out.scalars = {{"residual_max", rr.max_norm},
                 {"min_margin", rr.min_margin},
                 {"min_u", rr.min_u},
                 {"max_u", rr.max_u}};

  out.verdicts.add("admissible_cone", "Eq. (2.2)", rr.min_margin > 0.0, true,
                   {{"min_margin", rr.min_margin}});

  if (mode == "verify") {
    const double bound = kResidualFactor * tol + h2slack;
    const char* anchor =
        eff.regime() == Regime::subcritical ? "Theorem 1.4" : "Theorem 1.2";
    out.verdicts.add("equation_residual", anchor, rr.max_norm <= bound, true,
                     {{"residual_max", rr.max_norm}, {"bound", bound}});
  }

  if (eff.regime() == Regime::supercritical && !eig) {
    const C0Bounds c0 = c0_bounds_check(eff, u, phi_eff);
    out.verdicts.add("c0_bounds", "Lemma 3.2", c0.lower_ok && c0.upper_ok,
                     true,
                     {{"lower_slack", c0.lower_slack},
                      {"upper_slack", c0.upper_slack},
                      {"tol", c0.tol}});
  }

  const double c2 = c2_diagnostic(u);
  out.scalars["c2_max_trace"] = c2;
  out.verdicts.add("c2_trace_bound", "Lemma 3.6", std::isfinite(c2), false,
                   {{"max_trace_A", c2}});

  // The data-side convexity condition always refers to the original
  // exponent and data, also in eigenvalue runs.
  const ConditionMargin cond =
      check_f_convexity_condition(f, spec.p, spec.k, spec.l);
  out.verdicts.add("data_condition", "condition (1.4)", true, false,
                   {{"margin", cond.margin}, {"holds", cond.holds}});

  const ConvexityReport cvx = convexity_report(u, spec.quotient().a);
  out.verdicts.add(
      "solution_convexity",
      mode == "subcritical" ? "Theorem 4.1" : "Theorem 1.3",
      cond.holds ? cvx.strictly_convex : true, cond.holds,
      {{"min_eigen_A", cvx.min_eigen_A},
       {"strictly_convex", cvx.strictly_convex},
       {"condition_holds", cond.holds}});

  if (cvx.strictly_convex) {
    const SurfaceSamples s = embed(u);
    const double gap = verify_curvature_equation(eff, s, feff);
    const double bound = kResidualFactor * tol + h2slack;
    out.verdicts.add("curvature_duality", "Eq. (1.1)", gap <= bound, true,
                     {{"max_gap", gap}, {"bound", bound}});
  } else {
    out.verdicts.add("curvature_duality", "Eq. (1.1)", !cond.holds,
                     cond.holds,
                     {{"skipped", "solution is not strictly convex"}});
  }

  ordered_json mgaps;
  bool mink_ok = true;
  for (int m = 0; m < spec.n; ++m) {
    const MinkowskiGap mk = minkowski_identity_check(u, m);
    mgaps["m=" + std::to_string(m)] = mk.rel_gap;
    mink_ok = mink_ok && mk.rel_gap <= kMinkowskiBase + h2slack;
  }
  out.verdicts.add("minkowski_identity", "Minkowski formula", mink_ok, true,
                   mgaps);

  if (mode == "subcritical") {
    const double er = evenness_residual(u);
    out.verdicts.add("even_symmetry", "Theorem 1.4", er <= kEvennessBound,
                     true, {{"evenness_residual", er}});
  }

  if (eig) {
    double fmin = std::numeric_limits<double>::infinity(), fmax = 0.0;
    for (double x : f.v) {
      fmin = std::min(fmin, x);
      fmax = std::max(fmax, x);
    }
    out.verdicts.add("eigenvalue_bounds", "Theorem 1.1",
                     eig->tau >= fmin - kTauSlack &&
                         eig->tau <= fmax + kTauSlack,
                     true,
                     {{"tau", eig->tau}, {"min_f", fmin}, {"max_f", fmax}});
    out.verdicts.add(
        "eigen_residual", "Theorem 1.1",
        eig->residual_check <= kResidualFactor * tol, true,
        {{"residual_check", eig->residual_check},
         {"exact_form_residual", eig->exact_form_residual},
         {"tau_monotone", eig->tau_monotone}});
  }

  const Diagnostics d = estimate_diagnostics(spec, u, beta);
  out.verdicts.add("noncollapse", "Lemma 4.2",
                   std::isfinite(d.noncollapse_ratio), false,
                   {{"ratio", d.noncollapse_ratio}});
  out.verdicts.add("support_log_gradient", "Lemma 3.3",
                   std::isfinite(d.max_grad_log_u), false,
                   {{"max_grad_log_u", d.max_grad_log_u}});
  if (d.weighted_valid)
    out.verdicts.add("weighted_gradient", "Lemma 4.1",
                     std::isfinite(d.weighted_N), false,
                     {{"beta", d.weighted_beta}, {"N", d.weighted_N}});
  else
    out.verdicts.add("weighted_gradient", "Lemma 4.1", true, false,
                     {{"skipped", "defined in the subcritical regime only"}});

  out.diagnostics = {
      {"min_eigen_A", d.min_eigen_A},
      {"condition14_margin", cond.margin},
      {"minkowski_gap_m", mgaps},
      {"noncollapse_ratio", d.noncollapse_ratio},
      {"weighted_N(beta)",
       d.weighted_valid
           ? ordered_json{{"beta", d.weighted_beta}, {"N", d.weighted_N}}
           : ordered_json(nullptr)},
      {"max_grad_log_u", d.max_grad_log_u},
  };
  return out;
}

ordered_json grid_json(const SphereGrid& g) {
  ordered_json out;
  out["kind"] =
      g.kind == GridKind::axisymmetric ? "axisymmetric" : "full2d";
  out["nodes"] = g.node_count();
  out["h_theta"] = g.ht;
  if (g.kind == GridKind::full2d) out["h_phi"] = g.hp;
  return out;
}

int total_steps(const ContinuationTrace& t) {
  int s = 0;
  for (const TraceRecord& r : t) s += r.steps;
  return s;
}

// Runs one non-sweep configuration and writes its outputs. Returns 0, 3 or
// 4; configuration problems keep throwing ConfigError to the caller.
int run_single(const ParsedConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const GridPtr grid = build_grid(cfg);
  const ScalarField f = sample_f(cfg.spec, grid);
  const double beta = resolve_beta(cfg, cfg.spec.p);

  ordered_json report;
  report["generated_at"] = iso_timestamp();
  report["tool"] = "curvquot";
  report["mode"] = cfg.mode;
  report["regime"] = regime_name(cfg.spec.regime());
  report["config"] = echo_config(cfg);
  report["grid"] = grid_json(*grid);

  ScalarField u;
  ContinuationTrace trace;
  EigenResult eig;
  bool has_eig = false;
  ordered_json convergence;

  try {
    if (cfg.mode == "solve") {
      ContinuationResult r = continuation_solve(cfg.spec, f, cfg.newton);
      u = std::move(r.u);
      trace = std::move(r.trace);
      convergence = {{"converged", true},
                     {"stages", trace.size()},
                     {"total_steps", total_steps(trace)},
                     {"final_residual", trace.back().residual}};
    } else if (cfg.mode == "eigen") {
      eig = eigen_solve(cfg.spec, f, cfg.newton);
      has_eig = true;
      u = eig.u_tilde;
      trace = eig.trace;
      convergence = {{"converged", true},
                     {"stages", trace.size()},
                     {"total_steps", total_steps(trace)},
                     {"final_residual", trace.back().residual}};
      report["eigen"] = {{"tau", eig.tau},
                         {"epsilon_sequence", eig.epsilon_sequence},
                         {"tau_sequence", eig.tau_sequence},
                         {"extrapolated", eig.extrapolated},
                         {"tau_monotone", eig.tau_monotone},
                         {"residual_check", eig.residual_check},
                         {"exact_form_residual", eig.exact_form_residual}};
    } else if (cfg.mode == "subcritical") {
      ContinuationResult r = subcritical_solve(cfg.spec, f, cfg.newton);
      u = std::move(r.u);
      trace = std::move(r.trace);
      convergence = {{"converged", true},
                     {"stages", trace.size()},
                     {"total_steps", total_steps(trace)},
                     {"final_residual", trace.back().residual}};
    } else {  // verify
      try {
        u = read_field_csv(grid, cfg.solution_csv);
      } catch (const std::exception& e) {
        throw ConfigError("cannot load solution_csv: " +
                          std::string(e.what()));
      }
      convergence = {{"loaded_from", cfg.solution_csv}};
    }
  } catch (const SolveError& e) {
    convergence = {{"converged", false}, {"failure", e.what()}};
    report["convergence"] = convergence;
    report["verdicts"] = ordered_json::array();
    report["verdicts"].push_back(
        {{"check", "converged"},
         {"anchor", cfg.mode == "eigen" ? "Theorem 1.1" : "Theorem 1.2"},
         {"pass", false},
         {"enforced", true},
         {"details", {{"failure", e.what()}}}});
    write_trace_csv(e.trace, out_dir / "trace.csv");
    write_field_csv(e.last_admissible, (out_dir / "solution.csv").string());
    report["files"] = {{"trace", "trace.csv"},
                       {"solution", "solution.csv"},
                       {"solution_is_last_admissible", true}};
    write_json_file(report, out_dir / "report.json");
    return 3;
  }

  report["convergence"] = convergence;

  BatteryResult battery =
      run_battery(cfg.spec, u, f, cfg.newton, cfg.mode, beta,
                  has_eig ? &eig : nullptr);

  if (cfg.mode != "verify") {
    const char* anchor = cfg.mode == "eigen"
                             ? "Theorem 1.1"
                             : (cfg.mode == "subcritical" ? "Theorem 1.4"
                                                          : "Theorem 1.2");
    battery.verdicts.add("converged", anchor, true, true, convergence);
  }

  if (cfg.mode == "solve" && cfg.uniqueness_trials > 0) {
    const UniquenessReport uq = uniqueness_probe(
        cfg.spec, f, cfg.newton, cfg.uniqueness_trials, cfg.seed);
    report["uniqueness"] = {
        {"trials", uq.trials},
        {"converged", uq.converged},
        {"max_pairwise_distance", uq.max_pairwise_distance}};
    battery.verdicts.add("uniqueness_spread", "Theorem 1.2",
                         uq.converged == uq.trials &&
                             uq.max_pairwise_distance <= kUniquenessBound,
                         true,
                         {{"trials", uq.trials},
                          {"converged", uq.converged},
                          {"max_pairwise_distance",
                           uq.max_pairwise_distance}});
  }

  report["solution"] = battery.scalars;
  report["verdicts"] = battery.verdicts.list;

  write_trace_csv(trace, out_dir / "trace.csv");
  write_field_csv(u, (out_dir / "solution.csv").string());
  write_json_file(battery.diagnostics, out_dir / "diagnostics.json");

  ordered_json files = {{"trace", "trace.csv"},
                        {"solution", "solution.csv"},
                        {"diagnostics", "diagnostics.json"}};
  const bool axisym = grid->kind == GridKind::axisymmetric;
  const char* surf_name = axisym ? "profile.csv" : "surface.obj";
  try {
    const SurfaceSamples s = embed(u);
    export_surface(s, (out_dir / surf_name).string());
    files["surface"] = surf_name;
  } catch (const std::domain_error&) {
    files["surface"] = nullptr;  // not strictly convex, nothing to export
  }
  report["files"] = files;

  write_json_file(report, out_dir / "report.json");
  return battery.verdicts.enforced_failure ? 4 : 0;
}

int run_sweep(const ParsedConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<double> ps =
      cfg.sweep_p.empty() ? std::vector<double>{cfg.spec.p} : cfg.sweep_p;
  std::vector<int> res = cfg.sweep_resolution.empty()
                             ? std::vector<int>{0}
                             : cfg.sweep_resolution;

  ordered_json rows = ordered_json::array();
  bool any_solver_failure = false, any_verify_failure = false;
  int idx = 0;
  for (double p_row : ps)
    for (int r_row : res) {
      ParsedConfig row = cfg;
      row.spec.p = p_row;
      const Regime reg = row.spec.regime();
      row.mode = reg == Regime::critical
                     ? "eigen"
                     : (reg == Regime::subcritical ? "subcritical" : "solve");
      row.uniqueness_trials = 0;
      row.sweep_p.clear();
      row.sweep_resolution.clear();
      if (r_row > 0) {
        row.M = r_row;
        row.Mt = r_row;
        row.Mp = 2 * r_row;
      }
      const std::string dir = "row_" + std::to_string(idx);
      const int code = run_single(row, out_dir / dir);
      if (code == 3) any_solver_failure = true;
      if (code == 4) any_verify_failure = true;
      rows.push_back({{"p", p_row},
                      {"resolution", r_row > 0 ? ordered_json(r_row)
                                               : ordered_json(nullptr)},
                      {"regime", regime_name(reg)},
                      {"mode", row.mode},
                      {"exit", code},
                      {"dir", dir}});
      ++idx;
    }

  ordered_json report;
  report["generated_at"] = iso_timestamp();
  report["tool"] = "curvquot";
  report["mode"] = "sweep";
  report["config"] = echo_config(cfg);
  report["rows"] = rows;
  write_json_file(report, out_dir / "report.json");
  return any_solver_failure ? 3 : (any_verify_failure ? 4 : 0);
}

}  // namespace

ParsedConfig parse_config_text(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_config_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") +
                      e.what());
  }
}

GridPtr build_grid(const ParsedConfig& cfg) {
  if (cfg.grid_kind == GridKind::axisymmetric)
    return make_axisymmetric_grid(cfg.spec.n, cfg.M);
  return make_full2d_grid(cfg.Mt, cfg.Mp);
}

int run(const RunOptions& opts) {
  ParsedConfig cfg;
  try {
    std::ifstream in(opts.config_path);
    if (!in)
      throw ConfigError("cannot read config file " + opts.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_config_text(ss.str());
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.resolution) {
      if (*opts.resolution < 8)
        throw ConfigError("--resolution must be at least 8");
      cfg.M = *opts.resolution;
      cfg.Mt = *opts.resolution;
      cfg.Mp = 2 * *opts.resolution;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  try {
    const fs::path out_dir(opts.out_dir);
    const int code = cfg.mode == "sweep" ? run_sweep(cfg, out_dir)
                                         : run_single(cfg, out_dir);
    std::printf("%s: exit %d, report at %s\n", cfg.mode.c_str(), code,
                (out_dir / "report.json").c_str());
    return code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  }
}

}  // namespace curvquot::runner
