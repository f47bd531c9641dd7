#include "curvquot/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace curvquot {
namespace {

ScalarField ones(const GridPtr& g) { return ScalarField(g, 1.0); }

// residual() rejects nonpositive u with an exception; the line search treats
// that case as just another rejected step.
std::optional<ResidualReport> safe_residual(const ProblemSpec& spec,
                                            const ScalarField& u,
                                            const ScalarField& phi) {
  for (double x : u.v)
    if (!(x > 0.0)) return std::nullopt;
  return residual(spec, u, phi);
}

TraceRecord stage_row(double t, const NewtonResult& r) {
  return TraceRecord{t, r.steps, r.final_residual, r.min_margin, r.min_u,
                     r.max_u};
}

double field_min(const ScalarField& u) {
  return *std::min_element(u.v.begin(), u.v.end());
}
double field_max(const ScalarField& u) {
  return *std::max_element(u.v.begin(), u.v.end());
}

// max |Hbar(lambda(A_u)) - rhs| in the unrooted quotient, used by the
// eigenvalue mode to check its output against the equation it solved.
double max_unrooted_gap(const ProblemSpec& spec, const ScalarField& u,
                        const std::vector<double>& rhs) {
  const CurvatureField A = hessian_plus_metric(u);
  const QuotientOperator q = spec.quotient();
  double gap = 0.0;
  if (u.grid->kind == GridKind::axisymmetric) {
    std::vector<double> lam(spec.n);
    for (std::size_t i = 0; i < u.size(); ++i) {
      lam[0] = A.a_rad[i];
      for (int c = 1; c < spec.n; ++c) lam[c] = A.a_tan[i];
      gap = std::max(gap, std::fabs(quotient_value(q, lam).fbar - rhs[i]));
    }
  } else {
    for (std::size_t i = 0; i < u.size(); ++i)
      gap = std::max(
          gap, std::fabs(quotient_value_n2(q, A.l1[i], A.l2[i]).fbar - rhs[i]));
  }
  return gap;
}

ContinuationResult march(const ProblemSpec& spec, const ScalarField& f,
                         const NewtonConfig& cfg) {
  ContinuationResult out{ones(f.grid), {}};
  {
    const ResidualReport r0 =
        residual(spec, out.u, homotopy_phi(0.0, f, spec.p, spec.k, spec.l));
    out.trace.push_back(TraceRecord{0.0, 0, r0.max_norm, r0.min_margin,
                                    r0.min_u, r0.max_u});
  }
  double t = 0.0, dt = 0.1;
  int consecutive = 0;
  while (t < 1.0) {
    const double tn = std::min(1.0, t + dt);
    const ScalarField phi = homotopy_phi(tn, f, spec.p, spec.k, spec.l);
    NewtonResult r = try_newton(spec, out.u, phi, cfg);
    if (r.converged) {
      out.u = std::move(r.u);
      t = tn;
      out.trace.push_back(stage_row(tn, r));
      if (++consecutive >= 3) {
        dt *= 1.5;
        consecutive = 0;
      }
    } else {
      dt *= 0.5;
      consecutive = 0;
      if (dt < 1e-4)
        throw SolveError("continuation step collapsed below 1e-4 near t = " +
                             std::to_string(t) + " (" + r.failure + ")",
                         out.trace, out.u);
    }
  }
  return out;
}

ContinuationResult continue_from_one(const ProblemSpec& spec,
                                     const ScalarField& f,
                                     const NewtonConfig& cfg) {
  // Direct attempt at t = 1 first; mild data lands in the Newton basin
  // straight from u = 1 and the trace stays a single row.
  const ScalarField phi1 = homotopy_phi(1.0, f, spec.p, spec.k, spec.l);
  NewtonConfig probe = cfg;
  probe.max_iterations = std::min(cfg.max_iterations, 12);
  NewtonResult direct = try_newton(spec, ones(f.grid), phi1, probe);
  if (direct.converged) {
    ContinuationResult out{std::move(direct.u), {}};
    out.trace.push_back(stage_row(1.0, direct));
    return out;
  }
  return march(spec, f, cfg);
}

}  // namespace

double residual_floor(const SphereGrid& grid) {
  const double eps = std::numeric_limits<double>::epsilon();
  if (grid.kind == GridKind::axisymmetric)
    return 8.0 * eps * 2.0 / (grid.ht * grid.ht);
  const double s0 = grid.sin_t[0];
  return 8.0 * eps / (grid.hp * grid.hp * s0 * s0);
}

NewtonResult try_newton(const ProblemSpec& spec, const ScalarField& u0,
                        const ScalarField& phi, const NewtonConfig& cfg) {
  NewtonResult res;
  res.u = cfg.project_even ? even_projection(u0) : u0;
  std::optional<ResidualReport> cur = safe_residual(spec, res.u, phi);
  if (!cur || !(cur->min_margin > 0.0)) {
    res.failure = "start is nonpositive or outside the cone";
    if (cur) {
      res.min_margin = cur->min_margin;
      res.min_u = cur->min_u;
      res.max_u = cur->max_u;
    }
    res.final_residual = std::numeric_limits<double>::infinity();
    return res;
  }
  res.residual_history.push_back(cur->max_norm);
  const double tol = std::max(cfg.tolerance, residual_floor(*res.u.grid));

  for (;;) {
    // The degenerate collapse u -> 0 is also a root of the discrete
    // equation, with residual shrinking like u itself. Tying acceptance to
    // the iterate scale rejects it at every tolerance while leaving O(1)
    // solutions untouched.
    if (cur->max_norm <= tol * std::min(1.0, cur->max_u)) {
      res.converged = true;
      break;
    }
    if (res.steps >= cfg.max_iterations) {
      res.failure = "iteration budget exhausted";
      break;
    }
    std::vector<double> delta;
    try {
      const LinearOperator J = linearize(spec, res.u, phi);
      std::vector<double> rhs(res.u.size());
      for (std::size_t i = 0; i < rhs.size(); ++i)
        rhs[i] = -cur->residual.v[i];
      delta = J.solve(rhs);
    } catch (const std::runtime_error& e) {
      res.failure = e.what();
      break;
    }

    bool accepted = false;
    for (double s = 1.0; s >= cfg.min_step; s *= cfg.backtrack_factor) {
      ScalarField cand(res.u.grid);
      for (std::size_t i = 0; i < cand.size(); ++i)
        cand.v[i] = std::fma(s, delta[i], res.u.v[i]);
      if (cfg.project_even) cand = even_projection(cand);
      std::optional<ResidualReport> rep = safe_residual(spec, cand, phi);
      if (rep && rep->min_margin > 0.0 && rep->max_norm < cur->max_norm) {
        res.u = std::move(cand);
        cur = std::move(rep);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.failure = "line search stalled";
      break;
    }
    ++res.steps;
    res.residual_history.push_back(cur->max_norm);
  }

  res.final_residual = cur->max_norm;
  res.min_margin = cur->min_margin;
  res.min_u = cur->min_u;
  res.max_u = cur->max_u;
  return res;
}

ScalarField newton_solve(const ProblemSpec& spec, const ScalarField& u0,
                         const ScalarField& phi, const NewtonConfig& cfg) {
  NewtonResult r = try_newton(spec, u0, phi, cfg);
  if (!r.converged) {
    ContinuationTrace trace;
    trace.push_back(stage_row(1.0, r));
    throw SolveError("newton failed: " + r.failure, std::move(trace),
                     std::move(r.u));
  }
  return std::move(r.u);
}

ContinuationResult continuation_solve(const ProblemSpec& spec,
                                      const ScalarField& f,
                                      const NewtonConfig& cfg) {
  if (spec.regime() != Regime::supercritical)
    throw ConfigError("continuation_solve needs p > k-l+1; got regime " +
                      std::string(regime_name(spec.regime())));
  return continue_from_one(spec, f, cfg);
}

ContinuationResult subcritical_solve(const ProblemSpec& spec,
                                     const ScalarField& f,
                                     const NewtonConfig& cfg) {
  if (spec.regime() != Regime::subcritical)
    throw ConfigError("subcritical_solve needs 1 < p < k-l+1; got regime " +
                      std::string(regime_name(spec.regime())));
  const double even_gap = evenness_residual(f);
  if (even_gap > 1e-10)
    throw ConfigError("subcritical data must be even; evenness residual " +
                      std::to_string(even_gap));
  NewtonConfig even_cfg = cfg;
  even_cfg.project_even = true;
  return continue_from_one(spec, f, even_cfg);
}

EigenResult eigen_solve(const ProblemSpec& spec, const ScalarField& f,
                        const NewtonConfig& cfg) {
  if (spec.regime() != Regime::critical)
    throw ConfigError("eigen_solve needs p = k-l+1; got regime " +
                      std::string(regime_name(spec.regime())));
  const int d = spec.k - spec.l;
  const double crit = d + 1;
  constexpr int kStages = 9;

  EigenResult out;
  double a = 1.0;  // running eigenvalue estimate, folded into the data
  ScalarField w = ones(f.grid);
  for (int j = 0; j < kStages; ++j) {
    const double eps = std::ldexp(0.5, -j);
    ProblemSpec stage = spec;
    stage.p = crit + eps;
    ScalarField fj(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) fj.v[i] = f.v[i] / a;
    const ScalarField phi_j =
        homotopy_phi(1.0, fj, stage.p, stage.k, stage.l);

    // Predict the stage's scale from the tau trend. The stage solution sits
    // at w_prev scaled by (tau/a)^(1/eps), which stays O(1) but is not 1;
    // centering the start there leaves Newton only the shape correction.
    double scale = 1.0;
    const std::size_t nt = out.tau_sequence.size();
    if (nt >= 2) {
      const double de = (eps - out.epsilon_sequence[nt - 1]) /
                        (out.epsilon_sequence[nt - 1] -
                         out.epsilon_sequence[nt - 2]);
      const double tau_pred =
          out.tau_sequence[nt - 1] +
          de * (out.tau_sequence[nt - 1] - out.tau_sequence[nt - 2]);
      if (tau_pred > 0.0) scale = std::pow(tau_pred / a, 1.0 / eps);
      if (!(std::isfinite(scale) && scale > 0.0)) scale = 1.0;
    }
    ScalarField start = w;
    if (scale != 1.0)
      for (auto& x : start.v) x *= scale;

    NewtonResult r;
    if (j == 0) {
      // March the opening rung instead of jumping to t = 1. The jump can
      // slide into the degenerate small-u branch (also a root of the t = 1
      // problem) when the data sits far from 1; the homotopy tracks the
      // positive branch from u = 1 and never gets near the basin boundary.
      ContinuationResult full;
      try {
        full = continuation_solve(stage, fj, cfg);
      } catch (SolveError& e) {
        throw SolveError("eigenvalue ladder stalled at eps = " +
                             std::to_string(eps) + ": " +
                             std::string(e.what()),
                         out.trace, e.last_admissible);
      }
      r.converged = true;
      r.u = std::move(full.u);
      r.steps = 0;
      for (const TraceRecord& row : full.trace) r.steps += row.steps;
      const TraceRecord& last = full.trace.back();
      r.final_residual = last.residual;
      r.min_margin = last.min_margin;
      r.min_u = last.min_u;
      r.max_u = last.max_u;
    } else {
      r = try_newton(stage, start, phi_j, cfg);
      if (!r.converged && scale != 1.0) r = try_newton(stage, w, phi_j, cfg);
    }
    if (!r.converged && j > 0) {
      // Bridge through an intermediate exponent before giving up; a full
      // restart is useless here because the from-scratch homotopy at tiny
      // eps walks through wildly scaled iterates.
      ProblemSpec bridge = spec;
      // Geometric mean of this rung and the previous one.
      bridge.p = crit + std::sqrt(eps * (2.0 * eps));
      NewtonResult rb = try_newton(
          bridge, w, homotopy_phi(1.0, fj, bridge.p, bridge.k, bridge.l),
          cfg);
      if (rb.converged) r = try_newton(stage, rb.u, phi_j, cfg);
    }
    if (!r.converged)
      throw SolveError("eigenvalue ladder stalled at eps = " +
                           std::to_string(eps) + ": " + r.failure,
                       out.trace, w);
    w = std::move(r.u);
    out.trace.push_back(stage_row(eps, r));

    const double m = field_min(w);
    const double tau = a * std::pow(m, eps);
    out.epsilon_sequence.push_back(eps);
    out.tau_sequence.push_back(tau);
    a = tau;
    // Keep the next warm start O(1); tau already banked the scale.
    for (auto& x : w.v) x /= m;
  }

  const int J = kStages - 1;
  const double tau_J = out.tau_sequence[J];
  out.extrapolated = true;
  out.tau = 2.0 * out.tau_sequence[J] - out.tau_sequence[J - 1];

  int sign = 0;
  for (int j = 1; j < kStages; ++j) {
    const double diff = out.tau_sequence[j] - out.tau_sequence[j - 1];
    // Solver-noise wiggles should not count as direction changes.
    if (std::fabs(diff) <= 1e-12 * (1.0 + std::fabs(tau_J))) continue;
    const int s = diff > 0.0 ? 1 : -1;
    if (sign == 0)
      sign = s;
    else if (s != sign)
      out.tau_monotone = false;
  }

  const double m = field_min(w);
  out.u_tilde = ScalarField(f.grid);
  for (std::size_t i = 0; i < w.size(); ++i) out.u_tilde.v[i] = w.v[i] / m;

  const double eps_J = out.epsilon_sequence[J];
  std::vector<double> rhs(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    rhs[i] = tau_J * std::pow(out.u_tilde.v[i], d + eps_J) / f.v[i];
  out.residual_check = max_unrooted_gap(spec, out.u_tilde, rhs);
  for (std::size_t i = 0; i < f.size(); ++i)
    rhs[i] = out.tau * std::pow(out.u_tilde.v[i], double(d)) / f.v[i];
  out.exact_form_residual = max_unrooted_gap(spec, out.u_tilde, rhs);

  const double check_tol =
      std::max(cfg.tolerance, residual_floor(*f.grid));
  if (!(out.residual_check <= 10.0 * check_tol))
    throw SolveError("eigenvalue output fails its residual check: " +
                         std::to_string(out.residual_check),
                     out.trace, out.u_tilde);
  return out;
}

UniquenessReport uniqueness_probe(const ProblemSpec& spec,
                                  const ScalarField& f,
                                  const NewtonConfig& cfg, int trials,
                                  std::uint64_t seed) {
  UniquenessReport rep;
  rep.trials = trials;
  ContinuationResult base = continuation_solve(spec, f, cfg);
  rep.baseline = base.u;

  const ScalarField phi1 = homotopy_phi(1.0, f, spec.p, spec.k, spec.l);
  NewtonConfig probe_cfg = cfg;
  probe_cfg.max_iterations = std::max(cfg.max_iterations, 200);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  // Constant starts bracket the solution but keep clear of the degenerate
  // small-u root of the same equation: for constant data its basin boundary
  // sits at half the solution, so 0.5 min u would start on the fence.
  const double lo = std::log(0.75 * field_min(base.u));
  const double hi = std::log(1.5 * field_max(base.u));
  std::uniform_real_distribution<double> logc(lo, hi);

  const SphereGrid& g = *f.grid;
  const int dim = g.n + 1;
  std::vector<ScalarField> hits;
  hits.push_back(base.u);

  for (int trial = 0; trial < trials; ++trial) {
    ScalarField start(f.grid);
    if (trial % 2 == 0) {
      const double c = std::exp(logc(rng));
      for (auto& x : start.v) x = c;
    } else {
      // Smooth low-mode bump: linear part is odd, quadratic part even, so
      // both symmetry classes of perturbation get exercised.
      std::vector<double> lin(dim), quad(dim * dim);
      for (auto& c : lin) c = unit(rng);
      for (auto& c : quad) c = unit(rng);
      ScalarField xi(f.grid);
      std::vector<double> x(dim);
      double worst = 0.0;
      for (std::size_t id = 0; id < xi.size(); ++id) {
        g.ambient(id, x.data());
        double v = 0.0;
        for (int c = 0; c < dim; ++c) {
          v += lin[c] * x[c];
          for (int c2 = 0; c2 < dim; ++c2)
            v += quad[c * dim + c2] * x[c] * x[c2];
        }
        xi.v[id] = v;
        worst = std::max(worst, std::fabs(v));
      }
      if (worst > 0.0)
        for (auto& v : xi.v) v /= worst;
      double amp = 0.1;
      for (;;) {
        for (std::size_t i = 0; i < start.size(); ++i)
          start.v[i] = base.u.v[i] * (1.0 + amp * xi.v[i]);
        const auto r = safe_residual(spec, start, phi1);
        if ((r && r->min_margin > 0.0) || amp < 1e-6) break;
        amp *= 0.5;
      }
      if (amp < 1e-6) start = base.u;
    }

    NewtonResult r = try_newton(spec, start, phi1, probe_cfg);
    if (r.converged) {
      ++rep.converged;
      hits.push_back(std::move(r.u));
    }
  }

  for (std::size_t i = 0; i < hits.size(); ++i)
    for (std::size_t j = i + 1; j < hits.size(); ++j) {
      double dmax = 0.0;
      for (std::size_t c = 0; c < hits[i].size(); ++c)
        dmax = std::max(dmax, std::fabs(hits[i].v[c] - hits[j].v[c]));
      rep.max_pairwise_distance = std::max(rep.max_pairwise_distance, dmax);
    }
  return rep;
}

}  // namespace curvquot
