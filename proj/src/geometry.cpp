#include "curvquot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace curvquot {
namespace {

// Mean over one latitude ring, folded over antipodal phi pairs so exact
// cancellations in the mirrored trig tables survive the summation.
double ring_mean(const SphereGrid& g, const std::vector<double>& v, int i) {
  const int Mp = g.Mp, half = g.Mp / 2;
  double s = 0.0;
  for (int j = 0; j < half; ++j)
    s += v[g.index(i, j)] + v[g.index(i, j + half)];
  return s / Mp;
}

// Quadratic pole extrapolation from the two nearest rings; exact for fields
// constant in theta.
double pole_value(double ring0, double ring1) {
  return (9.0 * ring0 - ring1) / 8.0;
}

void require_convex(const CurvatureField& A, std::size_t count) {
  double worst = std::numeric_limits<double>::infinity();
  std::size_t at = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double me = A.min_eigen(i);
    if (me < worst) {
      worst = me;
      at = i;
    }
  }
  if (!(worst > 0.0))
    throw std::domain_error(
        "embedding needs a strictly convex body; min eigenvalue " +
        std::to_string(worst) + " at node " + std::to_string(at));
}

}  // namespace

SurfaceSamples embed(const ScalarField& u) {
  const SphereGrid& g = *u.grid;
  const std::size_t count = u.size();
  const CurvatureField A = hessian_plus_metric(u);
  require_convex(A, count);

  SurfaceSamples s;
  s.grid = u.grid;
  s.n = g.n;
  s.u = u;
  s.kappa.resize(static_cast<std::size_t>(g.n) * count);

  std::vector<double> dt, dp;
  gradient_components(u, dt, dp);

  if (g.kind == GridKind::axisymmetric) {
    for (std::size_t i = 0; i < count; ++i) s.kappa[i] = 1.0 / A.a_rad[i];
    for (int r = 1; r < g.n; ++r)
      for (std::size_t i = 0; i < count; ++i)
        s.kappa[r * count + i] = 1.0 / A.a_tan[i];
    s.xr.resize(count);
    s.xz.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      s.xr[i] = u.v[i] * g.sin_t[i] + dt[i] * g.cos_t[i];
      s.xz[i] = u.v[i] * g.cos_t[i] - dt[i] * g.sin_t[i];
    }
    return s;
  }

  for (std::size_t i = 0; i < count; ++i) s.kappa[i] = 1.0 / A.l1[i];
  for (std::size_t i = 0; i < count; ++i)
    s.kappa[count + i] = 1.0 / A.l2[i];
  s.x.resize(count);
  s.y.resize(count);
  s.z.resize(count);
  for (int i = 0; i < g.Mt; ++i) {
    const double st = g.sin_t[i], ct = g.cos_t[i];
    for (int j = 0; j < g.Mp; ++j) {
      const std::size_t id = g.index(i, j);
      const double sp = g.sin_p[j], cp = g.cos_p[j];
      // X = u x + u_theta e_theta + (u_phi / sin theta) e_phi
      s.x[id] = u.v[id] * st * cp + dt[id] * ct * cp - dp[id] * sp;
      s.y[id] = u.v[id] * st * sp + dt[id] * ct * sp + dp[id] * cp;
      s.z[id] = u.v[id] * ct - dt[id] * st;
    }
  }
  const double un = pole_value(ring_mean(g, u.v, 0), ring_mean(g, u.v, 1));
  const double us = pole_value(ring_mean(g, u.v, g.Mt - 1),
                               ring_mean(g, u.v, g.Mt - 2));
  s.apex_north = {ring_mean(g, s.x, 0), ring_mean(g, s.y, 0), un};
  s.apex_south = {ring_mean(g, s.x, g.Mt - 1), ring_mean(g, s.y, g.Mt - 1),
                  -us};
  return s;
}

ConvexityReport convexity_report(const ScalarField& u, int cone_a) {
  const SphereGrid& g = *u.grid;
  const CurvatureField A = hessian_plus_metric(u);
  ConvexityReport rep;
  rep.min_eigen_A = std::numeric_limits<double>::infinity();
  rep.cone_margin = std::numeric_limits<double>::infinity();
  std::vector<double> lam(g.n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    A.eigen_tuple(i, lam.data());
    rep.min_eigen_A = std::min(rep.min_eigen_A, A.min_eigen(i));
    rep.cone_margin =
        std::min(rep.cone_margin, cone_test(lam, cone_a).margin);
  }
  rep.strictly_convex = rep.min_eigen_A > 0.0;
  rep.admissible = rep.cone_margin > 0.0;
  return rep;
}

double verify_curvature_equation(const ProblemSpec& spec,
                                 const SurfaceSamples& s,
                                 const ScalarField& f) {
  const std::size_t count = s.u.size();
  const int n = s.n;
  std::vector<double> kap(n);
  double gap = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    for (int r = 0; r < n; ++r) kap[r] = s.kappa[r * count + i];
    const std::vector<double> sig = sigma_all(kap, spec.k);
    const double hk = sig[spec.k] / binomial(n, spec.k);
    const double hl =
        spec.l == 0 ? 1.0 : sig[spec.l] / binomial(n, spec.l);
    const double target = f.v[i] * std::pow(s.u.v[i], 1.0 - spec.p);
    gap = std::max(gap, std::fabs(hk / hl - target));
  }
  return gap;
}

ConditionMargin check_f_convexity_condition(const ScalarField& f, double p,
                                            int k, int l) {
  const double q = p + k - l - 1;
  if (!(q > 0.0)) throw std::invalid_argument("need p + k - l - 1 > 0");
  ScalarField g(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i)
    g.v[i] = std::pow(f.v[i], 1.0 / q);
  const CurvatureField A = hessian_plus_metric(g);
  ConditionMargin c;
  c.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i)
    c.margin = std::min(c.margin, A.min_eigen(i));
  c.holds = c.margin >= -1e-8;
  return c;
}

MinkowskiGap minkowski_identity_check(const ScalarField& u, int m) {
  const SphereGrid& g = *u.grid;
  if (!(0 <= m && m < g.n))
    throw std::invalid_argument("Minkowski index m must satisfy 0 <= m < n");
  const CurvatureField A = hessian_plus_metric(u);
  ScalarField lhs(u.grid), rhs(u.grid);
  std::vector<double> lam(g.n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    A.eigen_tuple(i, lam.data());
    const std::vector<double> sig = sigma_all(lam, m + 1);
    const double hm = m == 0 ? 1.0 : sig[m] / binomial(g.n, m);
    lhs.v[i] = u.v[i] * hm;
    rhs.v[i] = sig[m + 1] / binomial(g.n, m + 1);
  }
  MinkowskiGap out;
  out.lhs = integrate(lhs);
  out.rhs = integrate(rhs);
  const double scale =
      std::max({std::fabs(out.lhs), std::fabs(out.rhs), 1e-300});
  out.rel_gap = std::fabs(out.lhs - out.rhs) / scale;
  return out;
}

Diagnostics estimate_diagnostics(const ProblemSpec& spec,
                                 const ScalarField& u, double beta) {
  Diagnostics d;
  const CurvatureField A = hessian_plus_metric(u);
  const ScalarField gns = gradient_norm_sq(u);
  d.min_eigen_A = std::numeric_limits<double>::infinity();
  double umin = std::numeric_limits<double>::infinity(), umax = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d.min_eigen_A = std::min(d.min_eigen_A, A.min_eigen(i));
    umin = std::min(umin, u.v[i]);
    umax = std::max(umax, u.v[i]);
    d.max_grad_log_u =
        std::max(d.max_grad_log_u, std::sqrt(gns.v[i]) / u.v[i]);
  }
  d.noncollapse_ratio = umax / umin;
  if (spec.regime() == Regime::subcritical) {
    const double upper = 2.0 * (spec.p - 1.0) / (spec.k - spec.l);
    if (!(beta > 0.0 && beta < upper))
      throw std::invalid_argument(
          "weighted diagnostic needs beta in (0, 2(p-1)/(k-l)); got " +
          std::to_string(beta));
    double wmax = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      wmax = std::max(wmax, (gns.v[i] + u.v[i] * u.v[i]) /
                                std::pow(u.v[i], beta));
    d.weighted_beta = beta;
    d.weighted_N = wmax / std::pow(umax, 2.0 - beta);
    d.weighted_valid = true;
  }
  return d;
}

void export_surface(const SurfaceSamples& s, const std::string& path) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("cannot write " + path);
  const SphereGrid& g = *s.grid;
  if (g.kind == GridKind::axisymmetric) {
    std::fprintf(out, "theta,X_r,X_z\n");
    for (int i = 0; i < g.M; ++i)
      std::fprintf(out, "%.17g,%.17g,%.17g\n", g.theta[i], s.xr[i], s.xz[i]);
    std::fclose(out);
    return;
  }
  const int Mt = g.Mt, Mp = g.Mp;
  for (int i = 0; i < Mt; ++i)
    for (int j = 0; j < Mp; ++j) {
      const std::size_t id = g.index(i, j);
      std::fprintf(out, "v %.17g %.17g %.17g\n", s.x[id], s.y[id], s.z[id]);
    }
  std::fprintf(out, "v %.17g %.17g %.17g\n", s.apex_north[0], s.apex_north[1],
               s.apex_north[2]);
  std::fprintf(out, "v %.17g %.17g %.17g\n", s.apex_south[0], s.apex_south[1],
               s.apex_south[2]);
  const auto vid = [Mp](int i, int j) { return i * Mp + (j % Mp) + 1; };
  const int north = Mt * Mp + 1, south = Mt * Mp + 2;
  for (int j = 0; j < Mp; ++j)
    std::fprintf(out, "f %d %d %d\n", north, vid(0, j), vid(0, j + 1));
  for (int i = 0; i + 1 < Mt; ++i)
    for (int j = 0; j < Mp; ++j)
      std::fprintf(out, "f %d %d %d %d\n", vid(i, j), vid(i + 1, j),
                   vid(i + 1, j + 1), vid(i, j + 1));
  for (int j = 0; j < Mp; ++j)
    std::fprintf(out, "f %d %d %d\n", south, vid(Mt - 1, j + 1),
                 vid(Mt - 1, j));
  std::fclose(out);
}

}  // namespace curvquot
