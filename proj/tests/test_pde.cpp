#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "curvquot/pde.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace curvquot;

namespace {

ProblemSpec make_spec(int n, int k, int l, double p, double fconst) {
  ProblemSpec s;
  s.n = n;
  s.k = k;
  s.l = l;
  s.p = p;
  s.f.kind = FSpec::Kind::constant;
  s.f.constant = fconst;
  return s;
}

ScalarField constant_phi(const GridPtr& g, double c) {
  return ScalarField(g, c);
}

}  // namespace

TEST_CASE("regime classification") {
  CHECK(classify_regime(3.0, 1, 0) == Regime::supercritical);
  CHECK(classify_regime(2.0, 1, 0) == Regime::critical);
  CHECK(classify_regime(1.5, 1, 0) == Regime::subcritical);
  CHECK(classify_regime(2.0 + 5e-13, 2, 1) == Regime::critical);
  CHECK(classify_regime(2.0 + 5e-12, 2, 1) == Regime::supercritical);
  CHECK(std::string(regime_name(Regime::critical)) == "critical");
}

TEST_CASE("spec validation") {
  CHECK_NOTHROW(make_spec(2, 1, 0, 3.0, 1.0).validate());
  CHECK_NOTHROW(make_spec(5, 4, 2, 2.5, 1.0).validate());
  CHECK_THROWS_AS(make_spec(1, 1, 0, 3.0, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec(3, 0, 0, 3.0, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec(3, 2, 2, 3.0, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec(3, 4, 1, 3.0, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec(3, 2, 1, 1.0, 1.0).validate(), ConfigError);
  const auto q = make_spec(4, 3, 1, 3.0, 1.0).quotient();
  CHECK(q.n == 4);
  CHECK(q.a == 3);  // n - l
  CHECK(q.b == 1);  // n - k
}

TEST_CASE("sampling a data function from an ambient polynomial") {
  const GridPtr g = make_axisymmetric_grid(2, 64);
  ProblemSpec s = make_spec(2, 1, 0, 3.0, 0.0);
  s.f.kind = FSpec::Kind::expr;
  s.f.terms = {{0.2, {0, 0, 1}}};  // exp(0.2 z)
  const ScalarField f = sample_f(s, g);
  for (int i = 0; i < g->M; ++i)
    CHECK(f.v[i] == doctest::Approx(std::exp(0.2 * g->cos_t[i])).epsilon(1e-14));

  // x-dependence is not axisymmetric, so the axisymmetric grid rejects it
  ProblemSpec bad = s;
  bad.f.terms = {{0.1, {2, 0, 0}}};
  CHECK_THROWS_AS(sample_f(bad, g), ConfigError);
  // but the same term is fine on a full2d grid
  const GridPtr g2 = make_full2d_grid(16, 32);
  CHECK_NOTHROW(sample_f(bad, g2));

  ProblemSpec neg = s;
  neg.f.terms = {{0.1, {0, 0, -1}}};
  CHECK_THROWS_AS(sample_f(neg, g), ConfigError);
  ProblemSpec short_pow = s;
  short_pow.f.terms = {{0.1, {0, 1}}};
  CHECK_THROWS_AS(sample_f(short_pow, g), ConfigError);
}

TEST_CASE("declared evenness is enforced at sampling time") {
  const GridPtr g = make_axisymmetric_grid(2, 64);
  ProblemSpec s = make_spec(2, 1, 0, 3.0, 0.0);
  s.f.kind = FSpec::Kind::expr;
  s.f.terms = {{0.3, {0, 0, 2}}};  // exp(0.3 z^2), antipodally even
  s.f.declared_even = true;
  CHECK_NOTHROW(sample_f(s, g));

  ProblemSpec odd = s;
  odd.f.terms = {{0.3, {0, 0, 1}}};  // exp(0.3 z) is not even
  CHECK_THROWS_AS(sample_f(odd, g), ConfigError);

  // the subcritical regime enforces evenness even without the declaration
  ProblemSpec sub = odd;
  sub.f.declared_even = false;
  sub.p = 1.5;
  CHECK_THROWS_AS(sample_f(sub, g), ConfigError);
  ProblemSpec sup = sub;
  sup.p = 3.0;
  CHECK_NOTHROW(sample_f(sup, g));
}

TEST_CASE("file-backed data functions round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "curvquot_pde_test";
  fs::create_directories(dir);
  const GridPtr g = make_axisymmetric_grid(2, 48);
  ScalarField raw(g);
  for (int i = 0; i < g->M; ++i) raw.v[i] = 1.0 + 0.25 * g->cos_t[i];
  const std::string path = (dir / "f.csv").string();
  write_field_csv(raw, path);
  ProblemSpec s = make_spec(2, 1, 0, 3.0, 0.0);
  s.f.kind = FSpec::Kind::file;
  s.f.file = path;
  const ScalarField f = sample_f(s, g);
  for (int i = 0; i < g->M; ++i) CHECK(f.v[i] == raw.v[i]);

  // nonpositive file data is rejected
  raw.v[3] = -0.5;
  write_field_csv(raw, path);
  CHECK_THROWS_AS(sample_f(s, g), ConfigError);
}

TEST_CASE("homotopy endpoints are exact") {
  const GridPtr g = make_axisymmetric_grid(2, 32);
  ScalarField f(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.5, 3.0);
  for (auto& x : f.v) x = d(rng);
  const ScalarField phi0 = homotopy_phi(0.0, f, 3.0, 1, 0);
  const ScalarField phi1 = homotopy_phi(1.0, f, 3.0, 1, 0);
  for (int i = 0; i < g->M; ++i) {
    CHECK(phi0.v[i] == 1.0);
    CHECK(phi1.v[i] == 1.0 / f.v[i]);
  }
  CHECK_THROWS(homotopy_phi(-0.1, f, 3.0, 1, 0));
  CHECK_THROWS(homotopy_phi(1.1, f, 3.0, 1, 0));
}

TEST_CASE("homotopy midpoint in closed form") {
  // f = 16, p = 4, k = 1, l = 0 on S^2 gives q = p + k - l - 1 = 4, so
  // phi_{1/2} = ((1 + 16^{1/4})/2)^{-4} = (3/2)^{-4} = 16/81.
  const GridPtr g = make_axisymmetric_grid(2, 32);
  const ScalarField f(g, 16.0);
  const ScalarField phi = homotopy_phi(0.5, f, 4.0, 1, 0);
  for (int i = 0; i < g->M; ++i)
    CHECK(phi.v[i] == doctest::Approx(16.0 / 81.0).epsilon(1e-15));
}

TEST_CASE("residual of the unit sphere against a constant target") {
  // u = 1, A = identity, so Hbar_a / Hbar_b = 1 and F = 1. With phi = 2 and
  // p = 3 the rooted target is psi = (2 * 1)^{1/1} = 2, residual -1.
  const GridPtr g = make_axisymmetric_grid(2, 48);
  const ProblemSpec s = make_spec(2, 1, 0, 3.0, 0.0);
  const ScalarField u(g, 1.0);
  const auto rep = residual(s, u, constant_phi(g, 2.0));
  CHECK(rep.max_norm == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 0; i < g->M; ++i)
    CHECK(rep.residual.v[i] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(rep.min_margin == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.min_u == 1.0);
  CHECK(rep.max_u == 1.0);
}

TEST_CASE("residual flags nonpositive and inadmissible iterates") {
  const GridPtr g = make_axisymmetric_grid(2, 32);
  const ProblemSpec s2 = make_spec(2, 1, 0, 3.0, 0.0);  // cone Gamma_2
  ScalarField u(g, 1.0);
  u.v[5] = -0.25;
  CHECK_THROWS_AS(residual(s2, u, constant_phi(g, 1.0)), std::domain_error);

  // a large even second harmonic drives sigma_2 of A negative somewhere
  ScalarField bad(g);
  for (int i = 0; i < g->M; ++i)
    bad.v[i] = 1.0 + 0.9 * std::cos(2.0 * g->theta[i]);
  for (auto& x : bad.v) x = std::max(x, 0.2);
  const auto rep = residual(s2, bad, constant_phi(g, 1.0));
  CHECK(rep.min_margin < 0.0);
  CHECK(std::isinf(rep.max_norm));
}

TEST_CASE("linearization matches directional finite differences") {
  struct Case {
    int n, k, l;
    double p;
    bool full;
  };
  const Case cases[] = {
      {2, 1, 0, 3.0, false}, {3, 2, 1, 3.5, false},
      {3, 2, 0, 2.5, false}, {2, 1, 0, 3.0, true},
      {2, 2, 1, 4.0, true},
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> bump(-0.05, 0.05);
  for (const Case& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.k);
    CAPTURE(c.l);
    CAPTURE(c.full);
    const GridPtr g =
        c.full ? make_full2d_grid(12, 24) : make_axisymmetric_grid(c.n, 24);
    const ProblemSpec s = make_spec(c.n, c.k, c.l, c.p, 0.0);
    // a gentle even perturbation of the unit sphere stays admissible
    ScalarField u(g, 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      double x[8];
      g->ambient(i, x);
      u.v[i] += 0.1 * x[c.n] * x[c.n] + 0.05 * x[0];
    }
    ScalarField phi(g);
    for (std::size_t i = 0; i < phi.size(); ++i) phi.v[i] = 1.0 + bump(rng) + 0.5;
    ScalarField h(g);
    for (auto& x : h.v) x = bump(rng);

    const LinearOperator J = linearize(s, u, phi);
    const std::vector<double> Jh = J.apply(h.v);

    const double eps = 1e-6;
    ScalarField up(g), um(g);
    up.v = u.v;
    um.v = u.v;
    for (std::size_t i = 0; i < u.size(); ++i) {
      up.v[i] += eps * h.v[i];
      um.v[i] -= eps * h.v[i];
    }
    const auto rp = residual(s, up, phi);
    const auto rm = residual(s, um, phi);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double fd = (rp.residual.v[i] - rm.residual.v[i]) / (2.0 * eps);
      worst = std::max(worst, std::fabs(fd - Jh[i]));
    }
    CHECK(worst <= 2e-5);
  }
}

TEST_CASE("linearization at the round sphere acts simply on constants") {
  // At u = 1, phi = 1 the operator sends the constant vector 1 to
  // (1 - (p-1)/d) * 1: the trace part differentiates F(A + s I) = 1 + s and
  // the source term contributes -psi'(1) = -(p-1)/d.
  const GridPtr g = make_axisymmetric_grid(3, 32);
  for (double p : {2.0, 3.0, 4.5}) {
    const ProblemSpec s = make_spec(3, 2, 1, p, 0.0);
    const int d = s.k - s.l;
    const ScalarField u(g, 1.0);
    const LinearOperator J = linearize(s, u, constant_phi(g, 1.0));
    const std::vector<double> out = J.apply(std::vector<double>(g->M, 1.0));
    for (double v : out)
      CHECK(v == doctest::Approx(1.0 - (p - 1.0) / d).epsilon(1e-9));
  }
}

TEST_CASE("inadmissible linearization point throws with context") {
  const GridPtr g = make_axisymmetric_grid(2, 32);
  const ProblemSpec s = make_spec(2, 1, 0, 3.0, 0.0);
  ScalarField bad(g);
  for (int i = 0; i < g->M; ++i)
    bad.v[i] = std::max(1.0 + 0.9 * std::cos(2.0 * g->theta[i]), 0.2);
  try {
    linearize(s, bad, constant_phi(g, 1.0));
    FAIL("expected AdmissibilityError");
  } catch (const AdmissibilityError& e) {
    CHECK(e.cone == 2);
    CHECK(e.margin < 0.0);
  }
}

TEST_CASE("direct solve inverts the assembled matrix") {
  for (bool full : {false, true}) {
    const GridPtr g =
        full ? make_full2d_grid(12, 24) : make_axisymmetric_grid(2, 32);
    const ProblemSpec s = make_spec(2, 1, 0, 3.0, 0.0);
    ScalarField u(g, 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      double x[4];
      g->ambient(i, x);
      u.v[i] += 0.08 * x[2] * x[2];
    }
    const LinearOperator J = linearize(s, u, constant_phi(g, 1.0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> b(u.size());
    for (auto& x : b) x = d(rng);
    const std::vector<double> sol = J.solve(b);
    const std::vector<double> back = J.apply(sol);
    for (std::size_t i = 0; i < b.size(); ++i)
      CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-9));
    CHECK_FALSE(J.used_shift());
  }
}

TEST_CASE("sup bound bracket holds at an exact constant solution") {
  // supercritical: u = f^{1/(p-k+l-1)} solves the equation exactly, and
  // u^{p-(k-l+1)} equals 1/phi on the nose.
  const GridPtr g = make_axisymmetric_grid(2, 32);
  const ProblemSpec s = make_spec(2, 1, 0, 4.0, 16.0);
  const ScalarField f(g, 16.0);
  const ScalarField u(g, 4.0);  // 16^{1/2}
  const ScalarField phi = homotopy_phi(1.0, f, s.p, s.k, s.l);
  const auto b = c0_bounds_check(s, u, phi);
  CHECK(b.lower_ok);
  CHECK(b.upper_ok);
  CHECK(b.lower_slack == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.upper_slack == doctest::Approx(0.0).epsilon(1e-12));

  const ProblemSpec sub = make_spec(2, 1, 0, 1.5, 1.0);
  const ScalarField phis = homotopy_phi(1.0, f, sub.p, sub.k, sub.l);
  CHECK_THROWS_AS(c0_bounds_check(sub, u, phis), std::logic_error);
}

TEST_CASE("trace diagnostic of the unit sphere") {
  const GridPtr g = make_axisymmetric_grid(4, 32);
  const ScalarField u(g, 1.0);
  CHECK(c2_diagnostic(u) == doctest::Approx(4.0).epsilon(1e-12));
}
