#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "curvquot/operators.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace curvquot;

namespace {
constexpr double kPi = std::numbers::pi;

ScalarField sample(const GridPtr& g, double (*fn)(double)) {
  ScalarField u(g);
  for (int i = 0; i < (g->kind == GridKind::axisymmetric ? g->M : g->Mt);
       ++i) {
    const double v = fn(g->theta[i]);
    if (g->kind == GridKind::axisymmetric) {
      u.v[i] = v;
    } else {
      for (int j = 0; j < g->Mp; ++j) u.v[g->index(i, j)] = v;
    }
  }
  return u;
}
}  // namespace

TEST_CASE("grid construction guards") {
  CHECK_THROWS_AS(make_axisymmetric_grid(1, 64), std::invalid_argument);
  CHECK_THROWS_AS(make_axisymmetric_grid(2, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_full2d_grid(16, 15), std::invalid_argument);
  CHECK_THROWS_AS(make_full2d_grid(4, 16), std::invalid_argument);
}

TEST_CASE("staggered nodes and mirrored tables") {
  const GridPtr g = make_axisymmetric_grid(2, 96);
  CHECK(g->theta[0] == doctest::Approx(0.5 * g->ht));
  for (int i = 0; i < g->M; ++i) {
    const int m = g->M - 1 - i;
    CHECK(g->sin_t[i] == g->sin_t[m]);
    CHECK(g->cos_t[i] == -g->cos_t[m]);
    CHECK(g->cot_t[i] == -g->cot_t[m]);
    CHECK(g->weight[i] == g->weight[m]);
  }
  const GridPtr go = make_axisymmetric_grid(2, 33);  // odd: middle on equator
  CHECK(go->sin_t[16] == 1.0);
  CHECK(go->cos_t[16] == 0.0);
  CHECK(go->cot_t[16] == 0.0);
}

TEST_CASE("antipodal map is an involution covering every node") {
  for (const GridPtr& g :
       {make_axisymmetric_grid(3, 48), make_full2d_grid(24, 48)}) {
    std::vector<int> seen(g->node_count(), 0);
    for (std::size_t i = 0; i < g->node_count(); ++i) {
      CHECK(g->antipode(g->antipode(i)) == i);
    }
    for (const auto& [a, b] : g->antipodal_pairs) {
      ++seen[a];
      if (b != a) ++seen[b];
      CHECK(g->antipode(a) == b);
    }
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("total measure matches the round sphere") {
  const GridPtr g2 = make_axisymmetric_grid(2, 128);
  CHECK(integrate(ScalarField(g2, 1.0)) ==
        doctest::Approx(4.0 * kPi).epsilon(1e-4));
  const GridPtr g3 = make_axisymmetric_grid(3, 128);
  CHECK(integrate(ScalarField(g3, 1.0)) ==
        doctest::Approx(2.0 * kPi * kPi).epsilon(1e-4));
  const GridPtr gf = make_full2d_grid(64, 128);
  CHECK(integrate(ScalarField(gf, 1.0)) ==
        doctest::Approx(4.0 * kPi).epsilon(3e-4));
}

TEST_CASE("quadrature of a smooth even integrand") {
  const GridPtr g = make_axisymmetric_grid(2, 256);
  ScalarField f(g);
  for (int i = 0; i < g->M; ++i) f.v[i] = g->cos_t[i] * g->cos_t[i];
  CHECK(integrate(f) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-4));
}

TEST_CASE("curvature components of exp(cos theta)") {
  const GridPtr g = make_axisymmetric_grid(2, 256);
  ScalarField u(g);
  for (int i = 0; i < g->M; ++i) u.v[i] = std::exp(g->cos_t[i]);
  const CurvatureField A = hessian_plus_metric(u);
  const ScalarField gns = gradient_norm_sq(u);
  const double tol = 8.0 * g->ht * g->ht;
  for (int i = 0; i < g->M; ++i) {
    const double c = g->cos_t[i], s = g->sin_t[i], e = std::exp(c);
    CHECK(A.a_rad[i] == doctest::Approx((1.0 - c + s * s) * e).epsilon(tol));
    CHECK(A.a_tan[i] == doctest::Approx((1.0 - c) * e).epsilon(tol));
    CHECK(std::sqrt(gns.v[i]) ==
          doctest::Approx(s * e).epsilon(tol).scale(1.0));
  }
}

TEST_CASE("hessian of a linear ambient coordinate cancels the metric term") {
  // u = cos(theta) is the restriction of z; grad^2 u + u sigma = 0 on the
  // sphere, so the discrete eigenvalues must vanish to truncation order.
  for (const GridPtr& g :
       {make_axisymmetric_grid(2, 128), make_full2d_grid(64, 128)}) {
    const ScalarField u = sample(g, [](double t) { return std::cos(t); });
    const CurvatureField A = hessian_plus_metric(u);
    const double tol = 6.0 * g->ht * g->ht;
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(std::fabs(A.trace(i)) <= tol);
      CHECK(std::fabs(A.min_eigen(i)) <= tol);
    }
  }
}

TEST_CASE("second-order convergence of the curvature operator") {
  double err[2];
  int idx = 0;
  for (int M : {64, 128}) {
    const GridPtr g = make_axisymmetric_grid(2, M);
    ScalarField u(g);
    for (int i = 0; i < g->M; ++i) u.v[i] = std::exp(g->cos_t[i]);
    const CurvatureField A = hessian_plus_metric(u);
    double worst = 0.0;
    for (int i = 0; i < g->M; ++i) {
      const double c = g->cos_t[i], s = g->sin_t[i], e = std::exp(c);
      worst = std::max(worst,
                       std::fabs(A.a_rad[i] - (1.0 - c + s * s) * e));
    }
    err[idx++] = worst;
  }
  const double ratio = err[0] / err[1];
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("full2d operator is linear and pole-consistent") {
  const GridPtr g = make_full2d_grid(32, 64);
  ScalarField u(g), v(g);
  // smooth low-mode fields through the ambient coordinates
  for (int i = 0; i < g->Mt; ++i)
    for (int j = 0; j < g->Mp; ++j) {
      const std::size_t id = g->index(i, j);
      double x[3];
      g->ambient(id, x);
      u.v[id] = 1.0 + 0.3 * x[0] + 0.2 * x[2] * x[2];
      v.v[id] = 0.5 - 0.1 * x[1] + 0.25 * x[0] * x[2];
    }
  ScalarField sum(g);
  for (std::size_t i = 0; i < sum.size(); ++i) sum.v[i] = u.v[i] + v.v[i];
  const CurvatureField Au = hessian_plus_metric(u);
  const CurvatureField Av = hessian_plus_metric(v);
  const CurvatureField As = hessian_plus_metric(sum);
  // pole-adjacent rows divide stencil round-off by sin^2(theta) ~ h^2/4,
  // so exact-linearity residuals there sit near 1e-11, not machine epsilon
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(As.a11[i] ==
          doctest::Approx(Au.a11[i] + Av.a11[i]).epsilon(1e-12));
    CHECK(As.a12[i] ==
          doctest::Approx(Au.a12[i] + Av.a12[i]).epsilon(1e-10));
    CHECK(As.a22[i] ==
          doctest::Approx(Au.a22[i] + Av.a22[i]).epsilon(1e-10));
  }
  // a rotationally homogeneous field must agree across the pole seam
  const ScalarField w = sample(g, [](double t) { return std::cos(2.0 * t); });
  const CurvatureField Aw = hessian_plus_metric(w);
  for (int j = 0; j < g->Mp; ++j) {
    const double t0 = Aw.trace(g->index(0, j));
    const double t1 = Aw.trace(g->index(0, (j + g->Mp / 2) % g->Mp));
    CHECK(t0 == doctest::Approx(t1).epsilon(1e-10));
  }
}

TEST_CASE("even projection is exact, idempotent and integral-preserving") {
  for (const GridPtr& g :
       {make_axisymmetric_grid(2, 65), make_full2d_grid(32, 64)}) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(0.5, 2.0);
    ScalarField u(g);
    for (auto& x : u.v) x = d(rng);
    const ScalarField e = even_projection(u);
    CHECK(evenness_residual(e) == 0.0);
    const ScalarField e2 = even_projection(e);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(e2.v[i] == e.v[i]);
    CHECK(integrate(e) == integrate(u));  // bitwise by pair-folded quadrature
  }
}

TEST_CASE("field csv round trip is bitwise") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "curvquot_csv_test";
  fs::create_directories(dir);
  for (const GridPtr& g :
       {make_axisymmetric_grid(2, 48), make_full2d_grid(16, 32)}) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(0.25, 4.0);
    ScalarField u(g);
    for (auto& x : u.v) x = d(rng);
    const std::string path =
        (dir / (g->kind == GridKind::axisymmetric ? "ax.csv" : "f2.csv"))
            .string();
    write_field_csv(u, path);
    const ScalarField back = read_field_csv(g, path);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(back.v[i] == u.v[i]);
  }
}

TEST_CASE("field csv rejects mismatched input") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "curvquot_csv_test";
  fs::create_directories(dir);
  const GridPtr g = make_axisymmetric_grid(2, 32);
  const GridPtr other = make_axisymmetric_grid(2, 48);
  ScalarField u(g, 1.0);
  const std::string path = (dir / "mismatch.csv").string();
  write_field_csv(u, path);
  CHECK_THROWS(read_field_csv(other, path));
  std::FILE* f = std::fopen(path.c_str(), "w");
  std::fprintf(f, "wrong,header\n1,2\n");
  std::fclose(f);
  CHECK_THROWS(read_field_csv(g, path));
  CHECK_THROWS(read_field_csv(g, (dir / "missing.csv").string()));
}
