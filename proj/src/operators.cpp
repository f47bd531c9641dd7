#include "curvquot/operators.hpp"

#include "curvquot/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace curvquot {
namespace {

void require_same_grid(const ScalarField& f) {
  if (!f.grid || f.v.size() != f.grid->node_count())
    throw std::invalid_argument("field is not bound to its grid");
}

// Neighbor access across the poles: row -1 of column j lives at row 0,
// column j + Mp/2 (the meridian continues through the pole onto the
// opposite-phi side); likewise past the last row.
inline double at2d(const SphereGrid& g, const std::vector<double>& v, int i,
                   int j) {
  const int Mp = g.Mp;
  j = ((j % Mp) + Mp) % Mp;
  if (i == -1) return v[g.index(0, (j + Mp / 2) % Mp)];
  if (i == g.Mt) return v[g.index(g.Mt - 1, (j + Mp / 2) % Mp)];
  return v[g.index(i, j)];
}

}  // namespace

void CurvatureField::eigen_tuple(std::size_t node, double* out) const {
  if (grid->kind == GridKind::axisymmetric) {
    out[0] = a_rad[node];
    for (int c = 1; c < n; ++c) out[c] = a_tan[node];
  } else {
    out[0] = l1[node];
    out[1] = l2[node];
  }
}

double CurvatureField::trace(std::size_t node) const {
  if (grid->kind == GridKind::axisymmetric)
    return a_rad[node] + (n - 1) * a_tan[node];
  return a11[node] + a22[node];
}

double CurvatureField::min_eigen(std::size_t node) const {
  if (grid->kind == GridKind::axisymmetric)
    return std::min(a_rad[node], a_tan[node]);
  return l2[node];
}

CurvatureField hessian_plus_metric(const ScalarField& u) {
  require_same_grid(u);
  const SphereGrid& g = *u.grid;
  CurvatureField A;
  A.grid = u.grid;
  A.n = g.n;

  if (g.kind == GridKind::axisymmetric) {
    const int M = g.M;
    const double h = g.ht;
    A.a_rad.resize(M);
    A.a_tan.resize(M);
    auto at = [&](int i) {
      if (i == -1) return u.v[0];       // reflected ghost below the pole
      if (i == M) return u.v[M - 1];
      return u.v[i];
    };
    for (int i = 0; i < M; ++i) {
      const double up = (at(i + 1) - at(i - 1)) / (2.0 * h);
      const double upp = (at(i + 1) - 2.0 * u.v[i] + at(i - 1)) / (h * h);
      A.a_rad[i] = upp + u.v[i];
      A.a_tan[i] = g.cot_t[i] * up + u.v[i];
    }
    return A;
  }

  const int Mt = g.Mt, Mp = g.Mp;
  const double ht = g.ht, hp = g.hp;
  const std::size_t count = g.node_count();
  A.a11.resize(count);
  A.a12.resize(count);
  A.a22.resize(count);
  A.l1.resize(count);
  A.l2.resize(count);
  for (int i = 0; i < Mt; ++i) {
    const double st = g.sin_t[i], ct = g.cot_t[i];
    for (int j = 0; j < Mp; ++j) {
      const std::size_t id = g.index(i, j);
      const double uc = u.v[id];
      const double un = at2d(g, u.v, i + 1, j), us = at2d(g, u.v, i - 1, j);
      const double ue = at2d(g, u.v, i, j + 1), uw = at2d(g, u.v, i, j - 1);
      const double ut = (un - us) / (2.0 * ht);
      const double utt = (un - 2.0 * uc + us) / (ht * ht);
      const double up = (ue - uw) / (2.0 * hp);
      const double upp = (ue - 2.0 * uc + uw) / (hp * hp);
      const double utp = (at2d(g, u.v, i + 1, j + 1) - at2d(g, u.v, i + 1, j - 1) -
                          at2d(g, u.v, i - 1, j + 1) + at2d(g, u.v, i - 1, j - 1)) /
                         (4.0 * ht * hp);
      A.a11[id] = utt + uc;
      A.a12[id] = (utp - ct * up) / st;
      A.a22[id] = upp / (st * st) + ct * ut + uc;
    }
  }
  kern::ops().sym2x2_eigs_batch(A.a11.data(), A.a12.data(), A.a22.data(),
                                count, A.l1.data(), A.l2.data());
  return A;
}

void gradient_components(const ScalarField& u, std::vector<double>& d_theta,
                         std::vector<double>& d_phi) {
  require_same_grid(u);
  const SphereGrid& g = *u.grid;
  if (g.kind == GridKind::axisymmetric) {
    const int M = g.M;
    d_theta.resize(M);
    d_phi.assign(M, 0.0);
    auto at = [&](int i) {
      if (i == -1) return u.v[0];
      if (i == M) return u.v[M - 1];
      return u.v[i];
    };
    for (int i = 0; i < M; ++i)
      d_theta[i] = (at(i + 1) - at(i - 1)) / (2.0 * g.ht);
    return;
  }
  const int Mt = g.Mt, Mp = g.Mp;
  d_theta.resize(g.node_count());
  d_phi.resize(g.node_count());
  for (int i = 0; i < Mt; ++i)
    for (int j = 0; j < Mp; ++j) {
      const std::size_t id = g.index(i, j);
      d_theta[id] =
          (at2d(g, u.v, i + 1, j) - at2d(g, u.v, i - 1, j)) / (2.0 * g.ht);
      d_phi[id] = (at2d(g, u.v, i, j + 1) - at2d(g, u.v, i, j - 1)) /
                  (2.0 * g.hp) / g.sin_t[i];
    }
}

ScalarField gradient_norm_sq(const ScalarField& u) {
  std::vector<double> dt, dp;
  gradient_components(u, dt, dp);
  ScalarField out(u.grid);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = dt[i] * dt[i] + dp[i] * dp[i];
  return out;
}

double integrate(const ScalarField& f) {
  require_same_grid(f);
  const SphereGrid& g = *f.grid;
  const std::size_t np = g.antipodal_pairs.size();
  std::vector<double> pair_sum(np), pair_w(np);
  for (std::size_t p = 0; p < np; ++p) {
    const auto [a, b] = g.antipodal_pairs[p];
    pair_sum[p] = (a == b) ? f.v[a] : f.v[a] + f.v[b];
    pair_w[p] = g.weight[a];
  }
  return kern::ops().weighted_sum(pair_sum.data(), pair_w.data(), np);
}

ScalarField even_projection(const ScalarField& u) {
  require_same_grid(u);
  ScalarField out(u.grid);
  for (const auto& [a, b] : u.grid->antipodal_pairs) {
    const double m = 0.5 * (u.v[a] + u.v[b]);
    out.v[a] = m;
    out.v[b] = m;
  }
  return out;
}

double evenness_residual(const ScalarField& u) {
  require_same_grid(u);
  double r = 0.0;
  for (const auto& [a, b] : u.grid->antipodal_pairs)
    r = std::max(r, std::fabs(u.v[a] - u.v[b]));
  return r;
}

void write_field_csv(const ScalarField& f, const std::string& path) {
  require_same_grid(f);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const SphereGrid& g = *f.grid;
  char buf[96];
  if (g.kind == GridKind::axisymmetric) {
    out << "theta,value\n";
    for (int i = 0; i < g.M; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", g.theta[i], f.v[i]);
      out << buf;
    }
  } else {
    out << "theta,phi,value\n";
    for (int i = 0; i < g.Mt; ++i)
      for (int j = 0; j < g.Mp; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.theta[i],
                      g.phi[j], f.v[g.index(i, j)]);
        out << buf;
      }
  }
}

ScalarField read_field_csv(const GridPtr& grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const bool axi = grid->kind == GridKind::axisymmetric;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty field file");
  const std::string want = axi ? "theta,value" : "theta,phi,value";
  if (line != want)
    throw std::runtime_error(path + ": expected header '" + want + "'");
  ScalarField f(grid);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= f.size())
      throw std::runtime_error(path + ": more rows than grid nodes");
    std::istringstream ss(line);
    double a = 0, b = 0, val = 0;
    char c1 = 0, c2 = 0;
    if (axi)
      ss >> a >> c1 >> val;
    else
      ss >> a >> c1 >> b >> c2 >> val;
    if (!ss || c1 != ',' || (!axi && c2 != ','))
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    const int i = axi ? static_cast<int>(row) : grid->row_of(row);
    const double want_theta = grid->theta[i];
    if (std::fabs(a - want_theta) > 1e-9)
      throw std::runtime_error(path + ": theta mismatch against grid row " +
                               std::to_string(row));
    if (!axi) {
      const double want_phi = grid->phi[grid->col_of(row)];
      if (std::fabs(b - want_phi) > 1e-9)
        throw std::runtime_error(path + ": phi mismatch against grid row " +
                                 std::to_string(row));
    }
    f.v[row++] = val;
  }
  if (row != f.size())
    throw std::runtime_error(path + ": fewer rows than grid nodes");
  return f;
}

}  // namespace curvquot
