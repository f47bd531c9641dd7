#include "curvquot/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace curvquot {
namespace {

constexpr double kPi = std::numbers::pi;

// |S^d| = 2 pi^((d+1)/2) / Gamma((d+1)/2)
double sphere_measure(int d) {
  return 2.0 * std::pow(kPi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

// Fills the mirrored theta tables shared by both grid kinds: rows 0..half-1
// computed directly, the rest reflected so sin is even and cos/cot odd about
// the equator down to the bit.
void build_theta_tables(SphereGrid& g, int rows, double h) {
  g.theta.resize(rows);
  g.sin_t.resize(rows);
  g.cos_t.resize(rows);
  g.cot_t.resize(rows);
  for (int i = 0; i < rows; ++i) g.theta[i] = (i + 0.5) * h;
  const int half = rows / 2;
  for (int i = 0; i < half; ++i) {
    g.sin_t[i] = std::sin(g.theta[i]);
    g.cos_t[i] = std::cos(g.theta[i]);
    g.cot_t[i] = g.cos_t[i] / g.sin_t[i];
    g.sin_t[rows - 1 - i] = g.sin_t[i];
    g.cos_t[rows - 1 - i] = -g.cos_t[i];
    g.cot_t[rows - 1 - i] = -g.cot_t[i];
  }
  if (rows % 2 == 1) {  // equator row: cos and cot vanish identically
    g.sin_t[half] = 1.0;
    g.cos_t[half] = 0.0;
    g.cot_t[half] = 0.0;
  }
}

}  // namespace

std::size_t SphereGrid::antipode(std::size_t idx) const {
  if (kind == GridKind::axisymmetric)
    return static_cast<std::size_t>(M - 1) - idx;
  const int i = row_of(idx), j = col_of(idx);
  return index(Mt - 1 - i, (j + Mp / 2) % Mp);
}

void SphereGrid::ambient(std::size_t idx, double* x) const {
  if (kind == GridKind::axisymmetric) {
    x[0] = sin_t[idx];
    for (int c = 1; c < n; ++c) x[c] = 0.0;
    x[n] = cos_t[idx];
    return;
  }
  const int i = row_of(idx), j = col_of(idx);
  x[0] = sin_t[i] * cos_p[j];
  x[1] = sin_t[i] * sin_p[j];
  x[2] = cos_t[i];
}

GridPtr make_axisymmetric_grid(int n, int M) {
  if (n < 2) throw std::invalid_argument("sphere dimension must be >= 2");
  if (M < 8) throw std::invalid_argument("grid too coarse: need M >= 8");
  auto g = std::make_shared<SphereGrid>();
  g->kind = GridKind::axisymmetric;
  g->n = n;
  g->M = M;
  g->ht = kPi / M;
  build_theta_tables(*g, M, g->ht);

  // Weight of the latitude sphere through theta_i: |S^(n-1)| sin^(n-1) theta
  // times the midpoint-rule cell h. Mirrored, not recomputed, on the far side.
  const double ring = sphere_measure(n - 1);
  g->weight.resize(M);
  for (int i = 0; i < (M + 1) / 2; ++i) {
    const double w = ring * std::pow(g->sin_t[i], n - 1) * g->ht;
    g->weight[i] = w;
    g->weight[M - 1 - i] = w;
  }
  g->total_measure = sphere_measure(n);

  for (int i = 0; i < M / 2; ++i)
    g->antipodal_pairs.push_back({static_cast<std::size_t>(i),
                                  static_cast<std::size_t>(M - 1 - i)});
  if (M % 2 == 1) {
    const std::size_t mid = M / 2;
    g->antipodal_pairs.push_back({mid, mid});
  }
  return g;
}

GridPtr make_full2d_grid(int Mt, int Mp) {
  if (Mt < 8 || Mp < 8)
    throw std::invalid_argument("grid too coarse: need at least 8 nodes per circle");
  if (Mp % 2 != 0)
    throw std::invalid_argument("phi column count must be even");
  auto g = std::make_shared<SphereGrid>();
  g->kind = GridKind::full2d;
  g->n = 2;
  g->Mt = Mt;
  g->Mp = Mp;
  g->ht = kPi / Mt;
  g->hp = 2.0 * kPi / Mp;
  build_theta_tables(*g, Mt, g->ht);

  g->phi.resize(Mp);
  g->sin_p.resize(Mp);
  g->cos_p.resize(Mp);
  for (int j = 0; j < Mp; ++j) g->phi[j] = j * g->hp;
  for (int j = 0; j < Mp / 2; ++j) {
    g->sin_p[j] = std::sin(g->phi[j]);
    g->cos_p[j] = std::cos(g->phi[j]);
    g->sin_p[j + Mp / 2] = -g->sin_p[j];
    g->cos_p[j + Mp / 2] = -g->cos_p[j];
  }

  g->weight.resize(g->node_count());
  const double cell = g->ht * g->hp;
  for (int i = 0; i < (Mt + 1) / 2; ++i) {
    const double w = g->sin_t[i] * cell;
    for (int j = 0; j < Mp; ++j) {
      g->weight[g->index(i, j)] = w;
      g->weight[g->index(Mt - 1 - i, j)] = w;
    }
  }
  g->total_measure = sphere_measure(2);

  for (int i = 0; i < Mt / 2; ++i)
    for (int j = 0; j < Mp; ++j) {
      const std::size_t a = g->index(i, j);
      g->antipodal_pairs.push_back({a, g->antipode(a)});
    }
  if (Mt % 2 == 1)
    for (int j = 0; j < Mp / 2; ++j) {
      const std::size_t a = g->index(Mt / 2, j);
      g->antipodal_pairs.push_back({a, g->antipode(a)});
    }
  return g;
}

}  // namespace curvquot
