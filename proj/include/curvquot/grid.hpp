#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

namespace curvquot {

enum class GridKind { axisymmetric, full2d };

// Staggered sphere discretizations. Axisymmetric grids sample one meridian of
// S^n at theta_i = (i - 1/2) pi/M; full2d grids (n = 2 only) sample a
// latitude-longitude lattice with the same staggering in theta and periodic
// phi. Poles carry no unknowns.
//
// The trigonometric tables are built for the first half of the theta range
// and mirrored (sin copied, cos/cot negated) so that the antipodal map is an
// exact symmetry of every table, not just an approximate one. Quadrature
// weights are mirrored the same way, which is what makes integrate commute
// with even_projection bitwise.
struct SphereGrid {
  GridKind kind;
  int n;        // sphere dimension
  int M = 0;    // axisymmetric: meridian node count
  int Mt = 0;   // full2d: theta rows
  int Mp = 0;   // full2d: phi columns (even)
  double ht = 0.0, hp = 0.0;

  std::vector<double> theta;  // per theta row
  std::vector<double> sin_t, cos_t, cot_t;
  std::vector<double> phi;    // full2d columns
  std::vector<double> sin_p, cos_p;  // mirrored: col j+Mp/2 is the negation

  std::vector<double> weight;  // per node, antipodally symmetric
  double total_measure = 0.0;  // |S^n|

  // Each antipodal orbit listed once; first == second for self-paired nodes.
  std::vector<std::pair<std::size_t, std::size_t>> antipodal_pairs;

  std::size_t node_count() const {
    return kind == GridKind::axisymmetric
               ? static_cast<std::size_t>(M)
               : static_cast<std::size_t>(Mt) * static_cast<std::size_t>(Mp);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * Mp + static_cast<std::size_t>(j);
  }
  int row_of(std::size_t idx) const { return static_cast<int>(idx) / Mp; }
  int col_of(std::size_t idx) const { return static_cast<int>(idx) % Mp; }
  std::size_t antipode(std::size_t idx) const;

  // Ambient coordinates of node idx: axisymmetric grids report the meridian
  // representative (sin theta, 0, ..., cos theta); full2d the full xyz.
  void ambient(std::size_t idx, double* x) const;  // n+1 entries
};

using GridPtr = std::shared_ptr<const SphereGrid>;

// Both constructors reject grids with fewer than 8 nodes per circle.
GridPtr make_axisymmetric_grid(int n, int M);
GridPtr make_full2d_grid(int Mt, int Mp);

struct ScalarField {
  GridPtr grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0)
      : grid(std::move(g)), v(grid->node_count(), fill) {}
  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
};

}  // namespace curvquot
