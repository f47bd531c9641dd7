#pragma once

#include "curvquot/grid.hpp"

#include <string>
#include <vector>

namespace curvquot {

// A = hessian(u) + u * metric, per node, in the local orthonormal frame.
// Axisymmetric grids carry the two distinct eigenvalues directly (radial with
// multiplicity 1, tangential with multiplicity n-1); full2d grids carry the
// 2x2 frame components and the eigenvalue pair derived from them.
struct CurvatureField {
  GridPtr grid;
  int n = 0;
  std::vector<double> a_rad, a_tan;       // axisymmetric
  std::vector<double> a11, a12, a22;      // full2d frame components
  std::vector<double> l1, l2;             // full2d eigenvalues, descending

  // Writes the n eigenvalues of A at the node into out.
  void eigen_tuple(std::size_t node, double* out) const;
  double trace(std::size_t node) const;
  double min_eigen(std::size_t node) const;
};

CurvatureField hessian_plus_metric(const ScalarField& u);

// |grad u|^2 by centered first differences in the orthonormal frame.
ScalarField gradient_norm_sq(const ScalarField& u);

// First-difference components, exposed for the embedding: axisymmetric fills
// d_theta only; full2d fills both (d_phi already divided by sin theta).
void gradient_components(const ScalarField& u, std::vector<double>& d_theta,
                         std::vector<double>& d_phi);

// Quadrature sum, folded over antipodal pairs so that integrating an
// even-projected field reproduces the original integral bitwise.
double integrate(const ScalarField& g);

// Antipodal average; idempotent, and exactly symmetric on output.
ScalarField even_projection(const ScalarField& u);
double evenness_residual(const ScalarField& u);

// CSV exchange format: header `theta,value` or `theta,phi,value`.
void write_field_csv(const ScalarField& f, const std::string& path);
ScalarField read_field_csv(const GridPtr& grid, const std::string& path);

}  // namespace curvquot
