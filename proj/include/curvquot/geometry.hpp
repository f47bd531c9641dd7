#pragma once

#include "curvquot/pde.hpp"

#include <array>
#include <string>
#include <vector>

namespace curvquot {

// The hypersurface recovered from a support function: ambient positions,
// principal curvatures (reciprocals of the eigenvalues of A), and for the
// closed 2d mesh the two pole caps.
struct SurfaceSamples {
  GridPtr grid;
  int n = 0;
  ScalarField u;
  std::vector<double> kappa;          // n rows, node-major within each row
  std::vector<double> xr, xz;         // meridian profile (axisymmetric)
  std::vector<double> x, y, z;        // ambient positions (full 2d)
  std::array<double, 3> apex_north{}, apex_south{};
};

// Position map X = u x + grad u. Demands strict convexity (all eigenvalues
// of A positive); anything else has no embedded ovaloid behind it.
SurfaceSamples embed(const ScalarField& u);

struct ConvexityReport {
  double min_eigen_A = 0.0;
  bool strictly_convex = false;
  double cone_margin = 0.0;  // Gamma_a margin, a as passed
  bool admissible = false;
};
ConvexityReport convexity_report(const ScalarField& u, int cone_a);

// Independent read-back of the solved equation on the curvature side:
// max over nodes of |H_k(kappa)/H_l(kappa) - f u^(1-p)|. Exercises the
// reciprocal-eigenvalue duality rather than the solver's own residual.
double verify_curvature_equation(const ProblemSpec& spec,
                                 const SurfaceSamples& s,
                                 const ScalarField& f);

// Convexity of the data combination g = f^(1/(p+k-l-1)): margin is the
// global minimum eigenvalue of grad^2 g + g sigma, holds means >= -1e-8.
struct ConditionMargin {
  double margin = 0.0;
  bool holds = false;
};
ConditionMargin check_f_convexity_condition(const ScalarField& f, double p,
                                            int k, int l);

// integral of u H_m(lambda(A)) minus integral of H_{m+1}(lambda(A)), both
// over the round measure; zero in the continuum for 0 <= m < n.
struct MinkowskiGap {
  double lhs = 0.0, rhs = 0.0, rel_gap = 0.0;
};
MinkowskiGap minkowski_identity_check(const ScalarField& u, int m);

struct Diagnostics {
  double min_eigen_A = 0.0;
  double noncollapse_ratio = 0.0;  // max u / min u
  double max_grad_log_u = 0.0;
  double weighted_beta = 0.0;
  double weighted_N = 0.0;         // sup (|grad u|^2+u^2)/u^beta / (max u)^(2-beta)
  bool weighted_valid = false;     // defined in the subcritical regime only
};

// beta must sit in (0, 2(p-1)/(k-l)) when the regime is subcritical; other
// regimes skip the weighted quantity instead of faking one.
Diagnostics estimate_diagnostics(const ProblemSpec& spec,
                                 const ScalarField& u, double beta);

// Axisymmetric grids write a meridian profile CSV; full 2d grids write a
// closed, watertight OBJ mesh with pole fans.
void export_surface(const SurfaceSamples& s, const std::string& path);

}  // namespace curvquot
