#pragma once

#include "curvquot/pde.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace curvquot {

struct NewtonConfig {
  int max_iterations = 50;
  double tolerance = 1e-10;       // max-norm of the rooted residual
  double backtrack_factor = 0.5;
  double min_step = 1.0 / (1 << 20);
  bool project_even = false;      // fold each accepted iterate to its even part
};

// One accepted continuation stage (or renormalization stage in eigenvalue
// runs, where the first column carries epsilon instead of t).
struct TraceRecord {
  double t = 0.0;
  int steps = 0;
  double residual = 0.0;
  double min_margin = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
};
using ContinuationTrace = std::vector<TraceRecord>;

// Failure with forensics: whatever trace accumulated plus the last iterate
// that was still positive and inside the cone.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, ContinuationTrace trace,
             ScalarField last)
      : std::runtime_error(what),
        trace(std::move(trace)),
        last_admissible(std::move(last)) {}
  ContinuationTrace trace;
  ScalarField last_admissible;
};

struct NewtonResult {
  ScalarField u;
  bool converged = false;
  int steps = 0;
  double final_residual = 0.0;
  double min_margin = 0.0;
  double min_u = 0.0, max_u = 0.0;
  std::vector<double> residual_history;  // entry value, then one per step
  std::string failure;                   // empty when converged
};

// Smallest residual max-norm the grid can certify. Stencil round-off is
// divided by h^2 (and by sin^2 of the pole-adjacent colatitude on the full
// sphere), so residuals below a few times this value are rounding jitter
// and no amount of iteration reduces them.
double residual_floor(const SphereGrid& grid);

// Damped Newton on F(lambda(A_u)) = (phi u^(p-1))^(1/(k-l)). A step is
// accepted only if the residual norm strictly drops while u stays positive
// and the eigenvalues stay in the cone; otherwise the step is halved down to
// min_step. Convergence tests the residual against the configured tolerance
// or the grid's residual_floor, whichever is larger. Never throws on
// ordinary failure; inspect .converged/.failure.
NewtonResult try_newton(const ProblemSpec& spec, const ScalarField& u0,
                        const ScalarField& phi, const NewtonConfig& cfg);

// Same, but a failure is an exception carrying the trace so far.
ScalarField newton_solve(const ProblemSpec& spec, const ScalarField& u0,
                         const ScalarField& phi, const NewtonConfig& cfg);

struct ContinuationResult {
  ScalarField u;
  ContinuationTrace trace;
};

// Homotopy phi_t from the constant-1 problem (solved exactly by u = 1) to
// phi_1 = 1/f. Tries the t=1 problem directly first, so easy data produces a
// one-row trace; otherwise marches with an adaptive step starting at 0.1,
// halving on failure (floor 1e-4) and growing 1.5x after three straight
// successes. Supercritical regime.
ContinuationResult continuation_solve(const ProblemSpec& spec,
                                      const ScalarField& f,
                                      const NewtonConfig& cfg);

// Subcritical counterpart: demands even data and keeps every iterate exactly
// even, which is what rules out the translating directions.
ContinuationResult subcritical_solve(const ProblemSpec& spec,
                                     const ScalarField& f,
                                     const NewtonConfig& cfg);

struct EigenResult {
  ScalarField u_tilde;               // normalized so min = 1 exactly
  double tau = 0.0;                  // headline eigenvalue (extrapolated)
  std::vector<double> epsilon_sequence;
  std::vector<double> tau_sequence;  // per-stage tau, last is tau_J
  bool extrapolated = false;
  bool tau_monotone = true;          // false when stage values wander
  double residual_check = 0.0;       // vs the stage-J equation, enforced
  double exact_form_residual = 0.0;  // vs the eps=0 equation, informational
  ContinuationTrace trace;           // stage rows, t column holds epsilon
};

// Critical exponent p = k-l+1: solve the eigenvalue problem
// H_{n-l}/H_{n-k} = tau u^(k-l)/f by a vanishing-viscosity ladder. Stage j
// solves the supercritical problem with exponent shifted by eps_j = 2^-(j+1)
// and data rescaled by the running eigenvalue estimate, which keeps the
// iterates O(1) even though the unscaled solutions blow up like tau^(1/eps).
// tau_j = a_j (min w_j)^(eps_j) converges linearly in eps; the headline value
// is the two-point Richardson extrapolate.
EigenResult eigen_solve(const ProblemSpec& spec, const ScalarField& f,
                        const NewtonConfig& cfg);

struct UniquenessReport {
  int trials = 0;
  int converged = 0;
  // max-norm spread across everything that converged, baseline included
  double max_pairwise_distance = 0.0;
  ScalarField baseline;
};

// Solve once by continuation, then rerun plain Newton from seeded start
// guesses: log-uniform constants bracketing the solution and smooth low-mode
// perturbations of it (amplitude halved until the guess is admissible).
// Distances are only measured across runs that converged.
UniquenessReport uniqueness_probe(const ProblemSpec& spec,
                                  const ScalarField& f,
                                  const NewtonConfig& cfg, int trials,
                                  std::uint64_t seed);

}  // namespace curvquot
