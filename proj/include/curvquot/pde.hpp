#pragma once

#include "curvquot/grid.hpp"
#include "curvquot/operators.hpp"
#include "curvquot/symfun.hpp"

#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

namespace curvquot {

// Invalid run-level input (bad f specification, bad mode/regime pairing,
// malformed files). The front end maps this to its config exit status.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Regime { supercritical, critical, subcritical };
const char* regime_name(Regime r);

// p == k-l+1 within 1e-12 counts as critical.
Regime classify_regime(double p, int k, int l);

struct FExprTerm {
  double coeff = 0.0;
  std::vector<int> powers;  // one exponent per ambient coordinate, n+1 of them
};

// Right-hand-side data: a constant, exp of an ambient polynomial, or a node
// sample file. Evenness is declared and verified, never assumed.
struct FSpec {
  enum class Kind { constant, expr, file };
  Kind kind = Kind::constant;
  double constant = 1.0;
  std::vector<FExprTerm> terms;
  std::string file;
  bool declared_even = false;
};

struct ProblemSpec {
  int n = 2, k = 1, l = 0;
  double p = 3.0;
  FSpec f;

  Regime regime() const { return classify_regime(p, k, l); }
  // The eigenvalue-side operator H_{n-l}/H_{n-k}; elliptic on Gamma_{n-l}.
  QuotientOperator quotient() const { return QuotientOperator{n, n - l, n - k}; }
  void validate() const;  // parameter ranges and regime-side invariants
};

ScalarField sample_f(const ProblemSpec& spec, const GridPtr& grid);

// phi_t = ((1-t) + t f^(1/q))^(-q), q = p+k-l-1. Endpoints are exact:
// t=0 gives the constant 1, t=1 gives 1/f bitwise.
ScalarField homotopy_phi(double t, const ScalarField& f, double p, int k,
                         int l);

struct ResidualReport {
  ScalarField residual;             // F(lambda(A)) - (phi u^(p-1))^(1/(k-l))
  double max_norm = 0.0;
  std::vector<double> cone_margin;  // Gamma_{n-l} margin per node
  double min_margin = 0.0;
  double min_u = 0.0, max_u = 0.0;
};

ResidualReport residual(const ProblemSpec& spec, const ScalarField& u,
                        const ScalarField& phi);

// Sparse Frechet derivative of the residual map at u. apply() is the matrix
// action; solve() factors on first use (sparse LU) and reports whether a
// diagonal shift was needed to get past a singular factorization.
class LinearOperator {
 public:
  explicit LinearOperator(Eigen::SparseMatrix<double> J);
  const Eigen::SparseMatrix<double>& matrix() const { return J_; }
  std::vector<double> apply(const std::vector<double>& h) const;
  std::vector<double> solve(const std::vector<double>& rhs) const;
  bool used_shift() const { return used_shift_; }

 private:
  Eigen::SparseMatrix<double> J_;
  mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  mutable bool used_shift_ = false;
};

LinearOperator linearize(const ProblemSpec& spec, const ScalarField& u,
                         const ScalarField& phi);

struct C0Bounds {
  bool lower_ok = false, upper_ok = false;
  double lower_slack = 0.0;  // min u^(p-(k-l+1)) - min 1/phi
  double upper_slack = 0.0;  // max 1/phi - max u^(p-(k-l+1))
  double tol = 0.0;          // C h^2
};

// min phi^-1 <= u^(p-(k-l+1)) <= max phi^-1, with slack tol = C h^2.
// Supercritical regime only.
C0Bounds c0_bounds_check(const ProblemSpec& spec, const ScalarField& u,
                         const ScalarField& phi, double C = 5.0);

// max over nodes of trace(A) = laplacian(u) + n u.
double c2_diagnostic(const ScalarField& u);

}  // namespace curvquot
