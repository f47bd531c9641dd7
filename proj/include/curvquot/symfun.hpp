#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

namespace curvquot {

// Thrown when an eigenvalue tuple leaves the cone the operator is elliptic
// on. Carries the offending margin so callers can report how badly.
class AdmissibilityError : public std::runtime_error {
 public:
  AdmissibilityError(int cone, double margin, int node = -1);
  int cone;       // Gamma_k index of the violated cone
  double margin;  // min sigma_1..sigma_cone at the violation
  int node;       // grid node if known, else -1
};

struct ConeQuery {
  int k;
  double margin;  // min over 1 <= i <= k of sigma_i (raw, not normalized)
  bool member;    // margin > 0
};

// The quotient H_a/H_b with 0 <= b < a <= n. The curvature equation uses
// a = n-l, b = n-k, so the root degree a-b equals k-l.
struct QuotientOperator {
  int n = 0, a = 0, b = 0;
  int degree_root() const { return a - b; }
};

struct QuotientValue {
  double fbar;  // H_a/H_b
  double f;     // fbar^(1/(a-b)), homogeneous of degree one
};

struct MatrixDerivative {
  double f;
  Eigen::MatrixXd fij;  // dF/dA_ij, symmetric
};

struct NewtonMaclaurinResult {
  double lhs, rhs;
  bool holds;
};

double binomial(int n, int k);

// sigma_0..sigma_kmax of the tuple, by the descending-index product
// recurrence. sigma_0 = 1; sigma_k = 0 for k > tuple length.
std::vector<double> sigma_all(std::span<const double> lam, int kmax);
double sigma(std::span<const double> lam, int k);

// sigma_k / C(n,k); zero for k > n.
double h_normalized(std::span<const double> lam, int k);

// sigma_k of the tuple with entry i (zero-based) replaced by 0.
double sigma_deleted(std::span<const double> lam, int k, int i);

// Membership in the Gamma_k cone: all of sigma_1..sigma_k positive.
ConeQuery cone_test(std::span<const double> lam, int k);

// Requires lam in Gamma_a (throws AdmissibilityError otherwise).
QuotientValue quotient_value(const QuotientOperator& q,
                             std::span<const double> lam);

// dF/dlambda_i in the input ordering; all components positive on Gamma_a.
std::vector<double> quotient_gradient(const QuotientOperator& q,
                                      std::span<const double> lam);
// Allocation-free form; out must hold lam.size() entries.
void quotient_gradient_inplace(const QuotientOperator& q,
                               std::span<const double> lam, double* out);

// n=2 closed forms for the hot loops: value/gradient straight from the
// eigenvalue pair, no temporaries.
QuotientValue quotient_value_n2(const QuotientOperator& q, double l1,
                                double l2);
void quotient_gradient_n2(const QuotientOperator& q, double l1, double l2,
                          double& g1, double& g2);

// F(A) and dF/dA_ij for symmetric A with lambda(A) in Gamma_a. General n goes
// through an eigendecomposition; n=2 evaluates the interpolating divided
// difference through (lambda_i, g_i) directly, switching to the coincident
// limit below |l1-l2| < 1e-9*(1+|l1|+|l2|).
MatrixDerivative matrix_value_and_derivative(const QuotientOperator& q,
                                             const Eigen::MatrixXd& A);

// lhs = (H_k/H_l)^(1/(k-l)), rhs = (H_r/H_s)^(1/(r-s)), holds = lhs <= rhs
// up to tol. Requires lam in Gamma_k, k > l >= 0, r > s >= 0, k >= r, l >= s.
NewtonMaclaurinResult newton_maclaurin_check(std::span<const double> lam,
                                             int k, int l, int r, int s,
                                             double tol = 1e-12);

// Helpers for batch pipelines that already hold sigma rows.
double fbar_from_sigma(double sig_a, double sig_b, int n, int a, int b);
double root_of_degree(double fbar, int d);

}  // namespace curvquot
