#include "curvquot/symfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace curvquot {

namespace {

std::string admissibility_message(int cone, double margin, int node) {
  std::string msg = "tuple outside Gamma_" + std::to_string(cone) +
                    " (margin " + std::to_string(margin) + ")";
  if (node >= 0) msg += " at node " + std::to_string(node);
  return msg;
}

void check_operator(const QuotientOperator& q, std::size_t nvals) {
  if (q.n < 1 || q.b < 0 || q.a <= q.b || q.a > q.n)
    throw std::invalid_argument("quotient operator needs 0 <= b < a <= n");
  if (static_cast<std::size_t>(q.n) != nvals)
    throw std::invalid_argument("tuple length does not match operator n");
}

void require_admissible(const QuotientOperator& q,
                        std::span<const double> lam) {
  const ConeQuery c = cone_test(lam, q.a);
  if (!c.member) throw AdmissibilityError(q.a, c.margin);
}

// sigma_{m}(lam | skip) for m = 0..kmax, entry `skip` excluded.
void sigma_all_deleted(std::span<const double> lam, int kmax, int skip,
                       double* e) {
  e[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) e[k] = 0.0;
  int seen = 0;
  for (int j = 0; j < static_cast<int>(lam.size()); ++j) {
    if (j == skip) continue;
    const double x = lam[j];
    ++seen;
    for (int k = std::min(seen, kmax); k >= 1; --k)
      e[k] = std::fma(x, e[k - 1], e[k]);
  }
}

}  // namespace

AdmissibilityError::AdmissibilityError(int cone_, double margin_, int node_)
    : std::runtime_error(admissibility_message(cone_, margin_, node_)),
      cone(cone_),
      margin(margin_),
      node(node_) {}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<double> sigma_all(std::span<const double> lam, int kmax) {
  if (kmax < 0) throw std::invalid_argument("sigma order must be nonnegative");
  std::vector<double> e(kmax + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t j = 0; j < lam.size(); ++j) {
    const double x = lam[j];
    const int top = std::min<int>(static_cast<int>(j) + 1, kmax);
    for (int k = top; k >= 1; --k) e[k] = std::fma(x, e[k - 1], e[k]);
  }
  return e;
}

double sigma(std::span<const double> lam, int k) {
  if (k < 0) throw std::invalid_argument("sigma order must be nonnegative");
  if (k == 0) return 1.0;
  if (k > static_cast<int>(lam.size())) return 0.0;
  return sigma_all(lam, k)[k];
}

double h_normalized(std::span<const double> lam, int k) {
  if (k < 0) throw std::invalid_argument("order must be nonnegative");
  const int n = static_cast<int>(lam.size());
  if (k > n) return 0.0;
  if (k == 0) return 1.0;
  return sigma(lam, k) / binomial(n, k);
}

double sigma_deleted(std::span<const double> lam, int k, int i) {
  if (i < 0 || i >= static_cast<int>(lam.size()))
    throw std::out_of_range("deleted index out of range");
  if (k < 0) throw std::invalid_argument("sigma order must be nonnegative");
  if (k == 0) return 1.0;
  if (k > static_cast<int>(lam.size())) return 0.0;
  std::vector<double> e(k + 1);
  sigma_all_deleted(lam, k, i, e.data());
  return e[k];
}

ConeQuery cone_test(std::span<const double> lam, int k) {
  const int n = static_cast<int>(lam.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("cone index must satisfy 1 <= k <= n");
  const std::vector<double> e = sigma_all(lam, k);
  double margin = e[1];
  for (int i = 2; i <= k; ++i) margin = std::min(margin, e[i]);
  return ConeQuery{k, margin, margin > 0.0};
}

double fbar_from_sigma(double sig_a, double sig_b, int n, int a, int b) {
  return (sig_a / binomial(n, a)) / (sig_b / binomial(n, b));
}

double root_of_degree(double fbar, int d) {
  if (d == 1) return fbar;
  if (d == 2) return std::sqrt(fbar);
  return std::pow(fbar, 1.0 / d);
}

QuotientValue quotient_value(const QuotientOperator& q,
                             std::span<const double> lam) {
  check_operator(q, lam.size());
  require_admissible(q, lam);
  const std::vector<double> e = sigma_all(lam, q.a);
  const double sb = q.b == 0 ? 1.0 : e[q.b];
  const double fbar = fbar_from_sigma(e[q.a], sb, q.n, q.a, q.b);
  return QuotientValue{fbar, root_of_degree(fbar, q.degree_root())};
}

void quotient_gradient_inplace(const QuotientOperator& q,
                               std::span<const double> lam, double* out) {
  check_operator(q, lam.size());
  require_admissible(q, lam);
  const std::vector<double> e = sigma_all(lam, q.a);
  const double ca = binomial(q.n, q.a);
  const double cb = binomial(q.n, q.b);
  const double ha = e[q.a] / ca;
  const double hb = (q.b == 0 ? 1.0 : e[q.b]) / cb;
  const double fbar = ha / hb;
  const int d = q.degree_root();
  const double chain =
      d == 1 ? 1.0 : root_of_degree(fbar, d) / (d * fbar);  // F'(fbar)
  std::vector<double> del(q.a);
  for (int i = 0; i < q.n; ++i) {
    sigma_all_deleted(lam, q.a - 1, i, del.data());
    const double dha = del[q.a - 1] / ca;
    const double dhb = q.b == 0 ? 0.0 : del[q.b - 1] / cb;
    const double dfbar = (dha * hb - ha * dhb) / (hb * hb);
    out[i] = chain * dfbar;
  }
}

std::vector<double> quotient_gradient(const QuotientOperator& q,
                                      std::span<const double> lam) {
  std::vector<double> g(lam.size());
  quotient_gradient_inplace(q, lam, g.data());
  return g;
}

QuotientValue quotient_value_n2(const QuotientOperator& q, double l1,
                                double l2) {
  // Caller guarantees admissibility; used inside per-node loops where the
  // margin has already been screened in batch.
  if (q.a == 1) {  // H_1
    const double f = 0.5 * (l1 + l2);
    return QuotientValue{f, f};
  }
  if (q.b == 0) {  // H_2^(1/2)
    const double fbar = l1 * l2;
    return QuotientValue{fbar, std::sqrt(fbar)};
  }
  const double fbar = 2.0 * (l1 * l2) / (l1 + l2);  // H_2/H_1
  return QuotientValue{fbar, fbar};
}

void quotient_gradient_n2(const QuotientOperator& q, double l1, double l2,
                          double& g1, double& g2) {
  if (q.a == 1) {
    g1 = g2 = 0.5;
    return;
  }
  if (q.b == 0) {
    const double f = std::sqrt(l1 * l2);
    g1 = l2 / (2.0 * f);
    g2 = l1 / (2.0 * f);
    return;
  }
  const double s = l1 + l2;
  g1 = 2.0 * (l2 * l2) / (s * s);
  g2 = 2.0 * (l1 * l1) / (s * s);
}

MatrixDerivative matrix_value_and_derivative(const QuotientOperator& q,
                                             const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw std::invalid_argument("matrix must be square");
  check_operator(q, static_cast<std::size_t>(n));
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("non-symmetric input rejected");

  if (n == 2) {
    const double m = 0.5 * (A(0, 0) + A(1, 1));
    const double d = 0.5 * (A(0, 0) - A(1, 1));
    const double r = std::sqrt(std::fma(d, d, A(0, 1) * A(1, 0)));
    const double l1 = m + r, l2 = m - r;
    const double lam[2] = {l1, l2};
    const ConeQuery c = cone_test(lam, q.a);
    if (!c.member) throw AdmissibilityError(q.a, c.margin);
    const QuotientValue v = quotient_value(q, lam);
    double g[2];
    quotient_gradient_inplace(q, lam, g);
    Eigen::MatrixXd fij(2, 2);
    if (std::fabs(l1 - l2) < 1e-9 * (1.0 + std::fabs(l1) + std::fabs(l2))) {
      // Coincident pair: the interpolant degenerates to its mean value.
      fij = 0.5 * (g[0] + g[1]) * Eigen::MatrixXd::Identity(2, 2);
    } else {
      // Newton-form interpolant through (l1,g1),(l2,g2) evaluated at A.
      const double slope = (g[0] - g[1]) / (l1 - l2);
      fij = g[1] * Eigen::MatrixXd::Identity(2, 2) +
            slope * (A - l2 * Eigen::MatrixXd::Identity(2, 2));
    }
    return MatrixDerivative{v.f, fij};
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues();
  std::span<const double> ls(lam.data(), static_cast<std::size_t>(n));
  const ConeQuery c = cone_test(ls, q.a);
  if (!c.member) throw AdmissibilityError(q.a, c.margin);
  const QuotientValue v = quotient_value(q, ls);
  Eigen::VectorXd g(n);
  quotient_gradient_inplace(q, ls, g.data());
  const Eigen::MatrixXd fij =
      es.eigenvectors() * g.asDiagonal() * es.eigenvectors().transpose();
  return MatrixDerivative{v.f, fij};
}

NewtonMaclaurinResult newton_maclaurin_check(std::span<const double> lam,
                                             int k, int l, int r, int s,
                                             double tol) {
  if (!(k > l && l >= 0 && r > s && s >= 0 && k >= r && l >= s))
    throw std::invalid_argument(
        "newton_maclaurin_check needs k > l >= 0, r > s >= 0, k >= r, l >= s");
  const ConeQuery c = cone_test(lam, k);
  if (!c.member) throw AdmissibilityError(k, c.margin);
  const double lhs =
      root_of_degree(h_normalized(lam, k) / h_normalized(lam, l), k - l);
  const double rhs =
      root_of_degree(h_normalized(lam, r) / h_normalized(lam, s), r - s);
  return NewtonMaclaurinResult{lhs, rhs, lhs <= rhs + tol};
}

}  // namespace curvquot
