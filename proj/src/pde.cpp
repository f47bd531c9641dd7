#include "curvquot/pde.hpp"

#include "curvquot/kernels.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace curvquot {
namespace {

constexpr double kCriticalWindow = 1e-12;
constexpr double kEvenTol = 1e-10;

// (phi u^(p-1))^(1/(k-l))
inline double psi_value(double phi, double u, double p, int d) {
  const double raw = phi * std::pow(u, p - 1.0);
  return d == 1 ? raw : std::pow(raw, 1.0 / d);
}

// d/du of the above
inline double psi_derivative(double phi, double u, double p, int d) {
  const double e = (p - 1.0) / d;
  return e * std::pow(phi, 1.0 / d) * std::pow(u, e - 1.0);
}

void require_positive_u(const ScalarField& u) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u.v[i] > 0.0))
      throw std::domain_error("nonpositive u at node " + std::to_string(i));
}

// Eigenvalue rows (struct-of-arrays) and Gamma_{n-l} margins for every node.
struct NodeTuples {
  std::vector<double> lam;     // n rows by node count
  std::vector<double> sig;     // n rows: sigma_1..sigma_n
  std::vector<double> margin;  // per node
};

NodeTuples node_tuples(const ProblemSpec& spec, const CurvatureField& A) {
  const std::size_t count = A.grid->node_count();
  const int n = spec.n;
  NodeTuples t;
  t.lam.resize(static_cast<std::size_t>(n) * count);
  if (A.grid->kind == GridKind::axisymmetric) {
    for (std::size_t i = 0; i < count; ++i) t.lam[i] = A.a_rad[i];
    for (int r = 1; r < n; ++r)
      for (std::size_t i = 0; i < count; ++i)
        t.lam[r * count + i] = A.a_tan[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) t.lam[i] = A.l1[i];
    for (std::size_t i = 0; i < count; ++i) t.lam[count + i] = A.l2[i];
  }
  t.sig.resize(static_cast<std::size_t>(n) * count);
  kern::ops().sigma_batch(t.lam.data(), n, count, t.sig.data());
  t.margin.resize(count);
  kern::ops().cone_margin_batch(t.sig.data(), n, spec.quotient().a, count,
                                t.margin.data());
  return t;
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::supercritical: return "supercritical";
    case Regime::critical: return "critical";
    default: return "subcritical";
  }
}

Regime classify_regime(double p, int k, int l) {
  const double crit = k - l + 1;
  if (std::fabs(p - crit) < kCriticalWindow) return Regime::critical;
  return p > crit ? Regime::supercritical : Regime::subcritical;
}

void ProblemSpec::validate() const {
  if (n < 2) throw ConfigError("need sphere dimension n >= 2");
  if (!(0 <= l && l < k && k <= n))
    throw ConfigError("need 0 <= l < k <= n");
  if (k == n)
    std::cerr << "warning: k = n pushes the quotient to H_n/H_0;"
              << " proceeding outside the k < n theory\n";
  if (!(p > 1.0)) throw ConfigError("need exponent p > 1");
}

ScalarField sample_f(const ProblemSpec& spec, const GridPtr& grid) {
  ScalarField f(grid);
  switch (spec.f.kind) {
    case FSpec::Kind::constant:
      if (!(spec.f.constant > 0.0))
        throw ConfigError("constant f must be positive");
      for (auto& x : f.v) x = spec.f.constant;
      break;
    case FSpec::Kind::expr: {
      const int dim = spec.n + 1;
      for (const auto& term : spec.f.terms) {
        if (static_cast<int>(term.powers.size()) != dim)
          throw ConfigError("f expression term needs one exponent per ambient "
                            "coordinate (" + std::to_string(dim) + ")");
        for (int c = 0; c < dim; ++c) {
          if (term.powers[c] < 0)
            throw ConfigError("f expression exponents must be nonnegative");
          if (grid->kind == GridKind::axisymmetric && c < spec.n &&
              term.powers[c] != 0)
            throw ConfigError(
                "axisymmetric grids only represent f built from the polar "
                "coordinate (the last ambient one)");
        }
      }
      std::vector<double> x(dim);
      for (std::size_t id = 0; id < f.size(); ++id) {
        grid->ambient(id, x.data());
        double P = 0.0;
        for (const auto& term : spec.f.terms) {
          double m = term.coeff;
          for (int c = 0; c < dim; ++c)
            for (int e = 0; e < term.powers[c]; ++e) m *= x[c];
          P += m;
        }
        f.v[id] = std::exp(P);
      }
      break;
    }
    case FSpec::Kind::file:
      f = read_field_csv(grid, spec.f.file);
      break;
  }
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!(f.v[i] > 0.0) || !std::isfinite(f.v[i]))
      throw ConfigError("f must be positive everywhere; offending node " +
                        std::to_string(i));
  if (spec.f.declared_even || spec.regime() == Regime::subcritical) {
    const double r = evenness_residual(f);
    if (r > kEvenTol)
      throw ConfigError("f declared even but evenness residual is " +
                        std::to_string(r));
  }
  return f;
}

ScalarField homotopy_phi(double t, const ScalarField& f, double p, int k,
                         int l) {
  const double q = p + k - l - 1;
  if (!(q > 0.0)) throw std::invalid_argument("need p + k - l - 1 > 0");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("need t in [0,1]");
  for (double x : f.v)
    if (!(x > 0.0)) throw std::domain_error("nonpositive f rejected");
  ScalarField phi(f.grid);
  if (t == 0.0) {
    for (auto& x : phi.v) x = 1.0;
  } else if (t == 1.0) {
    for (std::size_t i = 0; i < f.size(); ++i) phi.v[i] = 1.0 / f.v[i];
  } else {
    for (std::size_t i = 0; i < f.size(); ++i)
      phi.v[i] =
          std::pow((1.0 - t) + t * std::pow(f.v[i], 1.0 / q), -q);
  }
  return phi;
}

ResidualReport residual(const ProblemSpec& spec, const ScalarField& u,
                        const ScalarField& phi) {
  require_positive_u(u);
  const CurvatureField A = hessian_plus_metric(u);
  const NodeTuples t = node_tuples(spec, A);
  const std::size_t count = u.size();
  const QuotientOperator q = spec.quotient();
  const int d = q.degree_root();

  ResidualReport rep;
  rep.residual = ScalarField(u.grid);
  rep.cone_margin = t.margin;
  rep.min_margin = kern::ops().reduce_min(t.margin.data(), count);
  rep.min_u = kern::ops().reduce_min(u.data(), count);
  rep.max_u = kern::ops().reduce_max(u.data(), count);

  const double* sig_a = &t.sig[(q.a - 1) * count];
  const double* sig_b = q.b == 0 ? nullptr : &t.sig[(q.b - 1) * count];
  bool poisoned = false;
  for (std::size_t i = 0; i < count; ++i) {
    if (t.margin[i] > 0.0) {
      const double fbar =
          fbar_from_sigma(sig_a[i], sig_b ? sig_b[i] : 1.0, q.n, q.a, q.b);
      rep.residual.v[i] =
          root_of_degree(fbar, d) - psi_value(phi.v[i], u.v[i], spec.p, d);
    } else {
      // Outside the cone F is undefined; the margin column carries the
      // diagnosis and the norm below reports the iterate as unusable.
      rep.residual.v[i] = std::numeric_limits<double>::quiet_NaN();
      poisoned = true;
    }
  }
  rep.max_norm = poisoned
                     ? std::numeric_limits<double>::infinity()
                     : kern::ops().reduce_max_abs(rep.residual.data(), count);
  return rep;
}

LinearOperator linearize(const ProblemSpec& spec, const ScalarField& u,
                         const ScalarField& phi) {
  require_positive_u(u);
  const SphereGrid& g = *u.grid;
  const CurvatureField A = hessian_plus_metric(u);
  const NodeTuples t = node_tuples(spec, A);
  const std::size_t count = u.size();
  for (std::size_t i = 0; i < count; ++i)
    if (!(t.margin[i] > 0.0))
      throw AdmissibilityError(spec.quotient().a, t.margin[i],
                               static_cast<int>(i));

  const QuotientOperator q = spec.quotient();
  const int d = q.degree_root();
  std::vector<Eigen::Triplet<double>> trip;
  const int N = static_cast<int>(count);

  if (g.kind == GridKind::axisymmetric) {
    trip.reserve(3 * count);
    const double h = g.ht;
    const int M = g.M;
    auto col = [&](int i) { return i == -1 ? 0 : (i == M ? M - 1 : i); };
    std::vector<double> lam(spec.n), grad(spec.n);
    for (int i = 0; i < M; ++i) {
      lam[0] = A.a_rad[i];
      for (int c = 1; c < spec.n; ++c) lam[c] = A.a_tan[i];
      quotient_gradient_inplace(q, lam, grad.data());
      const double g_rad = grad[0];
      const double g_tan = (spec.n - 1) * (spec.n > 1 ? grad[1] : 0.0);
      const double react = psi_derivative(phi.v[i], u.v[i], spec.p, d);
      // a_rad = u'' + u, a_tan = cot * u' + u
      trip.emplace_back(i, col(i - 1),
                        g_rad / (h * h) - g_tan * g.cot_t[i] / (2.0 * h));
      trip.emplace_back(i, col(i + 1),
                        g_rad / (h * h) + g_tan * g.cot_t[i] / (2.0 * h));
      trip.emplace_back(i, i,
                        g_rad * (1.0 - 2.0 / (h * h)) + g_tan - react);
    }
  } else {
    trip.reserve(9 * count);
    const int Mt = g.Mt, Mp = g.Mp;
    const double ht = g.ht, hp = g.hp;
    auto col = [&](int i, int j) -> int {
      j = ((j % Mp) + Mp) % Mp;
      if (i == -1) return static_cast<int>(g.index(0, (j + Mp / 2) % Mp));
      if (i == Mt)
        return static_cast<int>(g.index(Mt - 1, (j + Mp / 2) % Mp));
      return static_cast<int>(g.index(i, j));
    };
    for (int i = 0; i < Mt; ++i) {
      const double st = g.sin_t[i], ct = g.cot_t[i];
      for (int j = 0; j < Mp; ++j) {
        const std::size_t id = g.index(i, j);
        const int row = static_cast<int>(id);
        const double l1 = A.l1[id], l2 = A.l2[id];
        double g1, g2;
        quotient_gradient_n2(q, l1, l2, g1, g2);
        double F11, F12, F22;
        if (std::fabs(l1 - l2) <
            1e-9 * (1.0 + std::fabs(l1) + std::fabs(l2))) {
          F11 = F22 = 0.5 * (g1 + g2);
          F12 = 0.0;
        } else {
          const double slope = (g1 - g2) / (l1 - l2);
          F11 = g2 + slope * (A.a11[id] - l2);
          F22 = g2 + slope * (A.a22[id] - l2);
          F12 = slope * A.a12[id];
        }
        const double react = psi_derivative(phi.v[id], u.v[id], spec.p, d);
        const double cross = 2.0 * F12 / st;  // weight of dA12's content
        // dA11 = h_tt + h ; dA12 = (h_tp - cot h_p)/sin ;
        // dA22 = h_pp/sin^2 + cot h_t + h
        trip.emplace_back(row, col(i + 1, j),
                          F11 / (ht * ht) + F22 * ct / (2.0 * ht));
        trip.emplace_back(row, col(i - 1, j),
                          F11 / (ht * ht) - F22 * ct / (2.0 * ht));
        trip.emplace_back(row, col(i, j + 1),
                          F22 / (hp * hp * st * st) - cross * ct / (2.0 * hp));
        trip.emplace_back(row, col(i, j - 1),
                          F22 / (hp * hp * st * st) + cross * ct / (2.0 * hp));
        const double mixed = cross / (4.0 * ht * hp);
        trip.emplace_back(row, col(i + 1, j + 1), mixed);
        trip.emplace_back(row, col(i - 1, j - 1), mixed);
        trip.emplace_back(row, col(i + 1, j - 1), -mixed);
        trip.emplace_back(row, col(i - 1, j + 1), -mixed);
        trip.emplace_back(row, row,
                          F11 * (1.0 - 2.0 / (ht * ht)) +
                              F22 * (1.0 - 2.0 / (hp * hp * st * st)) - react);
      }
    }
  }

  Eigen::SparseMatrix<double> J(N, N);
  J.setFromTriplets(trip.begin(), trip.end());
  return LinearOperator(std::move(J));
}

LinearOperator::LinearOperator(Eigen::SparseMatrix<double> J)
    : J_(std::move(J)) {
  J_.makeCompressed();
}

std::vector<double> LinearOperator::apply(const std::vector<double>& h) const {
  Eigen::Map<const Eigen::VectorXd> hv(h.data(), h.size());
  Eigen::VectorXd r = J_ * hv;
  return std::vector<double>(r.data(), r.data() + r.size());
}

std::vector<double> LinearOperator::solve(const std::vector<double>& rhs) const {
  if (!lu_) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(J_);
    if (lu_->info() != Eigen::Success) {
      // Singular at working precision: retry with a small diagonal shift
      // rather than giving up mid-continuation.
      used_shift_ = true;
      Eigen::SparseMatrix<double> shifted = J_;
      Eigen::SparseMatrix<double> eye(J_.rows(), J_.cols());
      eye.setIdentity();
      shifted += 1e-8 * eye;
      lu_->compute(shifted);
      if (lu_->info() != Eigen::Success)
        throw std::runtime_error("sparse factorization failed");
    }
  }
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), rhs.size());
  Eigen::VectorXd x = lu_->solve(b);
  if (lu_->info() != Eigen::Success)
    throw std::runtime_error("sparse solve failed");
  return std::vector<double>(x.data(), x.data() + x.size());
}

C0Bounds c0_bounds_check(const ProblemSpec& spec, const ScalarField& u,
                         const ScalarField& phi, double C) {
  if (spec.regime() != Regime::supercritical)
    throw std::logic_error("c0_bounds_check applies to the supercritical regime");
  const double qexp = spec.p - (spec.k - spec.l + 1);
  double min_uq = std::numeric_limits<double>::infinity(), max_uq = 0.0;
  for (double x : u.v) {
    const double v = std::pow(x, qexp);
    min_uq = std::min(min_uq, v);
    max_uq = std::max(max_uq, v);
  }
  double min_f = std::numeric_limits<double>::infinity(), max_f = 0.0;
  for (double x : phi.v) {
    min_f = std::min(min_f, 1.0 / x);
    max_f = std::max(max_f, 1.0 / x);
  }
  C0Bounds b;
  b.tol = C * u.grid->ht * u.grid->ht;
  b.lower_slack = min_uq - min_f;
  b.upper_slack = max_f - max_uq;
  b.lower_ok = b.lower_slack >= -b.tol;
  b.upper_ok = b.upper_slack >= -b.tol;
  return b;
}

double c2_diagnostic(const ScalarField& u) {
  const CurvatureField A = hessian_plus_metric(u);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, A.trace(i));
  return m;
}

}  // namespace curvquot
