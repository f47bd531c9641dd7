#include "curvquot/kernels.hpp"

#include <cmath>
#include <limits>

// Scalar reference lane. The four-way striping below is not an optimization
// hint; it is the contract that makes the AVX2 lane bit-identical.

namespace curvquot::kern {
namespace {

inline double fmin_sel(double a, double b) { return a < b ? a : b; }
inline double fmax_sel(double a, double b) { return a > b ? a : b; }

double s_reduce_min(const double* x, std::size_t n) {
  double acc[4] = {std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int j = 0; j < 4; ++j) acc[j] = fmin_sel(acc[j], x[i + j]);
  double r = fmin_sel(fmin_sel(acc[0], acc[1]), fmin_sel(acc[2], acc[3]));
  for (; i < n; ++i) r = fmin_sel(r, x[i]);
  return r;
}

double s_reduce_max(const double* x, std::size_t n) {
  double acc[4] = {-std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int j = 0; j < 4; ++j) acc[j] = fmax_sel(acc[j], x[i + j]);
  double r = fmax_sel(fmax_sel(acc[0], acc[1]), fmax_sel(acc[2], acc[3]));
  for (; i < n; ++i) r = fmax_sel(r, x[i]);
  return r;
}

double s_reduce_max_abs(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int j = 0; j < 4; ++j) acc[j] = fmax_sel(acc[j], std::fabs(x[i + j]));
  double r = fmax_sel(fmax_sel(acc[0], acc[1]), fmax_sel(acc[2], acc[3]));
  for (; i < n; ++i) r = fmax_sel(r, std::fabs(x[i]));
  return r;
}

double s_weighted_sum(const double* x, const double* w, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int j = 0; j < 4; ++j) acc[j] = std::fma(x[i + j], w[i + j], acc[j]);
  double r = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < n; ++i) r = std::fma(x[i], w[i], r);
  return r;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void s_scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_sigma_batch(const double* lam, std::size_t nvals, std::size_t count,
                   double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    double e[kSigmaBatchMaxN + 1];
    e[0] = 1.0;
    for (std::size_t j = 0; j < nvals; ++j) {
      const double x = lam[j * count + i];
      e[j + 1] = 0.0;
      for (std::size_t k = j + 1; k >= 1; --k)
        e[k] = std::fma(x, e[k - 1], e[k]);
    }
    for (std::size_t k = 1; k <= nvals; ++k) out[(k - 1) * count + i] = e[k];
  }
}

void s_cone_margin_batch(const double* sig, std::size_t nvals, int kcone,
                         std::size_t count, double* out) {
  (void)nvals;
  for (std::size_t i = 0; i < count; ++i) {
    double m = sig[i];
    for (int k = 1; k < kcone; ++k) m = fmin_sel(m, sig[k * count + i]);
    out[i] = m;
  }
}

void s_sym2x2_eigs_batch(const double* a11, const double* a12,
                         const double* a22, std::size_t count, double* l1,
                         double* l2) {
  for (std::size_t i = 0; i < count; ++i) {
    const double m = 0.5 * (a11[i] + a22[i]);
    const double d = 0.5 * (a11[i] - a22[i]);
    const double r = std::sqrt(std::fma(d, d, a12[i] * a12[i]));
    l1[i] = m + r;
    l2[i] = m - r;
  }
}

const Ops kScalarOps = {
    "scalar",        s_reduce_min, s_reduce_max,  s_reduce_max_abs,
    s_weighted_sum,  s_axpy,       s_scale,       s_sigma_batch,
    s_cone_margin_batch, s_sym2x2_eigs_batch,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Ops& ops() {
  static const Ops& chosen = avx2_available() ? avx2_ops() : scalar_ops();
  return chosen;
}

}  // namespace curvquot::kern
