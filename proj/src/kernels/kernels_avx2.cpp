#include "curvquot/kernels.hpp"

#include <cmath>
#include <immintrin.h>
#include <limits>

// AVX2 lane. Mirrors the scalar lane's accumulator striping and combine order
// exactly; vminpd/vmaxpd implement (a OP b) ? a : b with the same operand
// order as the scalar selects, vsqrtpd and vfmadd are correctly rounded, so
// results match the scalar lane bit-for-bit. Tails reuse scalar code paths.

namespace curvquot::kern {
namespace {

inline double fmin_sel(double a, double b) { return a < b ? a : b; }
inline double fmax_sel(double a, double b) { return a > b ? a : b; }

inline void combine4(__m256d v, double out[4]) {
  _mm256_storeu_pd(out, v);
}

double v_reduce_min(const double* x, std::size_t n) {
  __m256d acc = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_min_pd(acc, _mm256_loadu_pd(x + i));
  double a[4];
  combine4(acc, a);
  double r = fmin_sel(fmin_sel(a[0], a[1]), fmin_sel(a[2], a[3]));
  for (; i < n; ++i) r = fmin_sel(r, x[i]);
  return r;
}

double v_reduce_max(const double* x, std::size_t n) {
  __m256d acc = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
  double a[4];
  combine4(acc, a);
  double r = fmax_sel(fmax_sel(a[0], a[1]), fmax_sel(a[2], a[3]));
  for (; i < n; ++i) r = fmax_sel(r, x[i]);
  return r;
}

double v_reduce_max_abs(const double* x, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign, _mm256_loadu_pd(x + i)));
  double a[4];
  combine4(acc, a);
  double r = fmax_sel(fmax_sel(a[0], a[1]), fmax_sel(a[2], a[3]));
  for (; i < n; ++i) r = fmax_sel(r, std::fabs(x[i]));
  return r;
}

double v_weighted_sum(const double* x, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(w + i), acc);
  double a[4];
  combine4(acc, a);
  double r = (a[0] + a[1]) + (a[2] + a[3]);
  for (; i < n; ++i) r = std::fma(x[i], w[i], r);
  return r;
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                 _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void v_scale(double a, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void sigma_one(const double* lam, std::size_t nvals, std::size_t count,
               std::size_t i, double* out) {
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

void v_sigma_batch(const double* lam, std::size_t nvals, std::size_t count,
                   double* out) {
  __m256d e[kSigmaBatchMaxN + 1];
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    e[0] = _mm256_set1_pd(1.0);
    for (std::size_t j = 0; j < nvals; ++j) {
      const __m256d x = _mm256_loadu_pd(lam + j * count + i);
      e[j + 1] = _mm256_setzero_pd();
      for (std::size_t k = j + 1; k >= 1; --k)
        e[k] = _mm256_fmadd_pd(x, e[k - 1], e[k]);
    }
    for (std::size_t k = 1; k <= nvals; ++k)
      _mm256_storeu_pd(out + (k - 1) * count + i, e[k]);
  }
  for (; i < count; ++i) sigma_one(lam, nvals, count, i, out);
}

void v_cone_margin_batch(const double* sig, std::size_t nvals, int kcone,
                         std::size_t count, double* out) {
  (void)nvals;
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d m = _mm256_loadu_pd(sig + i);
    for (int k = 1; k < kcone; ++k)
      m = _mm256_min_pd(m, _mm256_loadu_pd(sig + k * count + i));
    _mm256_storeu_pd(out + i, m);
  }
  for (; i < count; ++i) {
    double m = sig[i];
    for (int k = 1; k < kcone; ++k) m = fmin_sel(m, sig[k * count + i]);
    out[i] = m;
  }
}

void v_sym2x2_eigs_batch(const double* a11, const double* a12,
                         const double* a22, std::size_t count, double* l1,
                         double* l2) {
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d p = _mm256_loadu_pd(a11 + i);
    const __m256d q = _mm256_loadu_pd(a12 + i);
    const __m256d s = _mm256_loadu_pd(a22 + i);
    const __m256d m = _mm256_mul_pd(half, _mm256_add_pd(p, s));
    const __m256d d = _mm256_mul_pd(half, _mm256_sub_pd(p, s));
    const __m256d r =
        _mm256_sqrt_pd(_mm256_fmadd_pd(d, d, _mm256_mul_pd(q, q)));
    _mm256_storeu_pd(l1 + i, _mm256_add_pd(m, r));
    _mm256_storeu_pd(l2 + i, _mm256_sub_pd(m, r));
  }
  for (; i < count; ++i) {
    const double m = 0.5 * (a11[i] + a22[i]);
    const double d = 0.5 * (a11[i] - a22[i]);
    const double r = std::sqrt(std::fma(d, d, a12[i] * a12[i]));
    l1[i] = m + r;
    l2[i] = m - r;
  }
}

const Ops kAvx2Ops = {
    "avx2",          v_reduce_min, v_reduce_max,  v_reduce_max_abs,
    v_weighted_sum,  v_axpy,       v_scale,       v_sigma_batch,
    v_cone_margin_batch, v_sym2x2_eigs_batch,
};

}  // namespace

const Ops& avx2_ops() { return kAvx2Ops; }

}  // namespace curvquot::kern
