#pragma once

#include <cstddef>

namespace curvquot::kern {

// One instruction lane's worth of array primitives. Every entry is specified
// down to the bit pattern: lanes use the same four-way accumulator striping,
// the same combine order, and fuse multiplies only through fma, so a caller
// may switch lanes without perturbing any downstream result.
struct Ops {
  const char* lane;

  double (*reduce_min)(const double* x, std::size_t n);
  double (*reduce_max)(const double* x, std::size_t n);
  double (*reduce_max_abs)(const double* x, std::size_t n);

  // Sum of x[i]*w[i]. Four striped fma chains, combined (s0+s1)+(s2+s3),
  // then the tail folded in sequentially.
  double (*weighted_sum)(const double* x, const double* w, std::size_t n);

  // y[i] = fma(a, x[i], y[i])
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scale)(double a, double* x, std::size_t n);

  // Elementary symmetric functions sigma_1..sigma_nvals for `count` tuples in
  // struct-of-arrays layout: lam[j*count + i] is entry j of tuple i. Output
  // has the same layout with row k-1 holding sigma_k. nvals <= 16.
  void (*sigma_batch)(const double* lam, std::size_t nvals, std::size_t count,
                      double* out);

  // Cone margin min(sigma_1..sigma_kcone) per tuple, reading sigma_batch's
  // output layout. 1 <= kcone <= nvals.
  void (*cone_margin_batch)(const double* sig, std::size_t nvals, int kcone,
                            std::size_t count, double* out);

  // Eigenvalues of symmetric 2x2 matrices [[a11,a12],[a12,a22]], descending.
  void (*sym2x2_eigs_batch)(const double* a11, const double* a12,
                            const double* a22, std::size_t count, double* l1,
                            double* l2);
};

inline constexpr std::size_t kSigmaBatchMaxN = 16;

const Ops& scalar_ops();
bool avx2_available();
const Ops& avx2_ops();  // only valid to call through when avx2_available()
const Ops& ops();       // best lane for this machine, chosen once

}  // namespace curvquot::kern
