// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "specpart/simd.hpp"

#include <immintrin.h>

namespace specpart::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void apply_stencil_avx2(const double* diag, const double* coef, const double* x,
                        double* y, std::size_t stride, std::size_t n) {
  if (n < 2 * stride) {
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
    return;
  }
  for (std::size_t i = 0; i < stride; ++i) y[i] = 0.0;
  const std::size_t end = n - stride;
  std::size_t i = stride;
  for (; i + 4 <= end; i += 4) {
    __m256d xc = _mm256_loadu_pd(x + i);
    __m256d nb = _mm256_add_pd(_mm256_loadu_pd(x + i - 1), _mm256_loadu_pd(x + i + 1));
    nb = _mm256_add_pd(nb, _mm256_loadu_pd(x + i - stride));
    nb = _mm256_add_pd(nb, _mm256_loadu_pd(x + i + stride));
    __m256d v = _mm256_fmsub_pd(_mm256_loadu_pd(diag + i), xc, nb);
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(coef + i), v));
  }
  for (; i < end; ++i) {
    y[i] = coef[i] * (diag[i] * x[i] - x[i - 1] - x[i + 1] - x[i - stride] - x[i + stride]);
  }
  for (i = end; i < n; ++i) y[i] = 0.0;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay_avx2(const double* x, double a, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

double cg_update_avx2(double alpha, const double* p, const double* q, double* x,
                      double* r, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vna = _mm256_set1_pd(-alpha);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(p + i), _mm256_loadu_pd(x + i)));
    __m256d rv = _mm256_fmadd_pd(vna, _mm256_loadu_pd(q + i), _mm256_loadu_pd(r + i));
    _mm256_storeu_pd(r + i, rv);
    acc = _mm256_fmadd_pd(rv, rv, acc);
  }
  double rr = hsum(acc);
  for (; i < n; ++i) {
    x[i] += alpha * p[i];
    r[i] -= alpha * q[i];
    rr += r[i] * r[i];
  }
  return rr;
}

void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

constexpr KernelTable kAvx2{
    Isa::Avx2,      apply_stencil_avx2, dot_avx2,  axpy_avx2,
    xpay_avx2,      cg_update_avx2,     scale_avx2,
};

}  // namespace

const KernelTable* avx2_kernels_compiled() { return &kAvx2; }

}  // namespace specpart::simd
