// AArch64 only; NEON is part of the baseline ISA there.

#include "specpart/simd.hpp"

#include <arm_neon.h>

namespace specpart::simd {
namespace {

void apply_stencil_neon(const double* diag, const double* coef, const double* x,
                        double* y, std::size_t stride, std::size_t n) {
  if (n < 2 * stride) {
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
    return;
  }
  for (std::size_t i = 0; i < stride; ++i) y[i] = 0.0;
  const std::size_t end = n - stride;
  std::size_t i = stride;
  for (; i + 2 <= end; i += 2) {
    float64x2_t nb = vaddq_f64(vld1q_f64(x + i - 1), vld1q_f64(x + i + 1));
    nb = vaddq_f64(nb, vld1q_f64(x + i - stride));
    nb = vaddq_f64(nb, vld1q_f64(x + i + stride));
    float64x2_t v = vsubq_f64(vmulq_f64(vld1q_f64(diag + i), vld1q_f64(x + i)), nb);
    vst1q_f64(y + i, vmulq_f64(vld1q_f64(coef + i), v));
  }
  for (; i < end; ++i) {
    y[i] = coef[i] * (diag[i] * x[i] - x[i - 1] - x[i + 1] - x[i - stride] - x[i + stride]);
  }
  for (i = end; i < n; ++i) y[i] = 0.0;
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0);
  float64x2_t s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
    s1 = vfmaq_f64(s1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay_neon(const double* x, double a, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), va, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

double cg_update_neon(double alpha, const double* p, const double* q, double* x,
                      double* r, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vfmaq_f64(vld1q_f64(x + i), va, vld1q_f64(p + i)));
    float64x2_t rv = vfmsq_f64(vld1q_f64(r + i), va, vld1q_f64(q + i));
    vst1q_f64(r + i, rv);
    acc = vfmaq_f64(acc, rv, rv);
  }
  double rr = vaddvq_f64(acc);
  for (; i < n; ++i) {
    x[i] += alpha * p[i];
    r[i] -= alpha * q[i];
    rr += r[i] * r[i];
  }
  return rr;
}

void scale_neon(double a, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

constexpr KernelTable kNeon{
    Isa::Neon,      apply_stencil_neon, dot_neon,  axpy_neon,
    xpay_neon,      cg_update_neon,     scale_neon,
};

}  // namespace

const KernelTable* neon_kernels_compiled() { return &kNeon; }

}  // namespace specpart::simd
