#include "specpart/simd.hpp"

namespace specpart::simd {
namespace {

void apply_stencil_scalar(const double* diag, const double* coef, const double* x,
                          double* y, std::size_t stride, std::size_t n) {
  if (n < 2 * stride) {
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
    return;
  }
  for (std::size_t i = 0; i < stride; ++i) y[i] = 0.0;
  for (std::size_t i = stride; i < n - stride; ++i) {
    y[i] = coef[i] * (diag[i] * x[i] - x[i - 1] - x[i + 1] - x[i - stride] - x[i + stride]);
  }
  for (std::size_t i = n - stride; i < n; ++i) y[i] = 0.0;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay_scalar(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

double cg_update_scalar(double alpha, const double* p, const double* q, double* x,
                        double* r, std::size_t n) {
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] += alpha * p[i];
    r[i] -= alpha * q[i];
    rr += r[i] * r[i];
  }
  return rr;
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

constexpr KernelTable kScalar{
    Isa::Scalar,      apply_stencil_scalar, dot_scalar,  axpy_scalar,
    xpay_scalar,      cg_update_scalar,     scale_scalar,
};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace specpart::simd
