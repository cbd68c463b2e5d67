#pragma once

// Data-parallel inner loops of the eigensolver.
//
// Every kernel has a scalar reference implementation and optional AVX2 / NEON
// variants. A table of function pointers is selected once at startup from the
// CPU features (override with SPECPART_SIMD=scalar|avx2|neon). The variants are
// required to agree with the scalar reference up to floating-point
// reassociation; see tests/test_kernels.cpp.

#include <cstddef>
#include <string_view>

namespace specpart::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // Masked 5-point operator on a padded row-major box of row stride `stride`:
  //   y[i] = coef[i] * (diag[i]*x[i] - x[i-1] - x[i+1] - x[i-stride] - x[i+stride])
  // for i in [stride, n - stride). Entries outside that range are set to 0.
  void (*apply_stencil)(const double* diag, const double* coef, const double* x,
                        double* y, std::size_t stride, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // y = x + a * y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);

  // x += alpha * p; r -= alpha * q; returns the new r.r
  double (*cg_update)(double alpha, const double* p, const double* q, double* x,
                      double* r, std::size_t n);

  void (*scale)(double a, double* x, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Table used by the solver.
const KernelTable& kernels();

// Force a variant (tests, benchmarking). Returns false if unavailable.
bool select_isa(Isa isa);

}  // namespace specpart::simd
