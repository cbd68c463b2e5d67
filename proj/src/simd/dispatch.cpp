#include "specpart/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace specpart::simd {

#if defined(SPECPART_HAVE_AVX2)
const KernelTable* avx2_kernels_compiled();
#endif
#if defined(SPECPART_HAVE_NEON)
const KernelTable* neon_kernels_compiled();
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(SPECPART_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? avx2_kernels_compiled() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(SPECPART_HAVE_NEON)
  return neon_kernels_compiled();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* best_available() {
  if (const char* env = std::getenv("SPECPART_SIMD")) {
    const std::string want = env;
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
  }
  if (auto* t = avx2_kernels()) return t;
  if (auto* t = neon_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{best_available()};
  return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

bool select_isa(Isa isa) {
  const KernelTable* t = nullptr;
  switch (isa) {
    case Isa::Scalar: t = &scalar_kernels(); break;
    case Isa::Avx2: t = avx2_kernels(); break;
    case Isa::Neon: t = neon_kernels(); break;
  }
  if (!t) return false;
  active().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace specpart::simd
