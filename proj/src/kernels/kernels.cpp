// Kernel dispatch. The table is resolved once: AVX2 when the CPU supports
// avx2+fma (and the build included that TU), otherwise scalar. The
// RADARIM_KERNELS environment variable forces a backend, which the
// equivalence tests and benchmarking use.

#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "radarim/kernels/kernels.hpp"

namespace radarim::kernels {

#if defined(RADARIM_HAVE_AVX2_TU)
const KernelTable* avx2_kernels_impl();
#endif

const KernelTable* avx2_kernels() {
#if defined(RADARIM_HAVE_AVX2_TU)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return avx2_kernels_impl();
#endif
  return nullptr;
}

const KernelTable& active_kernels() {
  static const KernelTable* chosen = []() -> const KernelTable* {
    if (const char* env = std::getenv("RADARIM_KERNELS")) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
      if (std::strcmp(env, "avx2") == 0) {
        const KernelTable* t = avx2_kernels();
        if (!t)
          throw std::runtime_error(
              "RADARIM_KERNELS=avx2 but AVX2+FMA is unavailable");
        return t;
      }
      throw std::runtime_error(
          "RADARIM_KERNELS must be 'scalar' or 'avx2'");
    }
    const KernelTable* t = avx2_kernels();
    return t ? t : &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace radarim::kernels
