#include <cstdlib>
#include <string_view>

#include "ccppm/kernels.hpp"

namespace ccppm::kernels {

#if defined(CCPPM_HAVE_AVX2)
const KernelSet& avx2_kernel_set();
#endif

const KernelSet* avx2_kernels() {
#if defined(CCPPM_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernel_set() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active_kernels() {
  static const KernelSet& chosen = [] () -> const KernelSet& {
    const char* force = std::getenv("CCPPM_FORCE_SCALAR");
    if (force != nullptr && std::string_view(force) != "0") return scalar_kernels();
    if (const KernelSet* k = avx2_kernels()) return *k;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace ccppm::kernels
