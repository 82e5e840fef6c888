#include <cstdlib>
#include <string_view>

#include "gms3dqa/simd/kernels.hpp"

namespace gms::simd {

#if defined(GMS3DQA_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(GMS3DQA_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  if (supported) return &avx2_kernel_table();
#endif
  return nullptr;
}

const KernelTable& kernels() {
  static const KernelTable* active = [] {
    const char* env = std::getenv("QMM3DQA_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
  }();
  return *active;
}

}  // namespace gms::simd
