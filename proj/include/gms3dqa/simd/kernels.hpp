#pragma once

// Data-parallel inner loops used by the sampler, the builtin feature
// extractor and the regression head. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2 variant; the variant is chosen once
// at runtime from CPUID. Setting QMM3DQA_SIMD=scalar forces the reference
// path.
//
// Integer kernels and the elementwise float kernels are bit-identical across
// variants. `dot` reorders its summation under AVX2 and agrees with the
// scalar result to a few ulps of sum(|a_i * b_i|).

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace gms::simd {

struct KernelTable {
  std::string_view name;

  /// Number of nonzero bytes in data[0, n).
  std::size_t (*count_nonzero)(const std::uint8_t* data, std::size_t n);

  /// sum and sum of squares of n bytes.
  void (*u8_moments)(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq);

  /// out = sqrt(gx^2 + gy^2) with gx, gy half central differences of a
  /// contiguous w x h float plane; borders replicate the edge sample.
  void (*gradient_magnitude)(const float* plane, int w, int h, float* out);

  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table selected for this process.
const KernelTable& kernels();

}  // namespace gms::simd
