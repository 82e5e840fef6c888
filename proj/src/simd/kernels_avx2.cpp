// AVX2 variants. This translation unit is compiled with -mavx2 and must only
// be entered after the runtime CPU check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>

#include "gms3dqa/simd/kernels.hpp"

namespace gms::simd {

namespace {

std::size_t count_nonzero(const std::uint8_t* data, std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    auto zeros = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
    count += 32 - static_cast<std::size_t>(std::popcount(zeros));
  }
  for (; i < n; ++i) count += data[i] != 0;
  return count;
}

std::uint64_t hsum_epi64(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

void u8_moments(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq) {
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc_sum = zero;
  __m256i acc_sq64 = zero;
  __m256i acc_sq32 = zero;
  std::size_t i = 0;
  std::size_t pending = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    acc_sum = _mm256_add_epi64(acc_sum, _mm256_sad_epu8(v, zero));
    __m256i lo = _mm256_cvtepu8_epi16(_mm256_castsi256_si128(v));
    __m256i hi = _mm256_cvtepu8_epi16(_mm256_extracti128_si256(v, 1));
    acc_sq32 = _mm256_add_epi32(acc_sq32, _mm256_madd_epi16(lo, lo));
    acc_sq32 = _mm256_add_epi32(acc_sq32, _mm256_madd_epi16(hi, hi));
    // Each 32-bit lane grows by at most 4 * 255^2 per iteration.
    if (++pending == 2048) {
      acc_sq64 = _mm256_add_epi64(acc_sq64, _mm256_cvtepu32_epi64(_mm256_castsi256_si128(acc_sq32)));
      acc_sq64 = _mm256_add_epi64(acc_sq64, _mm256_cvtepu32_epi64(_mm256_extracti128_si256(acc_sq32, 1)));
      acc_sq32 = zero;
      pending = 0;
    }
  }
  acc_sq64 = _mm256_add_epi64(acc_sq64, _mm256_cvtepu32_epi64(_mm256_castsi256_si128(acc_sq32)));
  acc_sq64 = _mm256_add_epi64(acc_sq64, _mm256_cvtepu32_epi64(_mm256_extracti128_si256(acc_sq32, 1)));
  std::uint64_t s = hsum_epi64(acc_sum);
  std::uint64_t s2 = hsum_epi64(acc_sq64);
  for (; i < n; ++i) {
    std::uint64_t v = data[i];
    s += v;
    s2 += v * v;
  }
  *sum = s;
  *sum_sq = s2;
}

inline float grad_at(const float* row, const float* up, const float* dn, int x, int w) {
  float gx = (row[std::min(x + 1, w - 1)] - row[std::max(x - 1, 0)]) * 0.5f;
  float gy = (dn[x] - up[x]) * 0.5f;
  return std::sqrt(gx * gx + gy * gy);
}

void gradient_magnitude(const float* plane, int w, int h, float* out) {
  const __m256 half = _mm256_set1_ps(0.5f);
  for (int y = 0; y < h; ++y) {
    const float* up = plane + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
    const float* dn = plane + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
    const float* row = plane + static_cast<std::size_t>(y) * w;
    float* o = out + static_cast<std::size_t>(y) * w;
    o[0] = grad_at(row, up, dn, 0, w);
    int x = 1;
    for (; x + 8 <= w - 1; x += 8) {
      __m256 gx = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(row + x + 1), _mm256_loadu_ps(row + x - 1)), half);
      __m256 gy = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(dn + x), _mm256_loadu_ps(up + x)), half);
      __m256 m = _mm256_sqrt_ps(_mm256_add_ps(_mm256_mul_ps(gx, gx), _mm256_mul_ps(gy, gy)));
      _mm256_storeu_ps(o + x, m);
    }
    for (; x < w; ++x) o[x] = grad_at(row, up, dn, x, w);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", count_nonzero, u8_moments, gradient_magnitude, dot, axpy};
  return table;
}

}  // namespace gms::simd
