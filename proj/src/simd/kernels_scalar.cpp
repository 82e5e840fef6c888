#include <algorithm>
#include <cmath>

#include "gms3dqa/simd/kernels.hpp"

namespace gms::simd {

namespace {

std::size_t count_nonzero(const std::uint8_t* data, std::size_t n) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += data[i] != 0;
  return count;
}

void u8_moments(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq) {
  std::uint64_t s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = data[i];
    s += v;
    s2 += v * v;
  }
  *sum = s;
  *sum_sq = s2;
}

void gradient_magnitude(const float* plane, int w, int h, float* out) {
  for (int y = 0; y < h; ++y) {
    const float* up = plane + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
    const float* dn = plane + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
    const float* row = plane + static_cast<std::size_t>(y) * w;
    float* o = out + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      float gx = (row[std::min(x + 1, w - 1)] - row[std::max(x - 1, 0)]) * 0.5f;
      float gy = (dn[x] - up[x]) * 0.5f;
      o[x] = std::sqrt(gx * gx + gy * gy);
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", count_nonzero, u8_moments, gradient_magnitude, dot, axpy};
  return table;
}

}  // namespace gms::simd
