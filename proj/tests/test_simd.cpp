#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gms3dqa/simd/kernels.hpp"

using namespace gms::simd;

namespace {

const KernelTable* fast() { return avx2_kernels(); }

std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937_64& gen, double zero_fraction) {
  std::uniform_int_distribution<int> v(1, 255);
  std::bernoulli_distribution z(zero_fraction);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = z(gen) ? 0 : static_cast<std::uint8_t>(v(gen));
  return out;
}

}  // namespace

TEST_CASE("kernel selection") {
  CHECK(scalar_kernels().name == "scalar");
  const auto& k = kernels();
  CHECK((k.name == "scalar" || k.name == "avx2"));
  if (fast() == nullptr) MESSAGE("AVX2 unavailable; equivalence cases are vacuous");
}

TEST_CASE("count_nonzero and u8_moments are exact") {
  if (!fast()) return;
  std::mt19937_64 gen(1);
  for (std::size_t n : {0, 1, 7, 31, 32, 33, 63, 64, 65, 1000, 4099}) {
    for (double zf : {0.0, 0.3, 1.0}) {
      const auto data = random_bytes(n, gen, zf);
      CHECK(scalar_kernels().count_nonzero(data.data(), n) == fast()->count_nonzero(data.data(), n));
      std::uint64_t s1 = 0, q1 = 0, s2 = 0, q2 = 0;
      scalar_kernels().u8_moments(data.data(), n, &s1, &q1);
      fast()->u8_moments(data.data(), n, &s2, &q2);
      CHECK(s1 == s2);
      CHECK(q1 == q2);
    }
  }
  // Saturated input over a long run checks accumulator widths.
  std::vector<std::uint8_t> big(1 << 20, 255);
  std::uint64_t s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  scalar_kernels().u8_moments(big.data(), big.size(), &s1, &q1);
  fast()->u8_moments(big.data(), big.size(), &s2, &q2);
  CHECK(s1 == 255ull * big.size());
  CHECK(q1 == 255ull * 255ull * big.size());
  CHECK(s1 == s2);
  CHECK(q1 == q2);
}

TEST_CASE("scalar reference values") {
  const std::vector<std::uint8_t> d{0, 1, 2, 0, 3};
  CHECK(scalar_kernels().count_nonzero(d.data(), d.size()) == 3);
  std::uint64_t s = 0, q = 0;
  scalar_kernels().u8_moments(d.data(), d.size(), &s, &q);
  CHECK(s == 6);
  CHECK(q == 14);
  // Horizontal ramp of step 2: half central difference gives 2 inside, 1 at
  // the replicated borders.
  const std::vector<float> ramp{0, 2, 4, 6, 0, 2, 4, 6};
  std::vector<float> g(8);
  scalar_kernels().gradient_magnitude(ramp.data(), 4, 2, g.data());
  CHECK(g == std::vector<float>{1, 2, 2, 1, 1, 2, 2, 1});
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(scalar_kernels().dot(a.data(), b.data(), 3) == 32.0);
  std::vector<double> y{1, 1, 1};
  scalar_kernels().axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
}

TEST_CASE("gradient_magnitude is bit-identical") {
  if (!fast()) return;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto [w, h] : std::vector<std::pair<int, int>>{{1, 1}, {1, 5}, {5, 1}, {7, 3}, {8, 8}, {9, 9}, {32, 32}, {33, 17}, {146, 146}}) {
    std::vector<float> plane(static_cast<std::size_t>(w) * h);
    for (auto& v : plane) v = u(gen);
    std::vector<float> a(plane.size()), b(plane.size());
    scalar_kernels().gradient_magnitude(plane.data(), w, h, a.data());
    fast()->gradient_magnitude(plane.data(), w, h, b.data());
    CHECK(a == b);
  }
}

TEST_CASE("axpy is bit-identical and dot agrees to rounding") {
  if (!fast()) return;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(0.0, 10.0);
  for (std::size_t n : {0, 1, 3, 4, 5, 15, 16, 17, 768, 1001}) {
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = nd(gen);
    for (auto& v : y) v = nd(gen);
    auto y1 = y, y2 = y;
    scalar_kernels().axpy(-0.37, x.data(), y1.data(), n);
    fast()->axpy(-0.37, x.data(), y2.data(), n);
    CHECK(y1 == y2);
    double abs_sum = 0;
    for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(x[i] * y[i]);
    const double d1 = scalar_kernels().dot(x.data(), y.data(), n);
    const double d2 = fast()->dot(x.data(), y.data(), n);
    CHECK(std::abs(d1 - d2) <= 1e-14 * std::max(1.0, abs_sum));
  }
}
