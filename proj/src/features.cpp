#include "gms3dqa/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "gms3dqa/error.hpp"
#include "gms3dqa/rng.hpp"
#include "gms3dqa/sampler.hpp"
#include "gms3dqa/simd/kernels.hpp"

namespace gms {

namespace {

constexpr double kInv255 = 1.0 / 255.0;
constexpr float kInv255f = 1.0f / 255.0f;

struct Moments {
  double mean;
  double std;
};

Moments float_moments(const std::vector<float>& v) {
  double s = 0, s2 = 0;
  for (float x : v) {
    s += x;
    s2 += static_cast<double>(x) * x;
  }
  const double n = static_cast<double>(v.size());
  const double mean = s / n;
  return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean))};
}

/// Per-patch statistics for one rectangular block of the image.
std::array<double, BuiltinExtractor::kStatsPerPatch> patch_stats(const RgbImage& image, const PixelRect& rect,
                                                                  const simd::KernelTable& k) {
  const int w = rect.width();
  const int h = rect.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> plane(n);
  std::vector<float> fplane(n);
  std::vector<float> grad(n);
  std::array<double, BuiltinExtractor::kStatsPerPatch> out{};
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < h; ++r) {
      const std::uint8_t* src = image.pixel(rect.row0 + r, rect.col0);
      for (int c = 0; c < w; ++c) {
        const std::uint8_t v = src[c * 3 + ch];
        plane[static_cast<std::size_t>(r) * w + c] = v;
        fplane[static_cast<std::size_t>(r) * w + c] = static_cast<float>(v) * kInv255f;
      }
    }
    std::uint64_t sum = 0, sum_sq = 0;
    k.u8_moments(plane.data(), n, &sum, &sum_sq);
    // Exact integer variance before scaling.
    const double nn = static_cast<double>(n);
    const double var_num = static_cast<double>(sum_sq * n - sum * sum);
    out[ch * 4 + 0] = static_cast<double>(sum) / nn * kInv255;
    out[ch * 4 + 1] = std::sqrt(std::max(0.0, var_num)) / nn * kInv255;
    k.gradient_magnitude(fplane.data(), w, h, grad.data());
    const Moments gm = float_moments(grad);
    out[ch * 4 + 2] = gm.mean;
    out[ch * 4 + 3] = gm.std;
  }
  return out;
}

void quadrant_histograms(const RgbImage& image, const PixelRect& rect, const simd::KernelTable& k,
                         double* lum_hist, double* grad_hist) {
  const int w = rect.width();
  const int h = rect.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<float> lum(n);
  std::vector<float> grad(n);
  for (int r = 0; r < h; ++r) {
    const std::uint8_t* src = image.pixel(rect.row0 + r, rect.col0);
    for (int c = 0; c < w; ++c) {
      const float y = 0.299f * src[c * 3] + 0.587f * src[c * 3 + 1] + 0.114f * src[c * 3 + 2];
      lum[static_cast<std::size_t>(r) * w + c] = y * kInv255f;
    }
  }
  k.gradient_magnitude(lum.data(), w, h, grad.data());
  const int bins = BuiltinExtractor::kHistBins;
  std::vector<std::uint32_t> lc(bins, 0), gc(bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    lc[std::clamp(static_cast<int>(lum[i] * bins), 0, bins - 1)]++;
    // Gradient magnitudes above 0.5 share the top bin.
    gc[std::clamp(static_cast<int>(grad[i] * (2.0f * bins)), 0, bins - 1)]++;
  }
  for (int b = 0; b < bins; ++b) {
    lum_hist[b] = static_cast<double>(lc[b]) / static_cast<double>(n);
    grad_hist[b] = static_cast<double>(gc[b]) / static_cast<double>(n);
  }
}

}  // namespace

BuiltinExtractor::BuiltinExtractor(int feature_dim) : dim_(feature_dim) {
  if (feature_dim < 1) throw Error(Errc::InvalidConfig, "feature_dim must be >= 1");
}

std::vector<double> BuiltinExtractor::extract(const RgbImage& image, int grid) {
  if (grid < 1 || image.width < 2 * grid || image.height < 2 * grid) {
    throw Error(Errc::ShapeMismatch, "image too small for a " + std::to_string(grid) + "x" + std::to_string(grid) +
                                         " patch lattice");
  }
  ++invocations_;
  const auto& k = simd::kernels();
  const int patches = grid * grid;
  std::vector<std::array<double, kStatsPerPatch>> stats;
  stats.reserve(static_cast<std::size_t>(patches));
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      PixelRect rect{grid_boundary(i, image.height, grid), grid_boundary(i + 1, image.height, grid),
                     grid_boundary(j, image.width, grid), grid_boundary(j + 1, image.width, grid)};
      stats.push_back(patch_stats(image, rect, k));
    }
  }

  std::vector<double> raw(kRawCount, 0.0);
  for (int s = 0; s < kStatsPerPatch; ++s) {
    double sum = 0, sum_sq = 0;
    double lo = stats[0][s], hi = stats[0][s];
    for (const auto& p : stats) {
      sum += p[s];
      sum_sq += p[s] * p[s];
      lo = std::min(lo, p[s]);
      hi = std::max(hi, p[s]);
    }
    const double mean = sum / patches;
    raw[kPooledMeanOffset + s] = mean;
    raw[kPooledStdOffset + s] = std::sqrt(std::max(0.0, sum_sq / patches - mean * mean));
    raw[kPooledMinOffset + s] = lo;
    raw[kPooledMaxOffset + s] = hi;
  }

  const int hmid = grid_boundary(1, image.height, 2);
  const int wmid = grid_boundary(1, image.width, 2);
  const PixelRect quads[4] = {{0, hmid, 0, wmid},
                              {0, hmid, wmid, image.width},
                              {hmid, image.height, 0, wmid},
                              {hmid, image.height, wmid, image.width}};
  for (int q = 0; q < 4; ++q) {
    double* base = raw.data() + kHistOffset + q * 2 * kHistBins;
    quadrant_histograms(image, quads[q], k, base, base + kHistBins);
  }

  raw.resize(static_cast<std::size_t>(dim_), 0.0);
  return raw;
}

std::uint64_t image_hash(const RgbImage& image) {
  std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&image.width), sizeof(image.width)));
  h ^= splitmix64(static_cast<std::uint64_t>(image.height));
  h ^= fnv1a64(std::string_view(reinterpret_cast<const char*>(image.data.data()), image.data.size()));
  return splitmix64(h);
}

std::unique_ptr<FeatureExtractor> make_extractor(const FeatureExtractorSpec& spec) {
  if (spec.kind == ExtractorKind::Builtin) return std::make_unique<BuiltinExtractor>(spec.feature_dim);
  std::string cmd = spec.bridge_command;
  if (cmd.empty()) {
    const char* env = std::getenv("QMM3DQA_BRIDGE");
    if (env == nullptr || *env == '\0') {
      throw Error(Errc::InvalidConfig, "bridge extractor requested but QMM3DQA_BRIDGE is not set");
    }
    cmd = env;
  }
  auto bridge = std::make_unique<BridgeExtractor>(cmd);
  if (bridge->feature_dim() != spec.feature_dim) {
    throw Error(Errc::ShapeMismatch, "bridge advertises feature_dim " + std::to_string(bridge->feature_dim()) +
                                         ", expected " + std::to_string(spec.feature_dim));
  }
  return bridge;
}

}  // namespace gms
