#include "gms3dqa/projector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "gms3dqa/error.hpp"

namespace gms {

void RenderConfig::validate() const {
  if (resolution < 16) throw Error(Errc::ResolutionTooSmall, "resolution must be at least 16 pixels");
  if (!(splat_radius >= 0.5)) throw Error(Errc::InvalidConfig, "splat_radius must be >= 0.5");
  if (threads < 1) throw Error(Errc::InvalidConfig, "threads must be >= 1");
}

const std::array<ViewFrame, kNumViews>& view_frames() {
  static const std::array<ViewFrame, kNumViews> frames{{
      {{1, 0, 0}, {0, -1, 0}, {0, 0, 1}, "+X"},
      {{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}, "-X"},
      {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}, "+Y"},
      {{0, -1, 0}, {-1, 0, 0}, {0, 0, 1}, "-Y"},
      {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, "+Z"},
      {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}, "-Z"},
  }};
  return frames;
}

namespace {

struct Projected {
  double x;      // column coordinate, pixels
  double y;      // row coordinate, pixels
  double depth;  // larger is nearer
};

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Projected project(const Vec3& p, const ViewFrame& f, int res) {
  return {(dot3(p, f.right) + 0.5) * res, (0.5 - dot3(p, f.up)) * res, dot3(p, f.axis)};
}

class ViewRaster {
 public:
  ViewRaster(RgbImage& image, Mask& mask, int res, Rgb bg)
      : image_(image), mask_(mask), res_(res), depth_(static_cast<std::size_t>(res) * res,
                                                       -std::numeric_limits<double>::infinity()) {
    image_ = RgbImage(res, res, bg);
    mask_ = Mask(res, res);
  }

  void plot(int r, int c, double depth, const Rgb& color) {
    auto idx = static_cast<std::size_t>(r) * res_ + c;
    // Strict test: among equal depths the earlier primitive stays.
    if (depth > depth_[idx]) {
      depth_[idx] = depth;
      std::uint8_t* px = image_.pixel(r, c);
      px[0] = color[0];
      px[1] = color[1];
      px[2] = color[2];
      mask_.data[idx] = 1;
    }
  }

  void splat(const Projected& p, double radius, const Rgb& color) {
    const int r0 = std::clamp(static_cast<int>(std::floor(p.y)), 0, res_ - 1);
    const int c0 = std::clamp(static_cast<int>(std::floor(p.x)), 0, res_ - 1);
    const int rlo = std::max(0, static_cast<int>(std::floor(p.y - radius)));
    const int rhi = std::min(res_ - 1, static_cast<int>(std::floor(p.y + radius)));
    const int clo = std::max(0, static_cast<int>(std::floor(p.x - radius)));
    const int chi = std::min(res_ - 1, static_cast<int>(std::floor(p.x + radius)));
    const double r2 = radius * radius;
    for (int r = rlo; r <= rhi; ++r) {
      const double dy = r + 0.5 - p.y;
      for (int c = clo; c <= chi; ++c) {
        const double dx = c + 0.5 - p.x;
        if (dx * dx + dy * dy <= r2 || (r == r0 && c == c0)) plot(r, c, p.depth, color);
      }
    }
    // The containing pixel is always drawn, even when the disc misses every pixel center.
    if (r0 < rlo || r0 > rhi || c0 < clo || c0 > chi) plot(r0, c0, p.depth, color);
  }

  void triangle(const Projected& a, const Projected& b, const Projected& c, const Rgb& ca, const Rgb& cb,
                const Rgb& cc) {
    const double area = edge(a, b, c.x, c.y);
    if (area == 0.0 || !std::isfinite(area)) return;
    const int rlo = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int rhi = std::min(res_ - 1, static_cast<int>(std::floor(std::max({a.y, b.y, c.y}))));
    const int clo = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int chi = std::min(res_ - 1, static_cast<int>(std::floor(std::max({a.x, b.x, c.x}))));
    const double inv = 1.0 / area;
    for (int r = rlo; r <= rhi; ++r) {
      const double py = r + 0.5;
      for (int col = clo; col <= chi; ++col) {
        const double px = col + 0.5;
        const double w0 = edge(b, c, px, py) * inv;
        const double w1 = edge(c, a, px, py) * inv;
        const double w2 = edge(a, b, px, py) * inv;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double depth = w0 * a.depth + w1 * b.depth + w2 * c.depth;
        Rgb color;
        for (int ch = 0; ch < 3; ++ch) {
          double v = w0 * ca[ch] + w1 * cb[ch] + w2 * cc[ch];
          color[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
        plot(r, col, depth, color);
      }
    }
  }

 private:
  static double edge(const Projected& p, const Projected& q, double x, double y) {
    return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
  }

  RgbImage& image_;
  Mask& mask_;
  int res_;
  std::vector<double> depth_;
};

}  // namespace

void render_view(const Model3D& m, const RenderConfig& cfg, int k, RgbImage& image, Mask& mask) {
  if (k < 1 || k > kNumViews) throw Error(Errc::InvalidConfig, "view index must be 1..6");
  const ViewFrame& frame = view_frames()[k - 1];
  const int res = cfg.resolution;
  ViewRaster raster(image, mask, res, cfg.background);
  if (m.kind == ModelKind::PointCloud) {
    for (std::size_t i = 0; i < m.positions.size(); ++i) {
      raster.splat(project(m.positions[i], frame, res), cfg.splat_radius, m.colors[i]);
    }
  } else {
    std::vector<Projected> proj(m.positions.size());
    for (std::size_t i = 0; i < m.positions.size(); ++i) proj[i] = project(m.positions[i], frame, res);
    for (const auto& f : m.faces) {
      raster.triangle(proj[f[0]], proj[f[1]], proj[f[2]], m.colors[f[0]], m.colors[f[1]], m.colors[f[2]]);
    }
  }
}

ProjectionSet render_projections(const Model3D& m, const RenderConfig& cfg) {
  cfg.validate();
  ProjectionSet ps;
  ps.background = cfg.background;
  auto run = [&](int k) {
    auto t0 = std::chrono::steady_clock::now();
    render_view(m, cfg, k, ps.images[k - 1], ps.masks[k - 1]);
    ps.render_seconds[k - 1] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (cfg.threads <= 1) {
    for (int k = 1; k <= kNumViews; ++k) run(k);
  } else {
    std::vector<std::jthread> workers;
    const int n = std::min(cfg.threads, kNumViews);
    for (int t = 0; t < n; ++t) {
      workers.emplace_back([&, t] {
        for (int k = 1 + t; k <= kNumViews; k += n) run(k);
      });
    }
  }
  return ps;
}

void dump_projections(const ProjectionSet& ps, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  for (int k = 1; k <= kNumViews; ++k) {
    write_png(dir / (stem + "_view" + std::to_string(k) + ".png"), ps.images[k - 1]);
    write_png(dir / (stem + "_mask" + std::to_string(k) + ".png"), ps.masks[k - 1]);
  }
}

}  // namespace gms
