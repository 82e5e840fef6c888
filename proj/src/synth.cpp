#include "gms3dqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gms3dqa/error.hpp"
#include "gms3dqa/rng.hpp"

namespace gms {

namespace {

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

Rgb pattern(SynthShape shape, const Vec3& p) {
  constexpr double pi = std::numbers::pi;
  const double x = p[0], y = p[1], z = p[2];
  switch (shape) {
    case SynthShape::Sphere:
      return {to_u8(128 + 100 * std::sin(6 * pi * z)), to_u8(128 + 100 * std::cos(4 * pi * x)), 180};
    case SynthShape::Cube: {
      const bool check = (static_cast<int>(std::floor(x * 8) + std::floor(y * 8) + std::floor(z * 8)) & 1) != 0;
      return check ? Rgb{220, 60, 40} : Rgb{40, 90, 200};
    }
    case SynthShape::Torus:
      return {to_u8(200 * (x + 0.5)), to_u8(200 * (y + 0.5)), to_u8(120 + 100 * std::sin(10 * pi * z))};
    case SynthShape::Cylinder:
      return {to_u8(90 + 80 * std::sin(8 * pi * y)), 160, to_u8(128 + 110 * std::cos(std::atan2(z, x) * 3))};
  }
  return {128, 128, 128};
}

Vec3 sample_surface(SynthShape shape, Rng& rng) {
  constexpr double pi = std::numbers::pi;
  switch (shape) {
    case SynthShape::Sphere: {
      const double z = 2 * rng.uniform() - 1;
      const double t = 2 * pi * rng.uniform();
      const double r = std::sqrt(1 - z * z);
      return {0.5 * r * std::cos(t), 0.5 * r * std::sin(t), 0.5 * z};
    }
    case SynthShape::Cube: {
      const int face = static_cast<int>(rng.below(6));
      const double u = rng.uniform() - 0.5, v = rng.uniform() - 0.5;
      const double s = (face & 1) ? 0.5 : -0.5;
      switch (face / 2) {
        case 0: return {s, u, v};
        case 1: return {u, s, v};
        default: return {u, v, s};
      }
    }
    case SynthShape::Torus: {
      // Rejection on the area element (R + r cos v) keeps the density uniform.
      constexpr double R = 0.35, r = 0.15;
      for (;;) {
        const double u = 2 * pi * rng.uniform(), v = 2 * pi * rng.uniform();
        if (rng.uniform() * (R + r) > R + r * std::cos(v)) continue;
        const double w = R + r * std::cos(v);
        return {w * std::cos(u), r * std::sin(v), w * std::sin(u)};
      }
    }
    case SynthShape::Cylinder: {
      constexpr double r = 0.35, h = 1.0;
      const double side = 2 * pi * r * h, cap = pi * r * r;
      const double pick = rng.uniform() * (side + 2 * cap);
      const double t = 2 * pi * rng.uniform();
      if (pick < side) return {r * std::cos(t), h * (rng.uniform() - 0.5), r * std::sin(t)};
      const double rr = r * std::sqrt(rng.uniform());
      return {rr * std::cos(t), pick < side + cap ? -0.5 : 0.5, rr * std::sin(t)};
    }
  }
  return {0, 0, 0};
}

}  // namespace

std::string shape_name(SynthShape s) {
  switch (s) {
    case SynthShape::Sphere: return "sphere";
    case SynthShape::Cube: return "cube";
    case SynthShape::Torus: return "torus";
    case SynthShape::Cylinder: return "cylinder";
  }
  return "?";
}

Model3D make_shape(SynthShape shape, std::size_t points, std::uint64_t seed) {
  if (points == 0) throw Error(Errc::EmptyModel, "synthetic shape needs at least one point");
  Rng rng(seed);
  std::vector<Vec3> pos(points);
  std::vector<Rgb> col(points);
  for (std::size_t i = 0; i < points; ++i) {
    pos[i] = sample_surface(shape, rng);
    col[i] = pattern(shape, pos[i]);
  }
  return make_model(ModelKind::PointCloud, std::move(pos), std::move(col));
}

Model3D make_cube_mesh(double h, Rgb color) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.push_back({(i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h});
  const std::vector<Face> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                            {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return make_model(ModelKind::TriangleMesh, v, std::vector<Rgb>(8, color), f);
}

Corruption corruption_for_level(int level, int levels) {
  if (levels < 2 || level < 0 || level >= levels) throw Error(Errc::InvalidConfig, "distortion level out of range");
  const double s = static_cast<double>(level) / (levels - 1);
  return {40.0 * s, 1.0 - 0.7 * s};
}

Model3D corrupt(const Model3D& m, const Corruption& c, std::uint64_t seed) {
  if (m.kind != ModelKind::PointCloud) throw Error(Errc::InvalidConfig, "corrupt() applies to point clouds");
  if (!(c.keep_fraction > 0 && c.keep_fraction <= 1) || c.noise_sigma < 0) {
    throw Error(Errc::InvalidConfig, "invalid corruption parameters");
  }
  Rng noise(derive_seed(seed, "noise"));
  std::vector<Rgb> colors = m.colors;
  if (c.noise_sigma > 0) {
    for (auto& rgb : colors) {
      for (auto& ch : rgb) ch = to_u8(ch + c.noise_sigma * noise.normal());
    }
  }
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.keep_fraction * m.vertex_count())));
  std::vector<std::size_t> idx(m.vertex_count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng pick(derive_seed(seed, "decimate"));
  pick.shuffle(std::span<std::size_t>(idx));
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  std::vector<Vec3> pos;
  std::vector<Rgb> col;
  pos.reserve(keep);
  col.reserve(keep);
  for (std::size_t i : idx) {
    pos.push_back(m.positions[i]);
    col.push_back(colors[i]);
  }
  return make_model(ModelKind::PointCloud, std::move(pos), std::move(col));
}

DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir, const SynthCorpusSpec& spec) {
  if (spec.contents < 1 || spec.levels < 2) throw Error(Errc::InvalidConfig, "corpus needs >= 1 content and >= 2 levels");
  std::filesystem::create_directories(dir);
  DatasetManifest manifest;
  manifest.base_dir = dir;
  for (int c = 0; c < spec.contents; ++c) {
    const auto shape = static_cast<SynthShape>(c % kSynthShapeCount);
    const std::string id = shape_name(shape) + std::to_string(c / kSynthShapeCount);
    const Model3D ref = make_shape(shape, spec.points, derive_seed(spec.seed, "content/" + std::to_string(c)));
    for (int l = 0; l < spec.levels; ++l) {
      const Model3D m = corrupt(ref, corruption_for_level(l, spec.levels),
                                derive_seed(spec.seed, "corrupt/" + std::to_string(c) + "/" + std::to_string(l)));
      const std::string file = id + "_l" + std::to_string(l) + ".ply";
      write_ply_binary(dir / file, m);
      manifest.entries.push_back({file, id, "level" + std::to_string(l), 5.0 - 4.0 * l / (spec.levels - 1)});
    }
  }
  write_manifest(dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace gms
