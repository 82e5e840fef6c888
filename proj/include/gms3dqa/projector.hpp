#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "gms3dqa/image.hpp"
#include "gms3dqa/model_io.hpp"

namespace gms {

struct RenderConfig {
  int resolution = 1024;
  double splat_radius = 1.0;
  Rgb background{255, 255, 255};
  /// Views rendered concurrently when > 1. Output does not depend on it.
  int threads = 1;

  void validate() const;
};

inline constexpr int kNumViews = 6;

/// Camera frame for one cube face. The camera sits on the `axis` side of the
/// model looking toward the origin; larger depth is nearer.
struct ViewFrame {
  Vec3 axis;
  Vec3 right;
  Vec3 up;
  const char* name;
};

/// Views 1..6 are +X, -X, +Y, -Y, +Z, -Z (stored at index k-1).
const std::array<ViewFrame, kNumViews>& view_frames();

struct ProjectionSet {
  std::array<RgbImage, kNumViews> images;
  std::array<Mask, kNumViews> masks;
  std::array<double, kNumViews> render_seconds{};
  Rgb background{255, 255, 255};

  int resolution() const { return images[0].width; }
};

/// Renders the six orthographic projections of the [-0.5, 0.5]^3 volume.
/// The model is expected to be normalized (see normalize_model).
ProjectionSet render_projections(const Model3D& m, const RenderConfig& cfg);

/// Renders a single view (k in 1..6).
void render_view(const Model3D& m, const RenderConfig& cfg, int k, RgbImage& image, Mask& mask);

/// Writes <stem>_view{1..6}.png and <stem>_mask{1..6}.png into dir.
void dump_projections(const ProjectionSet& ps, const std::filesystem::path& dir, const std::string& stem);

}  // namespace gms
