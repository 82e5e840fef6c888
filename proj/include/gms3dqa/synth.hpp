#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gms3dqa/model_io.hpp"

namespace gms {

enum class SynthShape { Sphere, Cube, Torus, Cylinder };

inline constexpr int kSynthShapeCount = 4;

std::string shape_name(SynthShape s);

/// Points sampled on the surface of a shape inside [-0.5, 0.5]^3, colored by
/// a smooth shape-specific pattern.
Model3D make_shape(SynthShape shape, std::size_t points, std::uint64_t seed);

/// Axis-aligned cube as 12 vertex-colored triangles.
Model3D make_cube_mesh(double half_edge, Rgb color);

struct Corruption {
  double noise_sigma = 0.0;    // additive color noise, 8-bit units
  double keep_fraction = 1.0;  // fraction of points surviving decimation
};

/// Level 0 is pristine; severity grows linearly to level `levels - 1`.
Corruption corruption_for_level(int level, int levels);

/// Applies color noise then decimation. Point clouds only.
Model3D corrupt(const Model3D& m, const Corruption& c, std::uint64_t seed);

struct SynthCorpusSpec {
  int contents = 4;
  int levels = 6;
  std::size_t points = 40000;
  std::uint64_t seed = 0;
};

/// Writes binary PLYs plus manifest.json into dir and returns the manifest.
/// MOS falls linearly from 5 (level 0) to 1 (last level).
DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir, const SynthCorpusSpec& spec);

}  // namespace gms
