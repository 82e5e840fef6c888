#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "gms3dqa/image.hpp"

namespace gms {

using Vec3 = std::array<double, 3>;
using Face = std::array<std::uint32_t, 3>;

enum class ModelKind { PointCloud, TriangleMesh };

/// A point cloud or vertex-colored triangle mesh.
///
/// Construct through `make_model`, which enforces the structural invariants:
/// nonempty positions, one color per vertex, faces empty iff point cloud,
/// every face index in range.
struct Model3D {
  ModelKind kind = ModelKind::PointCloud;
  std::vector<Vec3> positions;
  std::vector<Rgb> colors;
  std::vector<Face> faces;

  std::size_t vertex_count() const { return positions.size(); }
  bool operator==(const Model3D&) const = default;
};

Model3D make_model(ModelKind kind, std::vector<Vec3> positions, std::vector<Rgb> colors, std::vector<Face> faces = {});

struct Aabb {
  Vec3 lo;
  Vec3 hi;
};

Aabb bounding_box(const Model3D& m);

/// Loads .ply (point cloud; ascii or binary_little_endian) or .obj (mesh).
Model3D load_model(const std::filesystem::path& path);

/// Isotropic scale + translation: AABB centered at origin, longest edge 1.
Model3D normalize_model(const Model3D& m);

/// ASCII PLY with doubles printed round-trip exact. Meshes get a face element.
void write_ply_ascii(const std::filesystem::path& path, const Model3D& m);
void write_ply_binary(const std::filesystem::path& path, const Model3D& m);
void write_obj(const std::filesystem::path& path, const Model3D& m);

struct ManifestEntry {
  std::string model_path;
  std::string content_id;
  std::string distortion;
  double mos = 0.0;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  /// Directory relative model paths are resolved against; not serialized.
  std::filesystem::path base_dir;

  std::size_t size() const { return entries.size(); }
  std::filesystem::path resolve(const ManifestEntry& e) const;
  bool operator==(const DatasetManifest& o) const { return entries == o.entries; }
};

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
std::string manifest_to_json(const DatasetManifest& manifest);

/// Throws DegenerateLabels unless at least two distinct mos values exist.
void require_trainable(const DatasetManifest& manifest);

}  // namespace gms
