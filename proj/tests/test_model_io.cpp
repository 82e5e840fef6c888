#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "gms3dqa/error.hpp"
#include "gms3dqa/model_io.hpp"
#include "gms3dqa/rng.hpp"
#include "helpers.hpp"

using namespace gms;
using testing::TempDir;
using testing::write_text;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::Io;
}

Model3D random_cloud(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng r(seed);
  std::vector<Vec3> p(n);
  std::vector<Rgb> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = {scale * (r.uniform() - 0.3), scale * 2 * r.uniform(), scale * (r.uniform() + 4)};
    c[i] = {static_cast<std::uint8_t>(r.below(256)), static_cast<std::uint8_t>(r.below(256)),
            static_cast<std::uint8_t>(r.below(256))};
  }
  return make_model(ModelKind::PointCloud, p, c);
}

const char* kPlyHeader = "ply\nformat ascii 1.0\nelement vertex %d\nproperty float x\nproperty float y\nproperty float z\n"
                         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";

std::string ply_header(int n) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), kPlyHeader, n);
  return buf;
}

}  // namespace

TEST_CASE("one-point ascii PLY") {
  TempDir d;
  write_text(d / "p.ply", ply_header(1) + "0 0 0 255 0 0\n");
  const Model3D m = load_model(d / "p.ply");
  CHECK(m.kind == ModelKind::PointCloud);
  REQUIRE(m.vertex_count() == 1);
  CHECK(m.colors[0] == Rgb{255, 0, 0});
  CHECK(m.faces.empty());
}

TEST_CASE("OBJ triangle becomes a zero-based face") {
  TempDir d;
  write_text(d / "t.obj", "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  const Model3D m = load_model(d / "t.obj");
  CHECK(m.kind == ModelKind::TriangleMesh);
  REQUIRE(m.faces.size() == 1);
  CHECK(m.faces[0] == Face{0, 1, 2});
  CHECK(m.colors[0] == Rgb{128, 128, 128});
}

TEST_CASE("OBJ polygons are fan triangulated and colors scaled from [0,1]") {
  TempDir d;
  write_text(d / "q.obj", "v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 1 1 0 0 0 1\nv 0 1 0 0.5 0.5 0.5\nf 1/1 2/2 3/3 4/4\n");
  const Model3D m = load_model(d / "q.obj");
  REQUIRE(m.faces.size() == 2);
  CHECK(m.faces[0] == Face{0, 1, 2});
  CHECK(m.faces[1] == Face{0, 2, 3});
  CHECK(m.colors[0] == Rgb{255, 0, 0});
  CHECK(m.colors[3] == Rgb{128, 128, 128});
}

TEST_CASE("OBJ negative indices are relative") {
  TempDir d;
  write_text(d / "n.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  CHECK(load_model(d / "n.obj").faces[0] == Face{0, 1, 2});
}

TEST_CASE("texture references are rejected") {
  TempDir d;
  write_text(d / "t.obj", "mtllib a.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK(code_of([&] { load_model(d / "t.obj"); }) == Errc::UnsupportedFormat);
}

TEST_CASE("PLY with fewer records than declared") {
  TempDir d;
  std::string body = ply_header(10);
  for (int i = 0; i < 9; ++i) body += "0 0 0 1 2 3\n";
  write_text(d / "short.ply", body);
  CHECK(code_of([&] { load_model(d / "short.ply"); }) == Errc::ParseError);
}

TEST_CASE("loader errors") {
  TempDir d;
  write_text(d / "x.stl", "solid");
  CHECK(code_of([&] { load_model(d / "x.stl"); }) == Errc::UnsupportedFormat);
  CHECK(code_of([&] { load_model(d / "missing.ply"); }) == Errc::Io);
  write_text(d / "empty.ply", ply_header(0));
  CHECK(code_of([&] { load_model(d / "empty.ply"); }) == Errc::EmptyModel);
  write_text(d / "bad.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n");
  CHECK(code_of([&] { load_model(d / "bad.ply"); }) == Errc::ParseError);
  write_text(d / "junk.ply", ply_header(1) + "0 zero 0 1 2 3\n");
  CHECK(code_of([&] { load_model(d / "junk.ply"); }) == Errc::ParseError);
  write_text(d / "range.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
  CHECK(code_of([&] { load_model(d / "range.obj"); }) == Errc::ParseError);
  write_text(d / "big.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n");
  CHECK(code_of([&] { load_model(d / "big.ply"); }) == Errc::UnsupportedFormat);
}

TEST_CASE("make_model enforces invariants") {
  CHECK(code_of([] { make_model(ModelKind::PointCloud, {}, {}); }) == Errc::EmptyModel);
  CHECK(code_of([] { make_model(ModelKind::PointCloud, {{0, 0, 0}}, {}); }) == Errc::ParseError);
  CHECK(code_of([] { make_model(ModelKind::TriangleMesh, {{0, 0, 0}}, {{1, 2, 3}}, {}); }) == Errc::ParseError);
  CHECK(code_of([] { make_model(ModelKind::PointCloud, {{0, 0, 0}}, {{1, 2, 3}}, {{0, 0, 0}}); }) == Errc::ParseError);
}

TEST_CASE("binary little-endian PLY with mixed property types") {
  TempDir d;
  std::string s =
      "ply\nformat binary_little_endian 1.0\ncomment test\nelement vertex 2\nproperty double x\nproperty float y\n"
      "property int z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nproperty float nx\n"
      "element face 0\nproperty list uchar int vertex_indices\nend_header\n";
  auto put = [&s](const auto& v) { s.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(1.5);
  put(2.25f);
  put(std::int32_t{-3});
  put(std::uint8_t{10});
  put(std::uint8_t{20});
  put(std::uint8_t{30});
  put(0.0f);
  put(-1.0);
  put(0.5f);
  put(std::int32_t{7});
  put(std::uint8_t{1});
  put(std::uint8_t{2});
  put(std::uint8_t{3});
  put(0.0f);
  write_text(d / "b.ply", s);
  const Model3D m = load_model(d / "b.ply");
  REQUIRE(m.vertex_count() == 2);
  CHECK(m.positions[0] == Vec3{1.5, 2.25, -3});
  CHECK(m.positions[1] == Vec3{-1.0, 0.5, 7});
  CHECK(m.colors[0] == Rgb{10, 20, 30});
  CHECK(m.colors[1] == Rgb{1, 2, 3});
}

TEST_CASE("ascii PLY round trip is exact") {
  TempDir d;
  const Model3D m = random_cloud(500, 11, 3.7);
  write_ply_ascii(d / "r.ply", m);
  CHECK(load_model(d / "r.ply") == m);
}

TEST_CASE("binary PLY round trip preserves float precision and colors") {
  TempDir d;
  const Model3D m = random_cloud(200, 12);
  write_ply_binary(d / "r.ply", m);
  const Model3D back = load_model(d / "r.ply");
  REQUIRE(back.vertex_count() == m.vertex_count());
  for (std::size_t i = 0; i < m.vertex_count(); ++i) {
    for (int a = 0; a < 3; ++a) CHECK(back.positions[i][a] == static_cast<double>(static_cast<float>(m.positions[i][a])));
    CHECK(back.colors[i] == m.colors[i]);
  }
}

TEST_CASE("mesh round trips through PLY and OBJ") {
  TempDir d;
  const Model3D m = make_model(ModelKind::TriangleMesh, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                               {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {51, 102, 204}}, {{0, 1, 2}, {0, 2, 3}});
  write_ply_ascii(d / "m.ply", m);
  CHECK(load_model(d / "m.ply") == m);
  write_obj(d / "m.obj", m);
  CHECK(load_model(d / "m.obj") == m);
}

TEST_CASE("normalize a cube to the unit box") {
  std::vector<Vec3> p;
  for (int i = 0; i < 8; ++i) p.push_back({(i & 1) ? 10.0 : 0.0, (i & 2) ? 10.0 : 0.0, (i & 4) ? 10.0 : 0.0});
  const Model3D n = normalize_model(make_model(ModelKind::PointCloud, p, std::vector<Rgb>(8, Rgb{1, 2, 3})));
  for (const auto& v : n.positions) {
    for (double x : v) CHECK(std::abs(x) == 0.5);
  }
  CHECK(n.colors == std::vector<Rgb>(8, Rgb{1, 2, 3}));
}

TEST_CASE("normalize keeps the aspect ratio") {
  const Model3D m = make_model(ModelKind::PointCloud, {{0, 0, 0}, {10, 1, 1}}, {{0, 0, 0}, {0, 0, 0}});
  const Aabb b = bounding_box(normalize_model(m));
  CHECK(b.lo[0] == doctest::Approx(-0.5));
  CHECK(b.hi[0] == doctest::Approx(0.5));
  CHECK(b.lo[1] == doctest::Approx(-0.05));
  CHECK(b.hi[1] == doctest::Approx(0.05));
  CHECK(b.lo[2] == doctest::Approx(-0.05));
  CHECK(b.hi[2] == doctest::Approx(0.05));
}

TEST_CASE("normalize is idempotent and permutation invariant") {
  const Model3D m = random_cloud(300, 5, 17.0);
  const Model3D n = normalize_model(m);
  CHECK(normalize_model(n) == n);
  const Aabb b = bounding_box(n);
  double longest = 0;
  for (int a = 0; a < 3; ++a) {
    CHECK(b.lo[a] >= -0.5 - 1e-12);
    CHECK(b.hi[a] <= 0.5 + 1e-12);
    longest = std::max(longest, b.hi[a] - b.lo[a]);
  }
  CHECK(longest == doctest::Approx(1.0).epsilon(1e-12));

  Model3D rev = m;
  std::reverse(rev.positions.begin(), rev.positions.end());
  std::reverse(rev.colors.begin(), rev.colors.end());
  const Aabb br = bounding_box(normalize_model(rev));
  for (int a = 0; a < 3; ++a) {
    CHECK(br.lo[a] == b.lo[a]);
    CHECK(br.hi[a] == b.hi[a]);
  }
}

TEST_CASE("normalize rejects coincident points") {
  const Model3D m = make_model(ModelKind::PointCloud, {{1, 1, 1}, {1, 1, 1}}, {{0, 0, 0}, {0, 0, 0}});
  CHECK(code_of([&] { normalize_model(m); }) == Errc::DegenerateModel);
}

TEST_CASE("manifest parsing") {
  const DatasetManifest m = parse_manifest(
      R"([{"model_path":"a.ply","content_id":"c1","distortion":"n1","mos":3.2},
          {"model_path":"b.ply","content_id":"c2","mos":1}])",
      "/data");
  REQUIRE(m.size() == 2);
  CHECK(m.entries[0].mos == 3.2);
  CHECK(m.entries[1].distortion.empty());
  CHECK(m.resolve(m.entries[0]) == std::filesystem::path("/data/a.ply"));

  CHECK(code_of([] { parse_manifest(R"([{"model_path":"a","content_id":"c"}])"); }) == Errc::MissingField);
  CHECK(code_of([] { parse_manifest(R"([{"model_path":"a","content_id":"","mos":1}])"); }) == Errc::MissingField);
  CHECK(code_of([] { parse_manifest(R"([{"model_path":"a","content_id":"c","mos":null}])"); }) == Errc::NonFiniteMos);
  CHECK(code_of([] { parse_manifest(R"([{"model_path":"a","content_id":"c","mos":1e999}])"); }) == Errc::NonFiniteMos);
  CHECK(code_of([] { parse_manifest(R"({"not":"an array"})"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_manifest("[{"); }) == Errc::ParseError);
}

TEST_CASE("large manifest with nine groups round trips") {
  TempDir d;
  DatasetManifest m;
  for (int i = 0; i < 378; ++i) {
    m.entries.push_back({"pc" + std::to_string(i) + ".ply", "group" + std::to_string(i % 9),
                         "d" + std::to_string(i % 42), 1.0 + (i % 37) * 0.25});
  }
  write_manifest(d / "m.json", m);
  const DatasetManifest back = load_manifest(d / "m.json");
  CHECK(back == m);
  CHECK(back.size() == 378);
  CHECK(back.base_dir == d.path());
}

TEST_CASE("trainability requires two distinct labels") {
  DatasetManifest m;
  CHECK(code_of([&] { require_trainable(m); }) == Errc::EmptyManifest);
  m.entries = {{"a", "c", "", 2.0}, {"b", "c", "", 2.0}};
  CHECK(code_of([&] { require_trainable(m); }) == Errc::DegenerateLabels);
  m.entries[1].mos = 3.0;
  CHECK_NOTHROW(require_trainable(m));
}
