#include "gms3dqa/model_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gms3dqa/error.hpp"

namespace gms {

namespace {

constexpr Rgb kMidGray{128, 128, 128};

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& ctx) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(Errc::ParseError, ctx + ": bad number '" + tok + "'");
  }
  return v;
}

std::uint8_t clamp_color(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// ---------------------------------------------------------------- PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::Int8;
  if (name == "uchar" || name == "uint8") return PlyType::UInt8;
  if (name == "short" || name == "int16") return PlyType::Int16;
  if (name == "ushort" || name == "uint16") return PlyType::UInt16;
  if (name == "int" || name == "int32") return PlyType::Int32;
  if (name == "uint" || name == "uint32") return PlyType::UInt32;
  if (name == "float" || name == "float32") return PlyType::Float32;
  if (name == "double" || name == "float64") return PlyType::Float64;
  throw Error(Errc::ParseError, "unknown PLY property type '" + name + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

bool is_float(PlyType t) { return t == PlyType::Float32 || t == PlyType::Float64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

double decode_binary(PlyType t, const char* p) {
  switch (t) {
    case PlyType::Int8: return read_le<std::int8_t>(p);
    case PlyType::UInt8: return read_le<std::uint8_t>(p);
    case PlyType::Int16: return read_le<std::int16_t>(p);
    case PlyType::UInt16: return read_le<std::uint16_t>(p);
    case PlyType::Int32: return read_le<std::int32_t>(p);
    case PlyType::UInt32: return read_le<std::uint32_t>(p);
    case PlyType::Float32: return read_le<float>(p);
    case PlyType::Float64: return read_le<double>(p);
  }
  return 0;
}

/// Sequential reader over either ascii tokens or little-endian binary.
class PlyBody {
 public:
  PlyBody(std::string body, bool binary) : body_(std::move(body)), binary_(binary) {}

  double next(PlyType t, const std::string& ctx) {
    if (binary_) {
      std::size_t n = ply_size(t);
      if (pos_ + n > body_.size()) throw Error(Errc::ParseError, ctx + ": unexpected end of binary data");
      double v = decode_binary(t, body_.data() + pos_);
      pos_ += n;
      return v;
    }
    while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    if (pos_ >= body_.size()) throw Error(Errc::ParseError, ctx + ": fewer records than declared");
    std::size_t start = pos_;
    while (pos_ < body_.size() && !std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    return parse_double(body_.substr(start, pos_ - start), ctx);
  }

  /// ascii: every record must sit on its own line.
  void end_record(const std::string& ctx) {
    if (binary_) return;
    while (pos_ < body_.size() && body_[pos_] != '\n') {
      if (!std::isspace(static_cast<unsigned char>(body_[pos_]))) {
        throw Error(Errc::ParseError, ctx + ": trailing tokens in record");
      }
      ++pos_;
    }
  }

 private:
  std::string body_;
  bool binary_;
  std::size_t pos_ = 0;
};

Model3D load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::istringstream header(content);
  std::string line;
  if (!std::getline(header, line) || line.substr(0, 3) != "ply") {
    throw Error(Errc::ParseError, path.string() + ": missing 'ply' magic");
  }
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool ended = false;
  while (std::getline(header, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw Error(Errc::ParseError, "bad format line");
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw Error(Errc::UnsupportedFormat, "PLY format '" + tok[1] + "' is not supported");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw Error(Errc::ParseError, "bad element line: " + line);
      PlyElement e;
      e.name = tok[1];
      e.count = static_cast<std::size_t>(parse_double(tok[2], "element count"));
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw Error(Errc::ParseError, "property before element");
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.is_list = true;
        p.count_type = ply_type(tok[2]);
        p.type = ply_type(tok[3]);
        p.name = tok[4];
      } else if (tok.size() == 3) {
        p.type = ply_type(tok[1]);
        p.name = tok[2];
      } else {
        throw Error(Errc::ParseError, "bad property line: " + line);
      }
      elements.back().props.push_back(p);
    } else if (tok[0] == "end_header") {
      ended = true;
      break;
    } else {
      throw Error(Errc::ParseError, "unexpected header line: " + line);
    }
  }
  if (!ended || !have_format) throw Error(Errc::ParseError, path.string() + ": incomplete PLY header");

  auto body_start = static_cast<std::size_t>(header.tellg());
  PlyBody body(content.substr(body_start), binary);

  std::vector<Vec3> positions;
  std::vector<Rgb> colors;
  std::vector<Face> faces;
  bool has_color = false;
  bool vertex_seen = false;

  for (const auto& e : elements) {
    const std::string ctx = path.string() + " element '" + e.name + "'";
    if (e.name == "vertex") {
      vertex_seen = true;
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
        const auto& n = e.props[i].name;
        if (n == "x") ix = i;
        if (n == "y") iy = i;
        if (n == "z") iz = i;
        if (n == "red" || n == "r") ir = i;
        if (n == "green" || n == "g") ig = i;
        if (n == "blue" || n == "b") ib = i;
      }
      if (ix < 0 || iy < 0 || iz < 0) throw Error(Errc::ParseError, ctx + ": missing x/y/z");
      has_color = ir >= 0 && ig >= 0 && ib >= 0;
      positions.resize(e.count);
      colors.assign(e.count, kMidGray);
      std::vector<double> vals(e.props.size());
      for (std::size_t v = 0; v < e.count; ++v) {
        for (std::size_t p = 0; p < e.props.size(); ++p) {
          const auto& prop = e.props[p];
          if (prop.is_list) {
            auto n = static_cast<std::size_t>(body.next(prop.count_type, ctx));
            for (std::size_t k = 0; k < n; ++k) body.next(prop.type, ctx);
            vals[p] = 0;
          } else {
            vals[p] = body.next(prop.type, ctx);
          }
        }
        body.end_record(ctx);
        positions[v] = {vals[ix], vals[iy], vals[iz]};
        if (has_color) {
          auto conv = [&](int idx) {
            double c = vals[idx];
            return clamp_color(is_float(e.props[idx].type) ? c * 255.0 : c);
          };
          colors[v] = {conv(ir), conv(ig), conv(ib)};
        }
      }
    } else if (e.name == "face") {
      for (std::size_t f = 0; f < e.count; ++f) {
        for (const auto& prop : e.props) {
          if (!prop.is_list) {
            body.next(prop.type, ctx);
            continue;
          }
          auto n = static_cast<std::size_t>(body.next(prop.count_type, ctx));
          std::vector<std::uint32_t> idx(n);
          for (auto& i : idx) {
            double d = body.next(prop.type, ctx);
            if (d < 0) throw Error(Errc::ParseError, ctx + ": negative face index");
            i = static_cast<std::uint32_t>(d);
          }
          if (prop.name == "vertex_indices" || prop.name == "vertex_index") {
            for (std::size_t k = 1; k + 1 < n; ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
          }
        }
        body.end_record(ctx);
      }
    } else {
      for (std::size_t r = 0; r < e.count; ++r) {
        for (const auto& prop : e.props) {
          if (prop.is_list) {
            auto n = static_cast<std::size_t>(body.next(prop.count_type, ctx));
            for (std::size_t k = 0; k < n; ++k) body.next(prop.type, ctx);
          } else {
            body.next(prop.type, ctx);
          }
        }
        body.end_record(ctx);
      }
    }
  }
  if (!vertex_seen || positions.empty()) throw Error(Errc::EmptyModel, path.string() + ": no vertices");
  auto kind = faces.empty() ? ModelKind::PointCloud : ModelKind::TriangleMesh;
  return make_model(kind, std::move(positions), std::move(colors), std::move(faces));
}

// ---------------------------------------------------------------- OBJ

Model3D load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<Vec3> positions;
  std::vector<Rgb> colors;
  std::vector<Face> faces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (tok[0] == "v") {
      if (tok.size() != 4 && tok.size() != 7) throw Error(Errc::ParseError, ctx + ": vertex needs 3 or 6 values");
      positions.push_back({parse_double(tok[1], ctx), parse_double(tok[2], ctx), parse_double(tok[3], ctx)});
      if (tok.size() == 7) {
        colors.push_back({clamp_color(parse_double(tok[4], ctx) * 255.0), clamp_color(parse_double(tok[5], ctx) * 255.0),
                          clamp_color(parse_double(tok[6], ctx) * 255.0)});
      } else {
        colors.push_back(kMidGray);
      }
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw Error(Errc::ParseError, ctx + ": face needs at least 3 vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        std::string first = tok[k].substr(0, tok[k].find('/'));
        long long i = 0;
        auto [ptr, ec] = std::from_chars(first.data(), first.data() + first.size(), i);
        if (ec != std::errc() || ptr != first.data() + first.size() || i == 0) {
          throw Error(Errc::ParseError, ctx + ": bad face index '" + tok[k] + "'");
        }
        long long resolved = i > 0 ? i - 1 : static_cast<long long>(positions.size()) + i;
        if (resolved < 0) throw Error(Errc::ParseError, ctx + ": face index out of range");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
    } else if (tok[0] == "vt" || tok[0] == "mtllib" || tok[0] == "usemtl") {
      throw Error(Errc::UnsupportedFormat, ctx + ": textured OBJ is not supported (vertex colors only)");
    }
    // vn, o, g, s and other statements carry nothing we render.
  }
  if (positions.empty()) throw Error(Errc::EmptyModel, path.string() + ": no vertices");
  auto kind = faces.empty() ? ModelKind::PointCloud : ModelKind::TriangleMesh;
  return make_model(kind, std::move(positions), std::move(colors), std::move(faces));
}

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Model3D make_model(ModelKind kind, std::vector<Vec3> positions, std::vector<Rgb> colors, std::vector<Face> faces) {
  if (positions.empty()) throw Error(Errc::EmptyModel, "model has no vertices");
  if (colors.size() != positions.size()) {
    throw Error(Errc::ParseError, "color count " + std::to_string(colors.size()) + " != vertex count " +
                                      std::to_string(positions.size()));
  }
  if ((kind == ModelKind::PointCloud) != faces.empty()) {
    throw Error(Errc::ParseError, "faces must be empty exactly for point clouds");
  }
  for (const auto& f : faces) {
    for (auto i : f) {
      if (i >= positions.size()) throw Error(Errc::ParseError, "face index " + std::to_string(i) + " out of range");
    }
  }
  for (const auto& p : positions) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
      throw Error(Errc::ParseError, "non-finite vertex coordinate");
    }
  }
  Model3D m;
  m.kind = kind;
  m.positions = std::move(positions);
  m.colors = std::move(colors);
  m.faces = std::move(faces);
  return m;
}

Aabb bounding_box(const Model3D& m) {
  Aabb box{m.positions.front(), m.positions.front()};
  for (const auto& p : m.positions) {
    for (int a = 0; a < 3; ++a) {
      box.lo[a] = std::min(box.lo[a], p[a]);
      box.hi[a] = std::max(box.hi[a], p[a]);
    }
  }
  return box;
}

Model3D load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::Io, "no such file: " + path.string());
  const auto ext = lower_ext(path);
  if (ext == ".ply") return load_ply(path);
  if (ext == ".obj") return load_obj(path);
  throw Error(Errc::UnsupportedFormat, "unsupported model extension '" + ext + "'");
}

Model3D normalize_model(const Model3D& m) {
  const Aabb box = bounding_box(m);
  Vec3 center;
  double edge = 0;
  for (int a = 0; a < 3; ++a) {
    center[a] = 0.5 * (box.lo[a] + box.hi[a]);
    edge = std::max(edge, box.hi[a] - box.lo[a]);
  }
  if (!(edge > 0) || !std::isfinite(edge)) throw Error(Errc::DegenerateModel, "all vertices coincide");

  // Already normalized up to rounding: leave untouched so the map is idempotent.
  constexpr double kTol = 1e-12;
  if (std::abs(edge - 1.0) <= kTol && std::abs(center[0]) <= kTol && std::abs(center[1]) <= kTol &&
      std::abs(center[2]) <= kTol) {
    return m;
  }

  Model3D out = m;
  for (auto& p : out.positions) {
    for (int a = 0; a < 3; ++a) p[a] = (p[a] - center[a]) / edge;
  }
  return out;
}

void write_ply_ascii(const std::filesystem::path& path, const Model3D& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << m.positions.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (!m.faces.empty()) out << "element face " << m.faces.size() << "\nproperty list uchar int vertex_indices\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    const auto& p = m.positions[i];
    const auto& c = m.colors[i];
    out << fmt_double(p[0]) << ' ' << fmt_double(p[1]) << ' ' << fmt_double(p[2]) << ' ' << int(c[0]) << ' '
        << int(c[1]) << ' ' << int(c[2]) << '\n';
  }
  for (const auto& f : m.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void write_ply_binary(const std::filesystem::path& path, const Model3D& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << m.positions.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  static_assert(std::endian::native == std::endian::little, "binary PLY writer assumes a little-endian host");
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    float xyz[3] = {static_cast<float>(m.positions[i][0]), static_cast<float>(m.positions[i][1]),
                    static_cast<float>(m.positions[i][2])};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    out.write(reinterpret_cast<const char*>(m.colors[i].data()), 3);
  }
}

void write_obj(const std::filesystem::path& path, const Model3D& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    const auto& p = m.positions[i];
    const auto& c = m.colors[i];
    out << "v " << fmt_double(p[0]) << ' ' << fmt_double(p[1]) << ' ' << fmt_double(p[2]) << ' '
        << fmt_double(c[0] / 255.0) << ' ' << fmt_double(c[1] / 255.0) << ' ' << fmt_double(c[2] / 255.0) << '\n';
  }
  for (const auto& f : m.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

// ---------------------------------------------------------------- manifest

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.model_path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(Errc::NonFiniteMos, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
  if (!doc.is_array()) throw Error(Errc::ParseError, "manifest must be a JSON array");

  DatasetManifest manifest;
  manifest.base_dir = base_dir;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    const std::string ctx = "manifest entry " + std::to_string(i);
    if (!rec.is_object()) throw Error(Errc::ParseError, ctx + " is not an object");
    for (const char* key : {"model_path", "content_id", "mos"}) {
      if (!rec.contains(key)) throw Error(Errc::MissingField, ctx + " lacks \"" + key + "\"");
    }
    ManifestEntry e;
    if (!rec["model_path"].is_string() || !rec["content_id"].is_string()) {
      throw Error(Errc::ParseError, ctx + ": model_path and content_id must be strings");
    }
    e.model_path = rec["model_path"].get<std::string>();
    e.content_id = rec["content_id"].get<std::string>();
    if (e.content_id.empty()) throw Error(Errc::MissingField, ctx + ": empty content_id");
    if (rec.contains("distortion")) {
      if (!rec["distortion"].is_string()) throw Error(Errc::ParseError, ctx + ": distortion must be a string");
      e.distortion = rec["distortion"].get<std::string>();
    }
    const auto& mos = rec["mos"];
    if (mos.is_number()) {
      e.mos = mos.get<double>();
    } else if (mos.is_null() || mos.is_string()) {
      throw Error(Errc::NonFiniteMos, ctx + ": mos is not a finite number");
    } else {
      throw Error(Errc::ParseError, ctx + ": mos must be a number");
    }
    if (!std::isfinite(e.mos)) throw Error(Errc::NonFiniteMos, ctx + ": mos is not finite");
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_manifest(text, path.parent_path());
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    doc.push_back({{"model_path", e.model_path}, {"content_id", e.content_id}, {"distortion", e.distortion},
                   {"mos", e.mos}});
  }
  return doc.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << manifest_to_json(manifest);
}

void require_trainable(const DatasetManifest& manifest) {
  if (manifest.entries.empty()) throw Error(Errc::EmptyManifest, "manifest has no entries");
  std::set<double> distinct;
  for (const auto& e : manifest.entries) distinct.insert(e.mos);
  if (distinct.size() < 2) throw Error(Errc::DegenerateLabels, "manifest needs at least two distinct mos values");
}

}  // namespace gms
