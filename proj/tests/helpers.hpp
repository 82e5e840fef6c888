#pragma once

#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "gms3dqa/projector.hpp"

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "gms3dqa-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Every view fully covered; pixel values encode (view, row, col) so copied
/// windows can be traced back.
inline gms::ProjectionSet coded_projections(int res) {
  gms::ProjectionSet ps;
  for (int k = 0; k < gms::kNumViews; ++k) {
    ps.images[k] = gms::RgbImage(res, res);
    ps.masks[k] = gms::Mask(res, res);
    for (int r = 0; r < res; ++r) {
      for (int c = 0; c < res; ++c) {
        auto* px = ps.images[k].pixel(r, c);
        px[0] = static_cast<std::uint8_t>(r * 7 + c * 3 + k * 40);
        px[1] = static_cast<std::uint8_t>(r ^ c);
        px[2] = static_cast<std::uint8_t>(k * 37 + (r >> 3) + (c >> 2));
        ps.masks[k].at(r, c) = 1;
      }
    }
  }
  return ps;
}

}  // namespace testing
