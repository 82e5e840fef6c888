#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gms3dqa/image.hpp"

namespace gms {

inline constexpr int kDefaultFeatureDim = 768;

enum class ExtractorKind { Builtin, Bridge };

struct FeatureExtractorSpec {
  ExtractorKind kind = ExtractorKind::Builtin;
  int feature_dim = kDefaultFeatureDim;
  /// Bridge executable; empty means $QMM3DQA_BRIDGE.
  std::string bridge_command;
};

/// Maps a spliced mini-patch image to a fixed-length feature vector.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual int feature_dim() const = 0;
  virtual std::string name() const = 0;

  /// `grid` is the patch lattice side: the image holds grid x grid patches.
  virtual std::vector<double> extract(const RgbImage& image, int grid) = 0;

  /// Number of extract() calls so far.
  std::uint64_t invocations() const { return invocations_; }

 protected:
  std::uint64_t invocations_ = 0;
};

/// Deterministic hand-crafted statistics standing in for a learned backbone.
///
/// Per patch and channel: mean, standard deviation, mean gradient magnitude,
/// gradient-magnitude standard deviation (12 values for RGB), all on a [0, 1]
/// intensity scale. Each of the 12 is pooled over the patch lattice by mean,
/// std, min and max (48 values). Per image quadrant, a 16-bin luminance
/// histogram and a 16-bin luminance-gradient histogram follow as fractions
/// (128 values). The 176 values are zero-padded or truncated to feature_dim.
class BuiltinExtractor final : public FeatureExtractor {
 public:
  explicit BuiltinExtractor(int feature_dim = kDefaultFeatureDim);

  int feature_dim() const override { return dim_; }
  std::string name() const override { return "builtin"; }
  std::vector<double> extract(const RgbImage& image, int grid) override;

  static constexpr int kStatsPerPatch = 12;
  static constexpr int kPooledCount = kStatsPerPatch * 4;
  static constexpr int kHistBins = 16;
  static constexpr int kRawCount = kPooledCount + 4 * 2 * kHistBins;

  /// Offsets of the named groups inside the vector.
  static constexpr int kPooledMeanOffset = 0;  // 12 lattice means
  static constexpr int kPooledStdOffset = 12;
  static constexpr int kPooledMinOffset = 24;
  static constexpr int kPooledMaxOffset = 36;
  static constexpr int kHistOffset = kPooledCount;

 private:
  int dim_;
};

/// Client for an external feature server speaking newline-delimited JSON
/// over stdin/stdout:
///   {"op":"hello"}                       -> {"ok":true,"feature_dim":768}
///   {"op":"features","qmm_path":"x.png"} -> {"ok":true,"features":[...]}
///   {"op":"score","qmm_path":"x.png"}    -> {"ok":true,"score":3.1}
/// Feature vectors are cached by a hash of the image bytes.
class BridgeExtractor final : public FeatureExtractor {
 public:
  /// Spawns `command` (a path to an executable) and performs the hello
  /// handshake. Throws Errc::Bridge on failure.
  explicit BridgeExtractor(const std::string& command);
  ~BridgeExtractor() override;

  BridgeExtractor(const BridgeExtractor&) = delete;
  BridgeExtractor& operator=(const BridgeExtractor&) = delete;

  int feature_dim() const override { return dim_; }
  std::string name() const override { return "bridge"; }
  std::vector<double> extract(const RgbImage& image, int grid) override;

  /// Bypasses the cache.
  std::vector<double> fetch(const RgbImage& image);
  std::size_t cache_size() const { return cache_.size(); }
  std::uint64_t requests_sent() const { return requests_; }

 private:
  std::string request(const std::string& line);
  void shutdown();

  int to_child_ = -1;
  int from_child_ = -1;
  int pid_ = -1;
  int dim_ = 0;
  std::uint64_t requests_ = 0;
  std::string read_buffer_;
  std::string scratch_dir_;
  std::map<std::uint64_t, std::vector<double>> cache_;
};

/// Hash of dimensions and pixel bytes.
std::uint64_t image_hash(const RgbImage& image);

/// Builds the extractor a spec describes.
std::unique_ptr<FeatureExtractor> make_extractor(const FeatureExtractorSpec& spec);

}  // namespace gms
