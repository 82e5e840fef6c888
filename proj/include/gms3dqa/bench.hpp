#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gms3dqa/evaluation.hpp"
#include "gms3dqa/predictor.hpp"

namespace gms {

enum class AblationMode { ModeI_ResizeCrop6, ModeII_SixGMS, ModeIII_QMM };

std::string mode_name(AblationMode m);
/// Accepts "I", "II", "III" (case-insensitive).
AblationMode parse_mode(const std::string& s);

struct StageStats {
  double mean = 0, std = 0, median = 0;
  std::vector<double> samples;  // seconds per trial, summed over models
};

StageStats summarize(std::vector<double> samples);

struct BenchConfig {
  RenderConfig render;
  GridSpec grid;
  FeatureExtractorSpec extractor;
  int hidden = kDefaultHidden;
  /// Head used for the regress stage; xavier(derive_seed(seed, "init")) when unset.
  std::optional<HeadWeights> head;
  std::uint64_t seed = 0;
};

struct BenchReport {
  AblationMode mode = AblationMode::ModeIII_QMM;
  int trials = 0;
  std::size_t models = 0;
  StageStats load, render, sample, extract, regress, total;
  /// Per scored model; exact and mode-determined.
  std::uint64_t extractor_invocations = 0;
  std::uint64_t processed_pixels = 0;
  std::size_t head_params = 0;
  int threads = 1;
};

/// Times the pipeline under one ablation mode. One warm-up trial runs first
/// and is discarded. Throws InvalidConfig for an empty model list or
/// trials < 3.
BenchReport run_benchmark(const std::vector<std::filesystem::path>& models, const BenchConfig& cfg, AblationMode mode,
                          int trials);

std::size_t count_head_params(const PredictorState& state);

/// Aligned text table of the stage statistics.
std::string bench_table(const BenchReport& r);

struct SweepPoint {
  int num_views = 0;
  CrossValidationReport metrics;
  BenchReport bench;
};

struct SweepReport {
  std::vector<SweepPoint> points;
};

using SweepModelFactory = std::function<std::unique_ptr<QualityModel>(const PipelineConfig& cfg, int fold)>;

/// For each n, evaluates with num_views = n by k-fold cross-validation and
/// times ModeIII on the manifest's models. `factory` defaults to the trained
/// pipeline.
SweepReport projection_sweep(const DatasetManifest& manifest, const PipelineConfig& cfg, const std::vector<int>& n_values,
                             int k, int trials, const SweepModelFactory& factory = {});

/// Accuracy per projection count. Timings live in bench_timings_json.
std::string sweep_csv(const SweepReport& r);

}  // namespace gms
