#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gms3dqa/features.hpp"
#include "gms3dqa/model_io.hpp"
#include "gms3dqa/projector.hpp"
#include "gms3dqa/quality_loss.hpp"
#include "gms3dqa/sampler.hpp"

namespace gms {

inline constexpr int kDefaultHidden = 64;

/// Two-stage regression head: score = w2 . relu(W1 f + b1) + b2.
struct HeadWeights {
  int feature_dim = 0;
  int hidden = 0;
  std::vector<double> w1;  // hidden x feature_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  /// All weights zero.
  static HeadWeights zeros(int feature_dim, int hidden = kDefaultHidden);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
  static HeadWeights xavier(int feature_dim, int hidden, std::uint64_t seed);

  std::size_t parameter_count() const;
  bool operator==(const HeadWeights&) const = default;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 1e-4;
  double decay = 0.9;
  int decay_every = 5;
  int batch_size = 32;
  int epochs = 50;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Sgd;
  LossConfig loss;

  void validate() const;
  double learning_rate_at(int epoch) const;
};

struct PredictorState {
  FeatureExtractorSpec extractor;
  HeadWeights head;
  TrainConfig train;
};

/// Everything a pipeline run needs besides the data.
struct PipelineConfig {
  RenderConfig render;
  GridSpec grid;
  TrainConfig train;
  FeatureExtractorSpec extractor;
  int hidden = kDefaultHidden;
};

/// Forward pass that keeps the pre-activation for back-propagation.
struct HeadForward {
  std::vector<double> pre;  // W1 f + b1
  double score = 0.0;
};

HeadForward head_forward(const HeadWeights& head, std::span<const double> features);

/// Throws ShapeMismatch when features.size() != feature_dim.
double regress(std::span<const double> features, const HeadWeights& head);

/// Gradient of sum_b g_b * score(f_b) with respect to every head parameter,
/// laid out like HeadWeights.
struct HeadGradient {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
};

HeadGradient head_backward(const HeadWeights& head, const std::vector<std::vector<double>>& features,
                           const std::vector<HeadForward>& forward, std::span<const double> dscore);

struct StageTimings {
  double load = 0, render = 0, sample = 0, extract = 0, regress = 0;
};

struct Prediction {
  double score = 0.0;
  StageTimings timings;
};

/// Render -> QMM -> features -> head, for an already loaded model. The model
/// is normalized first.
Prediction predict(const Model3D& model, const RenderConfig& render, const GridSpec& grid, const HeadWeights& head,
                   FeatureExtractor& extractor);

struct EpochStats {
  double total = 0, mse = 0, rank = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  PredictorState state;
  double wall_seconds = 0.0;
};

/// Per-entry projections rendered once; QMMs are resampled from them every
/// epoch with seed derive_seed(train.seed, "epoch/<e>/sample/<i>").
class TrainingSet {
 public:
  TrainingSet(const DatasetManifest& manifest, const RenderConfig& render);

  std::size_t size() const { return labels_.size(); }
  std::span<const double> labels() const { return labels_; }
  const ProjectionSet& projections(std::size_t i) const { return projections_[i]; }

 private:
  std::vector<ProjectionSet> projections_;
  std::vector<double> labels_;
};

/// Seed for the QMM of sample i in epoch e.
std::uint64_t sample_seed(std::uint64_t train_seed, int epoch, std::size_t sample);

/// Mini-batch training of the head with the combined loss. `state.head` is
/// the starting point; pass HeadWeights::xavier for a fresh run.
TrainReport train(const TrainingSet& data, const GridSpec& grid, PredictorState state, FeatureExtractor& extractor);
TrainReport train(const DatasetManifest& manifest, const PipelineConfig& cfg, PredictorState state,
                  FeatureExtractor& extractor);

/// Adam moments; unused by plain gradient descent.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One optimizer step on a precomputed feature batch. Exposed for
/// finite-difference checks of the update rule.
EpochStats train_step(HeadWeights& head, const std::vector<std::vector<double>>& features,
                      std::span<const double> labels, const TrainConfig& cfg, double learning_rate,
                      OptimizerState& opt);

/// Binary head file: magic "QMM3DQA1", then little-endian u32 feature_dim,
/// u32 hidden, and float64 blocks W1 (row-major), b1, w2, b2. A JSON sidecar
/// `<path>.json` records the extractor and training configuration.
void save_state(const std::filesystem::path& path, const PredictorState& state);
PredictorState load_state(const std::filesystem::path& path);

}  // namespace gms
