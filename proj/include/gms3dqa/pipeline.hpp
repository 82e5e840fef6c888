#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "gms3dqa/evaluation.hpp"
#include "gms3dqa/predictor.hpp"

namespace gms {

/// The full render -> QMM -> features -> head scorer behind the protocol
/// runners. fit() trains a fresh head from derive_seed(train.seed, "init").
class PipelineModel final : public QualityModel {
 public:
  explicit PipelineModel(PipelineConfig cfg);

  void fit(const DatasetManifest& train) override;
  std::vector<double> predict(const DatasetManifest& data) override;

  /// Scores one loaded model with the current head.
  Prediction predict_one(const Model3D& model);

  const PipelineConfig& config() const { return cfg_; }
  const PredictorState& state() const { return state_; }
  void set_state(PredictorState state);
  /// Report of the last fit(), if any.
  const std::optional<TrainReport>& last_report() const { return report_; }
  FeatureExtractor& extractor() { return *extractor_; }

 private:
  PipelineConfig cfg_;
  std::unique_ptr<FeatureExtractor> extractor_;
  PredictorState state_;
  std::optional<TrainReport> report_;
};

/// Factory for cross-validation: fold f trains with seed derive_seed(seed, "fold/f").
ModelFactory pipeline_factory(const PipelineConfig& cfg);

}  // namespace gms
