#include "gms3dqa/pipeline.hpp"

#include "gms3dqa/error.hpp"
#include "gms3dqa/rng.hpp"

namespace gms {

PipelineModel::PipelineModel(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.render.validate();
  cfg_.grid.validate_against(cfg_.render.resolution);
  cfg_.train.validate();
  extractor_ = make_extractor(cfg_.extractor);
  state_.extractor = cfg_.extractor;
  state_.extractor.feature_dim = extractor_->feature_dim();
  state_.train = cfg_.train;
  state_.head = HeadWeights::zeros(extractor_->feature_dim(), cfg_.hidden);
}

void PipelineModel::fit(const DatasetManifest& train_set) {
  PredictorState start = state_;
  start.head = HeadWeights::xavier(extractor_->feature_dim(), cfg_.hidden, derive_seed(cfg_.train.seed, "init"));
  report_ = train(train_set, cfg_, std::move(start), *extractor_);
  state_ = report_->state;
}

void PipelineModel::set_state(PredictorState state) {
  if (state.head.feature_dim != extractor_->feature_dim()) {
    throw Error(Errc::ShapeMismatch, "state feature_dim does not match the extractor");
  }
  state_ = std::move(state);
}

Prediction PipelineModel::predict_one(const Model3D& model) {
  return gms::predict(model, cfg_.render, cfg_.grid, state_.head, *extractor_);
}

std::vector<double> PipelineModel::predict(const DatasetManifest& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& e : data.entries) out.push_back(predict_one(load_model(data.resolve(e))).score);
  return out;
}

ModelFactory pipeline_factory(const PipelineConfig& cfg) {
  return [cfg](int fold) {
    PipelineConfig c = cfg;
    c.train.seed = derive_seed(cfg.train.seed, "fold/" + std::to_string(fold));
    return std::make_unique<PipelineModel>(std::move(c));
  };
}

}  // namespace gms
