#pragma once

#include <filesystem>

#include <json.hpp>

#include "gms3dqa/bench.hpp"
#include "gms3dqa/evaluation.hpp"
#include "gms3dqa/predictor.hpp"
#include "gms3dqa/sampler.hpp"

namespace gms {

using Json = nlohmann::json;

Json to_json(const RenderConfig& c);
Json to_json(const GridSpec& c);
Json to_json(const LossConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const FeatureExtractorSpec& c);
Json to_json(const PipelineConfig& c);

Json to_json(const LogisticParams& p);
/// {"srcc","plcc","krcc","rmse","beta","n", ...}
Json to_json(const MetricsReport& r);
Json to_json(const MeanMetrics& m);
Json to_json(const FoldPlan& p);
Json to_json(const CrossValidationReport& r);
/// Provenance of every slot plus the map geometry.
Json to_json(const Qmm& q);
/// Per-epoch losses; wall time is left out so the report is reproducible.
Json to_json(const TrainReport& r);
/// Counts and configuration only; see bench_timings_json.
Json to_json(const BenchReport& r);
Json bench_timings_json(const BenchReport& r);
Json to_json(const SweepReport& r);

// Parsers start from the defaults and override the keys present. Unknown
// keys and wrongly typed values throw InvalidConfig.
RenderConfig render_config_from_json(const Json& j, RenderConfig base = {});
GridSpec grid_spec_from_json(const Json& j, GridSpec base = {});
LossConfig loss_config_from_json(const Json& j, LossConfig base = {});
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
FeatureExtractorSpec extractor_spec_from_json(const Json& j, FeatureExtractorSpec base = {});
/// Sections "render", "grid", "train", "extractor" and key "hidden".
PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig base = {});

Json read_json_file(const std::filesystem::path& path);
/// Two-space indent and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace gms
