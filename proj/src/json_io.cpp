#include "gms3dqa/json_io.hpp"

#include <fstream>
#include <set>

#include "gms3dqa/error.hpp"

namespace gms {

namespace {

void require_object(const Json& j, const char* what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, std::string(what) + " must be a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error(Errc::InvalidConfig, "unknown key '" + k + "' in " + what);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_integer() && !(std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.get<std::int64_t>() < 0);
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  } else {
    ok = v.is_string();
  }
  if (!ok) throw Error(Errc::InvalidConfig, std::string("wrong type for '") + key + "'");
  out = v.get<T>();
}

Json stage_json(const StageStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"median", s.median}, {"samples", s.samples}};
}

}  // namespace

Json to_json(const RenderConfig& c) {
  return {{"resolution", c.resolution},
          {"splat_radius", c.splat_radius},
          {"background", {c.background[0], c.background[1], c.background[2]}},
          {"threads", c.threads}};
}

Json to_json(const GridSpec& c) {
  return {{"grid", c.grid},
          {"patch_px", c.patch_px},
          {"num_views", c.num_views},
          {"seed", c.seed},
          {"blank_threshold", c.blank_threshold}};
}

Json to_json(const LossConfig& c) { return {{"lambda1", c.lambda1}, {"lambda2", c.lambda2}}; }

Json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"decay", c.decay},
          {"decay_every", c.decay_every},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"optimizer", c.optimizer == Optimizer::Adam ? "adam" : "sgd"},
          {"loss", to_json(c.loss)}};
}

Json to_json(const FeatureExtractorSpec& c) {
  return {{"kind", c.kind == ExtractorKind::Bridge ? "bridge" : "builtin"},
          {"feature_dim", c.feature_dim},
          {"bridge_command", c.bridge_command}};
}

Json to_json(const PipelineConfig& c) {
  return {{"render", to_json(c.render)},
          {"grid", to_json(c.grid)},
          {"train", to_json(c.train)},
          {"extractor", to_json(c.extractor)},
          {"hidden", c.hidden}};
}

Json to_json(const LogisticParams& p) {
  return {{"beta", p.beta}, {"converged", p.converged}, {"iterations", p.iterations}, {"sse", p.sse}};
}

Json to_json(const MetricsReport& r) {
  return {{"srcc", r.srcc},
          {"plcc", r.plcc},
          {"krcc", r.krcc},
          {"rmse", r.rmse},
          {"beta", r.logistic.beta},
          {"n", r.n},
          {"logistic_converged", r.logistic.converged},
          {"logistic_iterations", r.logistic.iterations}};
}

Json to_json(const MeanMetrics& m) {
  return {{"srcc", m.srcc}, {"plcc", m.plcc}, {"krcc", m.krcc}, {"rmse", m.rmse}, {"folds", m.folds}};
}

Json to_json(const FoldPlan& p) {
  Json folds = Json::array();
  for (int f = 0; f < p.k; ++f) {
    folds.push_back({{"content_ids", p.folds[f]}, {"train", p.train[f]}, {"test", p.test[f]}});
  }
  return {{"k", p.k}, {"folds", folds}};
}

Json to_json(const CrossValidationReport& r) {
  Json folds = Json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  return {{"plan", to_json(r.plan)}, {"folds", folds}, {"mean", to_json(r.mean)}};
}

Json to_json(const Qmm& q) {
  Json slots = Json::array();
  for (std::size_t s = 0; s < q.provenance.size(); ++s) {
    const auto& p = q.provenance[s];
    slots.push_back({{"slot", s},
                     {"blank_fill", p.blank_fill},
                     {"reused", p.reused},
                     {"view", p.view},
                     {"row", p.row},
                     {"col", p.col},
                     {"offset_row", p.offset_row},
                     {"offset_col", p.offset_col},
                     {"coverage", p.coverage}});
  }
  return {{"width", q.image.width}, {"height", q.image.height}, {"grid", q.grid}, {"patch_px", q.patch_px},
          {"slots", slots}};
}

Json to_json(const TrainReport& r) {
  Json epochs = Json::array();
  for (std::size_t e = 0; e < r.epochs.size(); ++e) {
    epochs.push_back({{"epoch", e + 1}, {"total", r.epochs[e].total}, {"mse", r.epochs[e].mse}, {"rank", r.epochs[e].rank}});
  }
  return {{"epochs", epochs},
          {"train", to_json(r.state.train)},
          {"extractor", to_json(r.state.extractor)},
          {"head_params", r.state.head.parameter_count()}};
}

Json to_json(const BenchReport& r) {
  return {{"mode", mode_name(r.mode)},
          {"trials", r.trials},
          {"models", r.models},
          {"extractor_invocations", r.extractor_invocations},
          {"processed_pixels", r.processed_pixels},
          {"head_params", r.head_params},
          {"threads", r.threads}};
}

Json bench_timings_json(const BenchReport& r) {
  return {{"mode", mode_name(r.mode)},   {"load", stage_json(r.load)},
          {"render", stage_json(r.render)}, {"sample", stage_json(r.sample)},
          {"extract", stage_json(r.extract)}, {"regress", stage_json(r.regress)},
          {"total", stage_json(r.total)}};
}

Json to_json(const SweepReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"num_views", p.num_views}, {"crossval", to_json(p.metrics)}, {"bench", to_json(p.bench)}});
  }
  return {{"points", pts}};
}

RenderConfig render_config_from_json(const Json& j, RenderConfig c) {
  require_object(j, "render", {"resolution", "splat_radius", "background", "threads"});
  read(j, "resolution", c.resolution);
  read(j, "splat_radius", c.splat_radius);
  read(j, "threads", c.threads);
  if (j.contains("background")) {
    const Json& b = j["background"];
    if (!b.is_array() || b.size() != 3) throw Error(Errc::InvalidConfig, "background must be [r, g, b]");
    for (int i = 0; i < 3; ++i) {
      if (!b[i].is_number_integer() || b[i].get<int>() < 0 || b[i].get<int>() > 255) {
        throw Error(Errc::InvalidConfig, "background channels must be integers in 0..255");
      }
      c.background[i] = static_cast<std::uint8_t>(b[i].get<int>());
    }
  }
  return c;
}

GridSpec grid_spec_from_json(const Json& j, GridSpec c) {
  require_object(j, "grid", {"grid", "patch_px", "num_views", "seed", "blank_threshold"});
  read(j, "grid", c.grid);
  read(j, "patch_px", c.patch_px);
  read(j, "num_views", c.num_views);
  read(j, "seed", c.seed);
  read(j, "blank_threshold", c.blank_threshold);
  return c;
}

LossConfig loss_config_from_json(const Json& j, LossConfig c) {
  require_object(j, "loss", {"lambda1", "lambda2"});
  read(j, "lambda1", c.lambda1);
  read(j, "lambda2", c.lambda2);
  return c;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  require_object(j, "train",
                 {"learning_rate", "decay", "decay_every", "batch_size", "epochs", "seed", "optimizer", "loss"});
  read(j, "learning_rate", c.learning_rate);
  read(j, "decay", c.decay);
  read(j, "decay_every", c.decay_every);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "seed", c.seed);
  std::string opt;
  read(j, "optimizer", opt);
  if (opt == "adam") c.optimizer = Optimizer::Adam;
  else if (opt == "sgd") c.optimizer = Optimizer::Sgd;
  else if (!opt.empty()) throw Error(Errc::InvalidConfig, "optimizer must be 'sgd' or 'adam'");
  if (j.contains("loss")) c.loss = loss_config_from_json(j["loss"], c.loss);
  return c;
}

FeatureExtractorSpec extractor_spec_from_json(const Json& j, FeatureExtractorSpec c) {
  require_object(j, "extractor", {"kind", "feature_dim", "bridge_command"});
  std::string kind;
  read(j, "kind", kind);
  if (kind == "bridge") c.kind = ExtractorKind::Bridge;
  else if (kind == "builtin") c.kind = ExtractorKind::Builtin;
  else if (!kind.empty()) throw Error(Errc::InvalidConfig, "extractor kind must be 'builtin' or 'bridge'");
  read(j, "feature_dim", c.feature_dim);
  read(j, "bridge_command", c.bridge_command);
  return c;
}

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig c) {
  require_object(j, "config", {"render", "grid", "train", "extractor", "hidden"});
  if (j.contains("render")) c.render = render_config_from_json(j["render"], c.render);
  if (j.contains("grid")) c.grid = grid_spec_from_json(j["grid"], c.grid);
  if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
  if (j.contains("extractor")) c.extractor = extractor_spec_from_json(j["extractor"], c.extractor);
  read(j, "hidden", c.hidden);
  return c;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

}  // namespace gms
