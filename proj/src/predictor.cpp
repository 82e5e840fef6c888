#include "gms3dqa/predictor.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "gms3dqa/error.hpp"
#include "gms3dqa/json_io.hpp"
#include "gms3dqa/rng.hpp"
#include "gms3dqa/simd/kernels.hpp"

namespace gms {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr char kMagic[8] = {'Q', 'M', 'M', '3', 'D', 'Q', 'A', '1'};

}  // namespace

HeadWeights HeadWeights::zeros(int feature_dim, int hidden) {
  if (feature_dim < 1 || hidden < 1) throw Error(Errc::ShapeMismatch, "head dimensions must be >= 1");
  HeadWeights h;
  h.feature_dim = feature_dim;
  h.hidden = hidden;
  h.w1.assign(static_cast<std::size_t>(feature_dim) * hidden, 0.0);
  h.b1.assign(static_cast<std::size_t>(hidden), 0.0);
  h.w2.assign(static_cast<std::size_t>(hidden), 0.0);
  return h;
}

HeadWeights HeadWeights::xavier(int feature_dim, int hidden, std::uint64_t seed) {
  HeadWeights h = zeros(feature_dim, hidden);
  Rng rng(seed);
  const double lim1 = std::sqrt(6.0 / (feature_dim + hidden));
  const double lim2 = std::sqrt(6.0 / (hidden + 1));
  for (auto& w : h.w1) w = (2.0 * rng.uniform() - 1.0) * lim1;
  for (auto& w : h.w2) w = (2.0 * rng.uniform() - 1.0) * lim2;
  return h;
}

std::size_t HeadWeights::parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw Error(Errc::InvalidConfig, "learning_rate must be > 0");
  if (!(decay > 0 && decay <= 1)) throw Error(Errc::InvalidConfig, "decay must be in (0, 1]");
  if (decay_every < 1) throw Error(Errc::InvalidConfig, "decay_every must be >= 1");
  if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
  if (epochs < 1) throw Error(Errc::InvalidConfig, "epochs must be >= 1");
  loss.validate();
}

double TrainConfig::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(decay, static_cast<double>(epoch / decay_every));
}

HeadForward head_forward(const HeadWeights& head, std::span<const double> f) {
  if (static_cast<int>(f.size()) != head.feature_dim) {
    throw Error(Errc::ShapeMismatch, "feature length " + std::to_string(f.size()) + " != head input " +
                                         std::to_string(head.feature_dim));
  }
  const auto& k = simd::kernels();
  HeadForward out;
  out.pre.resize(static_cast<std::size_t>(head.hidden));
  double score = head.b2;
  for (int j = 0; j < head.hidden; ++j) {
    const double* row = head.w1.data() + static_cast<std::size_t>(j) * head.feature_dim;
    out.pre[j] = k.dot(row, f.data(), f.size()) + head.b1[j];
    if (out.pre[j] > 0) score += head.w2[j] * out.pre[j];
  }
  out.score = score;
  return out;
}

double regress(std::span<const double> features, const HeadWeights& head) {
  return head_forward(head, features).score;
}

HeadGradient head_backward(const HeadWeights& head, const std::vector<std::vector<double>>& features,
                           const std::vector<HeadForward>& forward, std::span<const double> dscore) {
  const auto& k = simd::kernels();
  HeadGradient g;
  g.w1.assign(head.w1.size(), 0.0);
  g.b1.assign(head.b1.size(), 0.0);
  g.w2.assign(head.w2.size(), 0.0);
  for (std::size_t b = 0; b < features.size(); ++b) {
    const double gs = dscore[b];
    g.b2 += gs;
    for (int j = 0; j < head.hidden; ++j) {
      const double pre = forward[b].pre[j];
      if (pre <= 0) continue;  // rectifier: zero slope at and below 0
      g.w2[j] += gs * pre;
      const double gh = gs * head.w2[j];
      g.b1[j] += gh;
      k.axpy(gh, features[b].data(), g.w1.data() + static_cast<std::size_t>(j) * head.feature_dim,
             static_cast<std::size_t>(head.feature_dim));
    }
  }
  return g;
}

EpochStats train_step(HeadWeights& head, const std::vector<std::vector<double>>& features,
                      std::span<const double> labels, const TrainConfig& cfg, double lr, OptimizerState& opt) {
  std::vector<HeadForward> fwd;
  fwd.reserve(features.size());
  std::vector<double> scores;
  scores.reserve(features.size());
  for (const auto& f : features) {
    fwd.push_back(head_forward(head, f));
    scores.push_back(fwd.back().score);
  }
  const LossValue loss = combined_loss(scores, labels, cfg.loss);
  if (!std::isfinite(loss.total)) throw Error(Errc::DivergedLoss, "training loss is not finite");
  HeadGradient g = head_backward(head, features, fwd, loss.grad);

  // Flattened view: w1, b1, w2, b2.
  const std::size_t total = head.parameter_count();
  auto param = [&](std::size_t i) -> double& {
    if (i < head.w1.size()) return head.w1[i];
    i -= head.w1.size();
    if (i < head.b1.size()) return head.b1[i];
    i -= head.b1.size();
    if (i < head.w2.size()) return head.w2[i];
    return head.b2;
  };
  auto grad = [&](std::size_t i) -> double {
    if (i < g.w1.size()) return g.w1[i];
    i -= g.w1.size();
    if (i < g.b1.size()) return g.b1[i];
    i -= g.b1.size();
    if (i < g.w2.size()) return g.w2[i];
    return g.b2;
  };

  if (cfg.optimizer == Optimizer::Sgd) {
    const auto& k = simd::kernels();
    k.axpy(-lr, g.w1.data(), head.w1.data(), head.w1.size());
    k.axpy(-lr, g.b1.data(), head.b1.data(), head.b1.size());
    k.axpy(-lr, g.w2.data(), head.w2.data(), head.w2.size());
    head.b2 -= lr * g.b2;
  } else {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (opt.m.size() != total) {
      opt.m.assign(total, 0.0);
      opt.v.assign(total, 0.0);
      opt.step = 0;
    }
    ++opt.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(opt.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < total; ++i) {
      const double gi = grad(i);
      opt.m[i] = beta1 * opt.m[i] + (1 - beta1) * gi;
      opt.v[i] = beta2 * opt.v[i] + (1 - beta2) * gi * gi;
      param(i) -= lr * (opt.m[i] / c1) / (std::sqrt(opt.v[i] / c2) + eps);
    }
  }
  return {loss.total, loss.mse, loss.rank};
}

Prediction predict(const Model3D& model, const RenderConfig& render, const GridSpec& grid, const HeadWeights& head,
                   FeatureExtractor& extractor) {
  Prediction p;
  grid.validate_against(render.resolution);
  auto t = Clock::now();
  const Model3D normalized = normalize_model(model);
  const ProjectionSet ps = render_projections(normalized, render);
  p.timings.render = seconds_since(t);
  t = Clock::now();
  const Qmm qmm = assemble_qmm(ps, grid);
  p.timings.sample = seconds_since(t);
  t = Clock::now();
  const auto features = extractor.extract(qmm.image, qmm.grid);
  p.timings.extract = seconds_since(t);
  t = Clock::now();
  p.score = regress(features, head);
  p.timings.regress = seconds_since(t);
  return p;
}

TrainingSet::TrainingSet(const DatasetManifest& manifest, const RenderConfig& render) {
  if (manifest.entries.empty()) throw Error(Errc::EmptyManifest, "training manifest has no entries");
  projections_.reserve(manifest.size());
  for (const auto& e : manifest.entries) {
    projections_.push_back(render_projections(normalize_model(load_model(manifest.resolve(e))), render));
    labels_.push_back(e.mos);
  }
}

std::uint64_t sample_seed(std::uint64_t train_seed, int epoch, std::size_t sample) {
  return derive_seed(train_seed, "epoch/" + std::to_string(epoch) + "/sample/" + std::to_string(sample));
}

TrainReport train(const TrainingSet& data, const GridSpec& grid, PredictorState state, FeatureExtractor& extractor) {
  const auto t0 = Clock::now();
  const TrainConfig& cfg = state.train;
  cfg.validate();
  if (data.size() == 0) throw Error(Errc::EmptyManifest, "no training samples");
  if (extractor.feature_dim() != state.head.feature_dim) {
    throw Error(Errc::ShapeMismatch, "extractor and head disagree on feature_dim");
  }
  grid.validate_against(data.projections(0).resolution());

  TrainReport report;
  OptimizerState opt;
  const std::size_t n = data.size();
  std::vector<std::vector<double>> features(n);
  std::vector<std::size_t> order(n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) {
      GridSpec gs = grid;
      gs.seed = sample_seed(cfg.seed, epoch, i);
      const Qmm qmm = assemble_qmm(data.projections(i), gs);
      features[i] = extractor.extract(qmm.image, qmm.grid);
    }
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(cfg.seed, "shuffle/" + std::to_string(epoch)));
    shuffle.shuffle(std::span<std::size_t>(order));

    const double lr = cfg.learning_rate_at(epoch);
    EpochStats sum;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::vector<double>> batch;
      std::vector<double> labels;
      for (std::size_t b = start; b < end; ++b) {
        batch.push_back(features[order[b]]);
        labels.push_back(data.labels()[order[b]]);
      }
      const EpochStats s = train_step(state.head, batch, labels, cfg, lr, opt);
      const auto w = static_cast<double>(end - start);
      sum.total += s.total * w;
      sum.mse += s.mse * w;
      sum.rank += s.rank * w;
    }
    const auto dn = static_cast<double>(n);
    report.epochs.push_back({sum.total / dn, sum.mse / dn, sum.rank / dn});
  }
  report.state = std::move(state);
  report.wall_seconds = seconds_since(t0);
  return report;
}

TrainReport train(const DatasetManifest& manifest, const PipelineConfig& cfg, PredictorState state,
                  FeatureExtractor& extractor) {
  require_trainable(manifest);
  cfg.grid.validate_against(cfg.render.resolution);
  TrainingSet data(manifest, cfg.render);
  return train(data, cfg.grid, std::move(state), extractor);
}

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "state files are written on little-endian hosts");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::ParseError, "truncated state file");
  return v;
}

}  // namespace

void save_state(const std::filesystem::path& path, const PredictorState& state) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  const HeadWeights& h = state.head;
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.feature_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.hidden));
  for (double w : h.w1) put_le(out, w);
  for (double w : h.b1) put_le(out, w);
  for (double w : h.w2) put_le(out, w);
  put_le(out, h.b2);
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());

  nlohmann::json side{{"format", "QMM3DQA1"},
                      {"feature_dim", h.feature_dim},
                      {"hidden", h.hidden},
                      {"extractor", to_json(state.extractor)},
                      {"train", to_json(state.train)}};
  std::ofstream sj(path.string() + ".json");
  sj << side.dump(2) << "\n";
}

PredictorState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(Errc::ParseError, path.string() + " is not a QMM3DQA1 state file");
  }
  const auto dim = get_le<std::uint32_t>(in);
  const auto hidden = get_le<std::uint32_t>(in);
  if (dim == 0 || hidden == 0 || dim > (1u << 24) || hidden > (1u << 16)) {
    throw Error(Errc::ParseError, "implausible head shape in " + path.string());
  }
  PredictorState state;
  state.head = HeadWeights::zeros(static_cast<int>(dim), static_cast<int>(hidden));
  for (auto& w : state.head.w1) w = get_le<double>(in);
  for (auto& w : state.head.b1) w = get_le<double>(in);
  for (auto& w : state.head.w2) w = get_le<double>(in);
  state.head.b2 = get_le<double>(in);
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(state.head.w1) || !finite(state.head.b1) || !finite(state.head.w2) || !std::isfinite(state.head.b2)) {
    throw Error(Errc::ParseError, "non-finite weights in " + path.string());
  }
  state.extractor.feature_dim = static_cast<int>(dim);

  std::ifstream sj(path.string() + ".json");
  if (sj) {
    try {
      auto side = nlohmann::json::parse(sj);
      if (side.contains("extractor")) state.extractor = extractor_spec_from_json(side["extractor"]);
      if (side.contains("train")) state.train = train_config_from_json(side["train"]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, std::string("bad state sidecar: ") + e.what());
    }
  }
  if (state.extractor.feature_dim != static_cast<int>(dim)) {
    throw Error(Errc::ShapeMismatch, "sidecar feature_dim disagrees with the weight file");
  }
  return state;
}

}  // namespace gms
