#include "gms3dqa/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gms3dqa/error.hpp"
#include "gms3dqa/pipeline.hpp"
#include "gms3dqa/rng.hpp"

namespace gms {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Feature side of a ModeI crop.
constexpr int kCropSide = 224;

}  // namespace

std::string mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::ModeI_ResizeCrop6: return "I";
    case AblationMode::ModeII_SixGMS: return "II";
    case AblationMode::ModeIII_QMM: return "III";
  }
  return "?";
}

AblationMode parse_mode(const std::string& s) {
  std::string u = s;
  for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "I") return AblationMode::ModeI_ResizeCrop6;
  if (u == "II") return AblationMode::ModeII_SixGMS;
  if (u == "III") return AblationMode::ModeIII_QMM;
  throw Error(Errc::InvalidConfig, "unknown mode '" + s + "' (expected I, II or III)");
}

StageStats summarize(std::vector<double> samples) {
  StageStats s;
  s.samples = samples;
  if (samples.empty()) return s;
  const double n = static_cast<double>(samples.size());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0;
  for (double x : samples) var += (x - s.mean) * (x - s.mean);
  s.std = samples.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  std::sort(samples.begin(), samples.end());
  const std::size_t m = samples.size() / 2;
  s.median = samples.size() % 2 ? samples[m] : 0.5 * (samples[m - 1] + samples[m]);
  return s;
}

std::size_t count_head_params(const PredictorState& state) { return state.head.parameter_count(); }

BenchReport run_benchmark(const std::vector<std::filesystem::path>& models, const BenchConfig& cfg, AblationMode mode,
                          int trials) {
  if (models.empty()) throw Error(Errc::InvalidConfig, "benchmark needs at least one model");
  if (trials < 3) throw Error(Errc::InvalidConfig, "benchmark needs at least 3 trials");
  cfg.render.validate();
  cfg.grid.validate_against(cfg.render.resolution);
  if (mode == AblationMode::ModeI_ResizeCrop6 && cfg.render.resolution < kCropSide) {
    throw Error(Errc::ConfigMismatch, "ModeI crops need resolution >= 224");
  }

  auto extractor = make_extractor(cfg.extractor);
  const HeadWeights head = cfg.head ? *cfg.head
                                    : HeadWeights::xavier(extractor->feature_dim(), cfg.hidden,
                                                          derive_seed(cfg.seed, "init"));
  if (head.feature_dim != extractor->feature_dim()) throw Error(Errc::ShapeMismatch, "head and extractor disagree");

  BenchReport r;
  r.mode = mode;
  r.trials = trials;
  r.models = models.size();
  r.head_params = head.parameter_count();
  r.threads = cfg.render.threads;

  std::vector<double> t_load, t_render, t_sample, t_extract, t_regress, t_total;
  std::uint64_t pixels = 0;
  std::uint64_t scored = 0;
  const std::uint64_t calls_before = extractor->invocations();

  for (int trial = -1; trial < trials; ++trial) {
    double load = 0, render = 0, sample = 0, extract = 0, regress_t = 0;
    const auto trial_start = Clock::now();
    for (const auto& path : models) {
      auto t = Clock::now();
      const Model3D m = normalize_model(load_model(path));
      load += since(t);

      t = Clock::now();
      const ProjectionSet ps = render_projections(m, cfg.render);
      render += since(t);

      t = Clock::now();
      std::vector<RgbImage> inputs;
      std::vector<int> lattice;
      switch (mode) {
        case AblationMode::ModeI_ResizeCrop6:
          for (const auto& img : ps.images) {
            inputs.push_back(resize_center_crop(img, kCropSide));
            lattice.push_back(cfg.grid.grid);
          }
          break;
        case AblationMode::ModeII_SixGMS:
          for (auto& q : assemble_per_view_maps(ps, cfg.grid)) {
            inputs.push_back(std::move(q.image));
            lattice.push_back(q.grid);
          }
          break;
        case AblationMode::ModeIII_QMM: {
          Qmm q = assemble_qmm(ps, cfg.grid);
          inputs.push_back(std::move(q.image));
          lattice.push_back(q.grid);
          break;
        }
      }
      sample += since(t);

      t = Clock::now();
      std::vector<double> pooled(static_cast<std::size_t>(extractor->feature_dim()), 0.0);
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto f = extractor->extract(inputs[i], lattice[i]);
        for (std::size_t j = 0; j < f.size(); ++j) pooled[j] += f[j];
        if (trial >= 0) pixels += static_cast<std::uint64_t>(inputs[i].width) * inputs[i].height;
      }
      for (auto& v : pooled) v /= static_cast<double>(inputs.size());
      extract += since(t);

      t = Clock::now();
      volatile double score = regress(pooled, head);
      (void)score;
      regress_t += since(t);
      if (trial >= 0) ++scored;
    }
    if (trial < 0) continue;  // warm-up
    t_load.push_back(load);
    t_render.push_back(render);
    t_sample.push_back(sample);
    t_extract.push_back(extract);
    t_regress.push_back(regress_t);
    t_total.push_back(since(trial_start));
  }

  // The warm-up pass made models.size() calls' worth of invocations too.
  const std::uint64_t calls = extractor->invocations() - calls_before;
  const std::uint64_t per_model = calls / (scored + models.size());
  r.extractor_invocations = per_model;
  r.processed_pixels = pixels / scored;
  r.load = summarize(t_load);
  r.render = summarize(t_render);
  r.sample = summarize(t_sample);
  r.extract = summarize(t_extract);
  r.regress = summarize(t_regress);
  r.total = summarize(t_total);
  return r;
}

std::string bench_table(const BenchReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "mode %s  models %zu  trials %d  threads %d\n", mode_name(r.mode).c_str(), r.models,
                r.trials, r.threads);
  out << line;
  std::snprintf(line, sizeof(line), "%-8s %12s %12s %12s\n", "stage", "mean_s", "std_s", "median_s");
  out << line;
  const std::pair<const char*, const StageStats*> rows[] = {{"load", &r.load},       {"render", &r.render},
                                                            {"sample", &r.sample},   {"extract", &r.extract},
                                                            {"regress", &r.regress}, {"total", &r.total}};
  for (const auto& [name, s] : rows) {
    std::snprintf(line, sizeof(line), "%-8s %12.6f %12.6f %12.6f\n", name, s->mean, s->std, s->median);
    out << line;
  }
  std::snprintf(line, sizeof(line), "extractor invocations/model %llu  pixels/model %llu  head params %zu\n",
                static_cast<unsigned long long>(r.extractor_invocations),
                static_cast<unsigned long long>(r.processed_pixels), r.head_params);
  out << line;
  return out.str();
}

SweepReport projection_sweep(const DatasetManifest& manifest, const PipelineConfig& cfg, const std::vector<int>& n_values,
                             int k, int trials, const SweepModelFactory& factory) {
  if (n_values.empty()) throw Error(Errc::InvalidConfig, "sweep needs at least one projection count");
  std::vector<std::filesystem::path> paths;
  for (const auto& e : manifest.entries) paths.push_back(manifest.resolve(e));
  SweepReport report;
  for (int n : n_values) {
    if (n < 1 || n > kNumViews) throw Error(Errc::InvalidConfig, "projection count must be in 1..6");
    PipelineConfig c = cfg;
    c.grid.num_views = n;
    c.grid.validate();
    ModelFactory per_fold = factory ? ModelFactory([&factory, c](int fold) { return factory(c, fold); })
                                    : pipeline_factory(c);
    SweepPoint p;
    p.num_views = n;
    p.metrics = run_cross_validation(manifest, k, per_fold);
    BenchConfig b;
    b.render = c.render;
    b.grid = c.grid;
    b.extractor = c.extractor;
    b.hidden = c.hidden;
    b.seed = c.train.seed;
    p.bench = run_benchmark(paths, b, AblationMode::ModeIII_QMM, trials);
    report.points.push_back(std::move(p));
  }
  return report;
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "num_views,srcc,plcc,krcc,rmse,folds\n";
  char line[256];
  for (const auto& p : r.points) {
    const auto& m = p.metrics.mean;
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%zu\n", p.num_views, m.srcc, m.plcc, m.krcc, m.rmse,
                  m.folds);
    out << line;
  }
  return out.str();
}

}  // namespace gms
