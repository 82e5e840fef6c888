// qmm3dqa: command-line front end for rendering, sampling, training,
// evaluation and benchmarking.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "gms3dqa/bench.hpp"
#include "gms3dqa/error.hpp"
#include "gms3dqa/json_io.hpp"
#include "gms3dqa/pipeline.hpp"
#include "gms3dqa/synth.hpp"

namespace fs = std::filesystem;
using namespace gms;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

PipelineConfig base_config(const Globals& g) {
  PipelineConfig cfg;
  if (!g.config.empty()) cfg = pipeline_config_from_json(read_json_file(g.config));
  if (g.seed) {
    cfg.grid.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  return cfg;
}

int default_threads(const Globals& g, int fallback) { return g.threads ? std::max(1, *g.threads) : fallback; }

int all_cores() { return std::max(1u, std::thread::hardware_concurrency()); }

void print_metrics(const char* label, const MetricsReport& m) {
  std::printf("%s  SRCC %.4f  PLCC %.4f  KRCC %.4f  RMSE %.4f  (n=%zu)\n", label, m.srcc, m.plcc, m.krcc, m.rmse, m.n);
}

void print_cv(const CrossValidationReport& r) {
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    print_metrics(("fold " + std::to_string(f + 1)).c_str(), r.folds[f]);
  }
  std::printf("mean    SRCC %.4f  PLCC %.4f  KRCC %.4f  RMSE %.4f  (%zu folds)\n", r.mean.srcc, r.mean.plcc,
              r.mean.krcc, r.mean.rmse, r.mean.folds);
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_extension();
  return fs::path(out.string() + suffix);
}

class OracleFactory {
 public:
  explicit OracleFactory(double sign) : sign_(sign) {}
  std::unique_ptr<QualityModel> operator()(int) const { return std::make_unique<OracleModel>(sign_); }

 private:
  double sign_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-based 3D model quality assessment"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Top-level seed for sampling and training");
  app.add_option("--threads", g.threads, "Worker threads");

  // render
  auto* render = app.add_subcommand("render", "Render the six projections and coverage masks");
  std::string r_model, r_out;
  std::optional<int> r_res;
  std::optional<double> r_splat;
  render->add_option("--model", r_model, "Model file (.ply or .obj)")->required();
  render->add_option("--out", r_out, "Output directory")->required();
  render->add_option("--resolution", r_res, "Projection side in pixels");
  render->add_option("--splat", r_splat, "Point splat radius in pixels");

  // qmm
  auto* qmm = app.add_subcommand("qmm", "Assemble a quality mini-patch map");
  std::string q_model, q_out;
  std::optional<int> q_grid, q_patch, q_views, q_res;
  qmm->add_option("--model", q_model, "Model file")->required();
  qmm->add_option("--out", q_out, "Output PNG; provenance goes next to it as .json")->required();
  qmm->add_option("--grid", q_grid, "Cells per side");
  qmm->add_option("--patch", q_patch, "Mini-patch side in pixels");
  qmm->add_option("--views", q_views, "Number of projections used");
  qmm->add_option("--resolution", q_res, "Projection side in pixels");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic distorted corpus and manifest");
  std::string s_out;
  SynthCorpusSpec s_spec;
  synth->add_option("--out", s_out, "Output directory")->required();
  synth->add_option("--contents", s_spec.contents, "Reference contents");
  synth->add_option("--levels", s_spec.levels, "Distortion levels per content");
  synth->add_option("--points", s_spec.points, "Points per reference model");

  // train
  auto* trn = app.add_subcommand("train", "Train the regression head");
  std::string t_manifest, t_state, t_out;
  std::optional<int> t_epochs;
  std::optional<double> t_lr;
  std::optional<std::string> t_opt;
  trn->add_option("--manifest", t_manifest, "Training manifest")->required();
  trn->add_option("--state", t_state, "Where to write the trained weights")->required();
  trn->add_option("--out", t_out, "Training report JSON")->required();
  trn->add_option("--epochs", t_epochs, "Epochs");
  trn->add_option("--lr", t_lr, "Initial learning rate");
  trn->add_option("--optimizer", t_opt, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a manifest and compute the criteria");
  std::string e_manifest, e_state, e_out;
  bool e_oracle = false, e_anti = false;
  eval->add_option("--manifest", e_manifest, "Manifest to score")->required();
  eval->add_option("--state", e_state, "Trained weights");
  eval->add_option("--out", e_out, "Metrics report JSON")->required();
  eval->add_flag("--oracle", e_oracle, "Predict the labels themselves");
  eval->add_flag("--anti-oracle", e_anti, "Predict the negated labels");

  // crossval
  auto* cv = app.add_subcommand("crossval", "Content-disjoint k-fold cross-validation");
  std::string c_manifest, c_out;
  int c_k = 5;
  std::optional<std::uint64_t> c_shuffle;
  bool c_oracle = false;
  cv->add_option("--manifest", c_manifest, "Manifest")->required();
  cv->add_option("--k", c_k, "Folds");
  cv->add_option("--out", c_out, "Report JSON")->required();
  cv->add_option("--shuffle-seed", c_shuffle, "Shuffle content ids before dealing folds");
  cv->add_flag("--oracle", c_oracle, "Use the label oracle instead of the pipeline");

  // crossdb
  auto* cdb = app.add_subcommand("crossdb", "Train on one manifest, test on another");
  std::string d_train, d_test, d_out;
  int d_k = 1;
  bool d_oracle = false;
  cdb->add_option("--train", d_train, "Training manifest")->required();
  cdb->add_option("--test", d_test, "Test manifest")->required();
  cdb->add_option("--test-k", d_k, "Test folds averaged over");
  cdb->add_option("--out", d_out, "Report JSON")->required();
  cdb->add_flag("--oracle", d_oracle, "Use the label oracle instead of the pipeline");

  // bench
  auto* bench = app.add_subcommand("bench", "Time the pipeline under an ablation mode");
  std::vector<std::string> b_models;
  std::string b_manifest, b_mode = "III", b_out, b_state;
  int b_trials = 10;
  bench->add_option("--models", b_models, "Model files");
  bench->add_option("--manifest", b_manifest, "Take the models from a manifest");
  bench->add_option("--mode", b_mode, "I, II or III");
  bench->add_option("--trials", b_trials, "Timed trials (a warm-up runs first)");
  bench->add_option("--state", b_state, "Trained weights for the regress stage");
  bench->add_option("--out", b_out, "Report JSON; timings go to <out>.timings.json")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Projection-count sweep");
  std::string w_manifest, w_out, w_csv;
  std::vector<int> w_n{1, 2, 3, 4, 5, 6};
  int w_k = 2, w_trials = 3;
  bool w_oracle = false;
  sweep->add_option("--manifest", w_manifest, "Manifest")->required();
  sweep->add_option("--n", w_n, "Projection counts")->delimiter(',');
  sweep->add_option("--k", w_k, "Folds");
  sweep->add_option("--trials", w_trials, "Timed trials per count");
  sweep->add_option("--out", w_out, "Report JSON; timings go to <out>.timings.json")->required();
  sweep->add_option("--csv", w_csv, "Optional CSV summary");
  sweep->add_flag("--oracle", w_oracle, "Use the label oracle instead of the pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg = base_config(g);

    if (*render) {
      if (r_res) cfg.render.resolution = *r_res;
      if (r_splat) cfg.render.splat_radius = *r_splat;
      cfg.render.threads = default_threads(g, cfg.render.threads);
      cfg.render.validate();
      const Model3D m = load_model(r_model);
      cfg.grid.validate_against(cfg.render.resolution);
      const ProjectionSet ps = render_projections(normalize_model(m), cfg.render);
      dump_projections(ps, r_out, fs::path(r_model).stem().string());
      std::printf("wrote 12 images to %s\n", r_out.c_str());
    } else if (*qmm) {
      if (q_grid) cfg.grid.grid = *q_grid;
      if (q_patch) cfg.grid.patch_px = *q_patch;
      if (q_views) cfg.grid.num_views = *q_views;
      if (q_res) cfg.render.resolution = *q_res;
      cfg.render.threads = default_threads(g, cfg.render.threads);
      cfg.render.validate();
      cfg.grid.validate();
      const Model3D m = load_model(q_model);
      cfg.grid.validate_against(cfg.render.resolution);
      const Qmm q = assemble_qmm(render_projections(normalize_model(m), cfg.render), cfg.grid);
      const fs::path png = q_out;
      if (png.has_parent_path()) fs::create_directories(png.parent_path());
      write_png(png, q.image);
      Json prov = to_json(q);
      prov["config"] = {{"render", to_json(cfg.render)}, {"grid", to_json(cfg.grid)}};
      write_json_file(with_suffix(png, ".json"), prov);
      std::printf("wrote %dx%d map with %zu slots to %s\n", q.image.width, q.image.height, q.provenance.size(),
                  png.string().c_str());
    } else if (*synth) {
      s_spec.seed = g.seed.value_or(0);
      const DatasetManifest m = write_synthetic_corpus(s_out, s_spec);
      std::printf("wrote %zu models and manifest.json to %s\n", m.size(), s_out.c_str());
    } else if (*trn) {
      if (t_epochs) cfg.train.epochs = *t_epochs;
      if (t_lr) cfg.train.learning_rate = *t_lr;
      if (t_opt) cfg.train.optimizer = *t_opt == "adam" ? Optimizer::Adam : Optimizer::Sgd;
      cfg.render.threads = default_threads(g, cfg.render.threads);
      const DatasetManifest manifest = load_manifest(t_manifest);
      PipelineModel model(cfg);
      model.fit(manifest);
      save_state(t_state, model.state());
      Json rep = to_json(*model.last_report());
      rep["config"] = to_json(cfg);
      write_json_file(t_out, rep);
      const auto& ep = model.last_report()->epochs;
      std::printf("trained %zu epochs: loss %.6f -> %.6f\n", ep.size(), ep.front().total, ep.back().total);
    } else if (*eval) {
      const DatasetManifest manifest = load_manifest(e_manifest);
      std::vector<double> pred;
      if (e_oracle || e_anti) {
        pred = OracleModel(e_anti ? -1.0 : 1.0).predict(manifest);
      } else {
        if (e_state.empty()) throw Error(Errc::InvalidConfig, "evaluate needs --state or --oracle");
        PredictorState st = load_state(e_state);
        cfg.extractor = st.extractor;
        cfg.hidden = st.head.hidden;
        cfg.render.threads = default_threads(g, cfg.render.threads);
        PipelineModel model(cfg);
        model.set_state(std::move(st));
        pred = model.predict(manifest);
      }
      std::vector<double> mos;
      for (const auto& e : manifest.entries) mos.push_back(e.mos);
      const MetricsReport m = compute_metrics(pred, mos);
      Json rep = to_json(m);
      rep["predictions"] = pred;
      write_json_file(e_out, rep);
      print_metrics("eval", m);
    } else if (*cv) {
      const DatasetManifest manifest = load_manifest(c_manifest);
      ModelFactory factory = c_oracle ? ModelFactory(OracleFactory(1.0)) : pipeline_factory(cfg);
      const CrossValidationReport r =
          run_cross_validation(manifest, c_k, factory, default_threads(g, all_cores()), c_shuffle);
      Json rep = to_json(r);
      rep["config"] = to_json(cfg);
      write_json_file(c_out, rep);
      print_cv(r);
    } else if (*cdb) {
      const DatasetManifest a = load_manifest(d_train);
      const DatasetManifest b = load_manifest(d_test);
      ModelFactory factory = d_oracle ? ModelFactory(OracleFactory(1.0)) : pipeline_factory(cfg);
      const CrossValidationReport r = run_cross_database(a, b, d_k, factory);
      Json rep = to_json(r);
      rep["config"] = to_json(cfg);
      write_json_file(d_out, rep);
      print_cv(r);
    } else if (*bench) {
      std::vector<fs::path> paths(b_models.begin(), b_models.end());
      if (!b_manifest.empty()) {
        const DatasetManifest m = load_manifest(b_manifest);
        for (const auto& e : m.entries) paths.push_back(m.resolve(e));
      }
      BenchConfig bc;
      bc.render = cfg.render;
      bc.render.threads = default_threads(g, 1);
      bc.grid = cfg.grid;
      bc.extractor = cfg.extractor;
      bc.hidden = cfg.hidden;
      bc.seed = cfg.train.seed;
      if (!b_state.empty()) {
        PredictorState st = load_state(b_state);
        bc.extractor = st.extractor;
        bc.head = st.head;
      }
      const BenchReport r = run_benchmark(paths, bc, parse_mode(b_mode), b_trials);
      Json rep = to_json(r);
      rep["config"] = {{"render", to_json(bc.render)}, {"grid", to_json(bc.grid)}, {"extractor", to_json(bc.extractor)}};
      write_json_file(b_out, rep);
      write_json_file(with_suffix(b_out, ".timings.json"), bench_timings_json(r));
      std::cout << bench_table(r);
    } else if (*sweep) {
      const DatasetManifest manifest = load_manifest(w_manifest);
      cfg.render.threads = default_threads(g, 1);
      SweepModelFactory factory;
      if (w_oracle) factory = [](const PipelineConfig&, int) { return std::make_unique<OracleModel>(1.0); };
      const SweepReport r = projection_sweep(manifest, cfg, w_n, w_k, w_trials, factory);
      Json rep = to_json(r);
      rep["config"] = to_json(cfg);
      write_json_file(w_out, rep);
      Json timings = Json::array();
      for (const auto& p : r.points) {
        Json t = bench_timings_json(p.bench);
        t["num_views"] = p.num_views;
        timings.push_back(t);
      }
      write_json_file(with_suffix(w_out, ".timings.json"), timings);
      if (!w_csv.empty()) {
        std::ofstream csv(w_csv);
        csv << sweep_csv(r);
      }
      for (const auto& p : r.points) {
        std::printf("n=%d  SRCC %.4f  PLCC %.4f  total %.4fs\n", p.num_views, p.metrics.mean.srcc,
                    p.metrics.mean.plcc, p.bench.total.mean);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
