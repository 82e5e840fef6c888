#include <doctest.h>

#include "gms3dqa/error.hpp"
#include "gms3dqa/json_io.hpp"
#include "helpers.hpp"

using namespace gms;

namespace {

PipelineConfig custom() {
  PipelineConfig c;
  c.render.resolution = 512;
  c.render.splat_radius = 1.5;
  c.render.background = {0, 10, 20};
  c.render.threads = 3;
  c.grid.grid = 6;
  c.grid.patch_px = 16;
  c.grid.num_views = 4;
  c.grid.seed = 123456789012345ull;
  c.grid.blank_threshold = 0.1;
  c.train.learning_rate = 0.01;
  c.train.decay = 0.5;
  c.train.decay_every = 2;
  c.train.batch_size = 8;
  c.train.epochs = 7;
  c.train.seed = 99;
  c.train.optimizer = Optimizer::Adam;
  c.train.loss = {0.25, 2.0};
  c.extractor.kind = ExtractorKind::Bridge;
  c.extractor.feature_dim = 100;
  c.extractor.bridge_command = "/bin/bridge";
  c.hidden = 16;
  return c;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

}  // namespace

TEST_CASE("pipeline config round trip") {
  const PipelineConfig c = custom();
  const PipelineConfig r = pipeline_config_from_json(to_json(c));
  CHECK(to_json(r) == to_json(c));
  CHECK(r.render.background == c.render.background);
  CHECK(r.grid.seed == c.grid.seed);
  CHECK(r.train.optimizer == Optimizer::Adam);
  CHECK(r.train.loss.lambda1 == 0.25);
  CHECK(r.extractor.kind == ExtractorKind::Bridge);
  CHECK(r.extractor.bridge_command == "/bin/bridge");
  CHECK(r.hidden == 16);
}

TEST_CASE("partial documents override only present keys") {
  const Json j = Json::parse(R"({"render": {"resolution": 256}, "train": {"loss": {"lambda2": 3}}})");
  const PipelineConfig c = pipeline_config_from_json(j);
  CHECK(c.render.resolution == 256);
  CHECK(c.render.splat_radius == 1.0);
  CHECK(c.train.loss.lambda2 == 3.0);
  CHECK(c.train.loss.lambda1 == 1.0);
  CHECK(c.grid.grid == 7);
  const PipelineConfig base = custom();
  CHECK(pipeline_config_from_json(Json::object(), base).hidden == 16);
}

TEST_CASE("unknown keys and bad types are rejected") {
  CHECK(code_of([] { pipeline_config_from_json(Json::parse(R"({"rendr": {}})")); }) == Errc::InvalidConfig);
  CHECK(code_of([] { render_config_from_json(Json::parse(R"({"resolution": "big"})")); }) == Errc::InvalidConfig);
  CHECK(code_of([] { grid_spec_from_json(Json::parse(R"({"grid": 7, "extra": 1})")); }) == Errc::InvalidConfig);
  CHECK(code_of([] { train_config_from_json(Json::parse(R"({"optimizer": "rmsprop"})")); }) == Errc::InvalidConfig);
  CHECK(code_of([] { extractor_spec_from_json(Json::parse(R"({"kind": "resnet"})")); }) == Errc::InvalidConfig);
  CHECK(code_of([] { render_config_from_json(Json::parse(R"({"background": [1, 2]})")); }) == Errc::InvalidConfig);
  CHECK(code_of([] { pipeline_config_from_json(Json::parse("[]")); }) == Errc::InvalidConfig);
}

TEST_CASE("metrics report fields") {
  MetricsReport m;
  m.srcc = 0.9;
  m.n = 12;
  m.logistic.beta = {1, 2, 3, 4, 5};
  const Json j = to_json(m);
  for (const char* k : {"srcc", "plcc", "krcc", "rmse", "beta", "n"}) CHECK(j.contains(k));
  CHECK(j["beta"].size() == 5);
  CHECK(j["n"] == 12);
}

TEST_CASE("bench report splits counts from timings") {
  BenchReport r;
  r.trials = 3;
  r.extractor_invocations = 6;
  r.total = summarize({1, 2, 3});
  const Json counts = to_json(r);
  const Json timings = bench_timings_json(r);
  CHECK(counts["extractor_invocations"] == 6);
  CHECK(counts.dump().find("median") == std::string::npos);
  CHECK(timings["total"]["median"] == 2.0);
}

TEST_CASE("json files") {
  testing::TempDir dir;
  const Json j = {{"a", 1}, {"b", {1, 2}}};
  write_json_file(dir / "sub" / "x.json", j);
  const std::string text = testing::read_bytes(dir / "sub" / "x.json");
  CHECK(text.back() == '\n');
  CHECK(text == j.dump(2) + "\n");
  CHECK(read_json_file(dir / "sub" / "x.json") == j);
  testing::write_text(dir / "bad.json", "{nope");
  CHECK(code_of([&] { read_json_file(dir / "bad.json"); }) == Errc::ParseError);
  CHECK(code_of([&] { read_json_file(dir / "none.json"); }) == Errc::Io);
}
