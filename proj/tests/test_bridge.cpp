#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include <json.hpp>

#include "gms3dqa/error.hpp"
#include "gms3dqa/features.hpp"
#include "gms3dqa/pipeline.hpp"
#include "gms3dqa/synth.hpp"
#include "helpers.hpp"

using namespace gms;

namespace {

RgbImage random_image(std::uint64_t seed) {
  RgbImage img(224, 224);
  std::mt19937_64 gen(seed);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(gen() & 0xff);
  return img;
}

struct FaultEnv {
  explicit FaultEnv(const char* mode) { ::setenv("MOCK_BRIDGE_FAULT", mode, 1); }
  ~FaultEnv() { ::unsetenv("MOCK_BRIDGE_FAULT"); }
};

Errc start_error(const std::string& cmd) {
  try {
    BridgeExtractor b(cmd);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("bridge started");
  return Errc::Io;
}

}  // namespace

TEST_CASE("handshake advertises the feature length") {
  BridgeExtractor b(MOCK_BRIDGE_PATH);
  CHECK(b.feature_dim() == 768);
  CHECK(b.name() == "bridge");
  CHECK(b.requests_sent() == 1);
}

TEST_CASE("bridge features match the builtin extractor") {
  BridgeExtractor b(MOCK_BRIDGE_PATH);
  BuiltinExtractor local(768);
  const RgbImage img = random_image(1);
  const auto f = b.extract(img, 7);
  CHECK(f.size() == 768);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK(f == local.extract(img, 7));
}

TEST_CASE("cache is keyed by image bytes") {
  BridgeExtractor b(MOCK_BRIDGE_PATH);
  const RgbImage a = random_image(1), c = random_image(2);
  const auto fa = b.extract(a, 7);
  const auto again = b.extract(a, 7);
  CHECK(fa == again);
  CHECK(b.requests_sent() == 2);
  CHECK(b.invocations() == 2);
  CHECK(b.cache_size() == 1);
  CHECK(b.fetch(a) == fa);
  CHECK(b.requests_sent() == 3);
  CHECK(b.extract(c, 7) != fa);
  CHECK(b.cache_size() == 2);
}

TEST_CASE("bridge failures surface as bridge errors") {
  CHECK(start_error("/nonexistent/bridge") == Errc::Bridge);
  {
    FaultEnv env("hello");
    CHECK(start_error(MOCK_BRIDGE_PATH) == Errc::Bridge);
  }
  {
    FaultEnv env("short");
    BridgeExtractor b(MOCK_BRIDGE_PATH);
    CHECK_THROWS_AS(b.extract(random_image(3), 7), Error);
    CHECK(b.cache_size() == 0);
  }
  {
    FaultEnv env("exit");
    BridgeExtractor b(MOCK_BRIDGE_PATH);
    try {
      b.extract(random_image(3), 7);
      FAIL("expected a bridge error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::Bridge);
    }
  }
}

TEST_CASE("factory resolves the bridge from the environment") {
  FeatureExtractorSpec spec;
  spec.kind = ExtractorKind::Bridge;
  ::unsetenv("QMM3DQA_BRIDGE");
  CHECK_THROWS_AS(make_extractor(spec), Error);
  ::setenv("QMM3DQA_BRIDGE", MOCK_BRIDGE_PATH, 1);
  const auto ex = make_extractor(spec);
  CHECK(ex->name() == "bridge");
  ::unsetenv("QMM3DQA_BRIDGE");
  spec.feature_dim = 100;
  spec.bridge_command = MOCK_BRIDGE_PATH;
  CHECK_THROWS_AS(make_extractor(spec), Error);
}

TEST_CASE("pipeline scores agree between builtin and bridge features") {
  testing::TempDir dir;
  SynthCorpusSpec spec;
  spec.contents = 2;
  spec.levels = 3;
  spec.points = 10000;
  const DatasetManifest m = write_synthetic_corpus(dir.path(), spec);
  PipelineConfig cfg;
  cfg.render.resolution = 224;
  cfg.render.splat_radius = 2.0;
  cfg.train.epochs = 2;
  cfg.train.learning_rate = 1e-2;
  cfg.hidden = 8;
  PipelineModel local(cfg);
  cfg.extractor.kind = ExtractorKind::Bridge;
  cfg.extractor.bridge_command = MOCK_BRIDGE_PATH;
  PipelineModel remote(cfg);
  local.fit(m);
  remote.fit(m);
  CHECK(local.state().head == remote.state().head);
  CHECK(local.predict(m) == remote.predict(m));
}

TEST_CASE("mock protocol answers every line") {
  testing::TempDir dir;
  testing::write_text(dir / "in.txt", "{\"op\":\"hello\"}\nnot json\n{\"op\":\"dance\"}\n{\"op\":\"hello\"}\n");
  const std::string cmd = std::string(MOCK_BRIDGE_PATH) + " < " + (dir / "in.txt").string() + " > " +
                          (dir / "out.txt").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string out = testing::read_bytes(dir / "out.txt");
  std::vector<nlohmann::json> replies;
  std::size_t start = 0;
  for (std::size_t nl; (nl = out.find('\n', start)) != std::string::npos; start = nl + 1) {
    replies.push_back(nlohmann::json::parse(out.substr(start, nl - start)));
  }
  REQUIRE(replies.size() == 4);
  CHECK(replies[0]["ok"] == true);
  CHECK(replies[0]["feature_dim"] == 768);
  CHECK(replies[1]["ok"] == false);
  CHECK(replies[2]["ok"] == false);
  CHECK(replies[2]["error"].get<std::string>().find("dance") != std::string::npos);
  CHECK(replies[3]["ok"] == true);
}
