#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include <json.hpp>

#include "gms3dqa/image.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const fs::path& p) { return json::parse(testing::read_bytes(p)); }

/// One small corpus and config shared by every case.
struct Fixture {
  testing::TempDir dir;
  fs::path corpus, manifest, config;

  Fixture() {
    corpus = dir / "corpus";
    manifest = corpus / "manifest.json";
    config = dir / "small.json";
    testing::write_text(config, R"({"render": {"resolution": 224, "splat_radius": 2.0},
      "train": {"epochs": 2, "learning_rate": 0.01, "batch_size": 4},
      "extractor": {"feature_dim": 64}, "hidden": 8})");
    REQUIRE(run("--seed 5 synth --out " + corpus.string() + " --contents 4 --levels 3 --points 8000") == 0);
  }

  std::string model() const { return (corpus / "sphere0_l0.ply").string(); }
  std::string cfg() const { return "--config " + config.string(); }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("synth is reproducible") {
  auto& f = fixture();
  const fs::path again = f.dir / "corpus2";
  REQUIRE(run("--seed 5 synth --out " + again.string() + " --contents 4 --levels 3 --points 8000") == 0);
  CHECK(testing::read_bytes(f.manifest) == testing::read_bytes(again / "manifest.json"));
  CHECK(testing::read_bytes(f.model()) == testing::read_bytes(again / "sphere0_l0.ply"));
  CHECK(load(f.manifest).size() == 12);
}

TEST_CASE("render writes twelve deterministic images") {
  auto& f = fixture();
  const fs::path a = f.dir / "ra", b = f.dir / "rb";
  REQUIRE(run("render --model " + f.model() + " --out " + a.string() + " --resolution 256") == 0);
  REQUIRE(run("--threads 3 render --model " + f.model() + " --out " + b.string() + " --resolution 256") == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(testing::read_bytes(e.path()) == testing::read_bytes(b / e.path().filename()));
  }
  CHECK(files == 12);
  const auto img = gms::read_png(a / "sphere0_l0_view1.png");
  CHECK(img.width == 256);
}

TEST_CASE("qmm output and provenance") {
  auto& f = fixture();
  const fs::path a = f.dir / "q" / "a.png", b = f.dir / "q" / "b.png", c = f.dir / "q" / "c.png";
  REQUIRE(run("--seed 3 qmm --model " + f.model() + " --out " + a.string() + " --resolution 256") == 0);
  REQUIRE(run("--seed 3 qmm --model " + f.model() + " --out " + b.string() + " --resolution 256") == 0);
  REQUIRE(run("--seed 4 qmm --model " + f.model() + " --out " + c.string() + " --resolution 256") == 0);
  CHECK(testing::read_bytes(a) == testing::read_bytes(b));
  CHECK(testing::read_bytes(f.dir / "q" / "a.json") == testing::read_bytes(f.dir / "q" / "b.json"));
  CHECK(testing::read_bytes(a) != testing::read_bytes(c));
  const auto img = gms::read_png(a);
  CHECK(img.width == 224);
  CHECK(img.height == 224);
  const json prov = load(f.dir / "q" / "a.json");
  CHECK(prov["slots"].size() == 49);
  CHECK(prov["config"]["grid"]["seed"] == 3);

  const fs::path one = f.dir / "q" / "one.png";
  REQUIRE(run("qmm --model " + f.model() + " --out " + one.string() + " --resolution 256 --views 1") == 0);
  for (const auto& s : load(f.dir / "q" / "one.json")["slots"]) CHECK(s["view"] == 1);
}

TEST_CASE("train and evaluate are reproducible") {
  auto& f = fixture();
  const auto d = f.dir / "t";
  const std::string common = f.cfg() + " --seed 9 train --manifest " + f.manifest.string();
  REQUIRE(run(common + " --state " + (d / "a.bin").string() + " --out " + (d / "a.json").string()) == 0);
  REQUIRE(run(common + " --state " + (d / "b.bin").string() + " --out " + (d / "b.json").string()) == 0);
  CHECK(testing::read_bytes(d / "a.bin") == testing::read_bytes(d / "b.bin"));
  CHECK(testing::read_bytes(d / "a.json") == testing::read_bytes(d / "b.json"));
  CHECK(load(d / "a.json")["epochs"].size() == 2);

  const std::string ev = f.cfg() + " evaluate --manifest " + f.manifest.string() + " --state " + (d / "a.bin").string();
  REQUIRE(run(ev + " --out " + (d / "ea.json").string()) == 0);
  REQUIRE(run(ev + " --out " + (d / "eb.json").string()) == 0);
  CHECK(testing::read_bytes(d / "ea.json") == testing::read_bytes(d / "eb.json"));
  CHECK(load(d / "ea.json")["predictions"].size() == 12);
}

TEST_CASE("oracle evaluation bounds") {
  auto& f = fixture();
  const auto d = f.dir / "o";
  REQUIRE(run("evaluate --oracle --manifest " + f.manifest.string() + " --out " + (d / "o.json").string()) == 0);
  REQUIRE(run("evaluate --anti-oracle --manifest " + f.manifest.string() + " --out " + (d / "a.json").string()) == 0);
  CHECK(load(d / "o.json")["srcc"].get<double>() == doctest::Approx(1.0));
  CHECK(load(d / "a.json")["srcc"].get<double>() == doctest::Approx(-1.0));
  REQUIRE(run("crossval --oracle --k 2 --manifest " + f.manifest.string() + " --out " + (d / "cv.json").string()) == 0);
  CHECK(load(d / "cv.json")["mean"]["srcc"].get<double>() == doctest::Approx(1.0));
  REQUIRE(run("crossdb --oracle --train " + f.manifest.string() + " --test " + f.manifest.string() + " --out " +
              (d / "db.json").string()) == 0);
  CHECK(load(d / "db.json")["mean"]["srcc"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("crossval with five folds") {
  auto& f = fixture();
  const auto d = f.dir / "k5";
  REQUIRE(run("synth --out " + d.string() + " --contents 5 --levels 2 --points 2000") == 0);
  REQUIRE(run("crossval --oracle --k 5 --manifest " + (d / "manifest.json").string() + " --out " +
              (d / "cv.json").string()) != 0);
  // Two entries per content cannot fill a 5-sample fold; three can.
  REQUIRE(run("synth --out " + d.string() + " --contents 5 --levels 5 --points 2000") == 0);
  REQUIRE(run("crossval --oracle --k 5 --manifest " + (d / "manifest.json").string() + " --out " +
              (d / "cv.json").string()) == 0);
  const json r = load(d / "cv.json");
  CHECK(r["folds"].size() == 5);
  CHECK(r.contains("mean"));
}

TEST_CASE("crossval report does not depend on threads") {
  auto& f = fixture();
  const auto d = f.dir / "cv";
  const std::string common = f.cfg() + " --seed 2";
  const std::string args = " crossval --k 2 --manifest " + f.manifest.string() + " --out ";
  REQUIRE(run(common + " --threads 1" + args + (d / "a.json").string()) == 0);
  REQUIRE(run(common + " --threads 2" + args + (d / "b.json").string()) == 0);
  CHECK(testing::read_bytes(d / "a.json") == testing::read_bytes(d / "b.json"));
  CHECK(load(d / "a.json")["folds"].size() == 2);
}

TEST_CASE("bench and sweep keep timings apart") {
  auto& f = fixture();
  const auto d = f.dir / "b";
  const std::string b = f.cfg() + " bench --mode III --trials 3 --models " + f.model() + " --out ";
  for (const char* mode : {"I", "II"}) {
    const auto out = d / (std::string("mode") + mode + ".json");
    REQUIRE(run(f.cfg() + " bench --mode " + mode + " --trials 3 --models " + f.model() + " --out " + out.string()) == 0);
    CHECK(load(out)["extractor_invocations"] == 6);
  }
  REQUIRE(run(b + (d / "a.json").string()) == 0);
  REQUIRE(run(b + (d / "b.json").string()) == 0);
  CHECK(testing::read_bytes(d / "a.json") == testing::read_bytes(d / "b.json"));
  CHECK(load(d / "a.json")["extractor_invocations"] == 1);
  CHECK(load(d / "a.timings.json")["total"]["samples"].size() == 3);

  REQUIRE(run(f.cfg() + " sweep --oracle --n 1,6 --k 2 --trials 3 --manifest " + f.manifest.string() + " --out " +
              (d / "s.json").string() + " --csv " + (d / "s.csv").string()) == 0);
  CHECK(load(d / "s.json")["points"].size() == 2);
  CHECK(fs::exists(d / "s.timings.json"));
  CHECK(fs::exists(d / "s.csv"));
}

TEST_CASE("exit codes") {
  auto& f = fixture();
  const auto out = (f.dir / "x.json").string();
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("render --model " + f.model()) == 2);
  CHECK(run("render --model /nonexistent.ply --out " + (f.dir / "x").string()) == 2);
  CHECK(run("evaluate --manifest " + f.manifest.string() + " --out " + out) == 2);
  testing::write_text(f.dir / "bad.json", "{\"render\": {\"resolutoin\": 5}}");
  CHECK(run("--config " + (f.dir / "bad.json").string() + " qmm --model " + f.model() + " --out " + out) == 2);
  CHECK(run("qmm --model " + f.model() + " --resolution 128 --out " + (f.dir / "x.png").string()) == 3);
  CHECK(run("bench --mode III --trials 2 --models " + f.model() + " --out " + out) == 2);
  CHECK(run("evaluate --oracle --manifest " + f.manifest.string() + " --out " + out) == 0);
}
