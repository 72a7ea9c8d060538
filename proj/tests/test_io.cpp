#include "rmp/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace rmp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / fs::path("rmpnav_io_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void writeText(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

World sampleWorld() {
  WorldGenParams wp;
  wp.n_obstacles = 30;
  World w = generateWorld(4, wp);
  w.scene.primitives[0].velocity = Vec3d(0.5, -0.25, 0.0);
  return w;
}

}  // namespace

TEST_CASE("scene round trip") {
  const TempDir tmp;
  const World w = sampleWorld();
  saveScene(tmp / "a.json", w.scene);
  const Scene back = loadScene(tmp / "a.json");
  REQUIRE(back.primitives.size() == w.scene.primitives.size());
  for (std::size_t i = 0; i < back.primitives.size(); ++i) {
    const Primitive &a = w.scene.primitives[i], &b = back.primitives[i];
    CHECK(a.kind == b.kind);
    CHECK(a.op == b.op);
    CHECK(a.center == b.center);
    CHECK(a.size == b.size);
    CHECK(a.velocity == b.velocity);
  }
  CHECK(back.bounds.min() == w.scene.bounds.min());
  CHECK(back.bounds.max() == w.scene.bounds.max());
  CHECK(*back.start == w.start);
  CHECK(*back.goal == w.goal);
  CHECK(back.seed == 4);
  CHECK(serializeScene(back) == readFile(tmp / "a.json"));
}

TEST_CASE("generated scenes serialize to identical bytes") {
  WorldGenParams wp;
  wp.n_obstacles = 200;
  CHECK(serializeScene(generateWorld(1, wp).scene) == serializeScene(generateWorld(1, wp).scene));
  wp.n_obstacles = 0;
  const Scene empty = generateWorld(1, wp).scene;
  CHECK(sceneFromJson(nlohmann::json::parse(serializeScene(empty))).primitives.empty());
}

TEST_CASE("scene errors") {
  const TempDir tmp;
  SUBCASE("syntax errors carry the line") {
    writeText(tmp / "bad.json", "{\n  \"format\": \"rmp-scene\",\n  \"version\": 1\n  \"bounds\": {}\n}\n");
    try {
      loadScene(tmp / "bad.json");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(std::string(e.what()).find("bad.json:4:") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(loadScene(tmp / "nope.json"), ParseError);
  }
  SUBCASE("schema violations") {
    const nlohmann::json base = sceneToJson(sampleWorld().scene);
    auto rejects = [&](nlohmann::json j) {
      writeText(tmp / "s.json", j.dump());
      CHECK_THROWS_AS(loadScene(tmp / "s.json"), ParseError);
    };
    nlohmann::json j = base;
    j["version"] = 99;
    rejects(j);
    j = base;
    j["format"] = "other";
    rejects(j);
    j = base;
    j["primitives"][0]["kind"] = "cone";
    rejects(j);
    j = base;
    j["primitives"][1]["op"] = "intersect";
    rejects(j);
    j = base;
    j["primitives"][0]["center"] = {1, 2};
    rejects(j);
  }
}

TEST_CASE("esdf blob round trip") {
  const TempDir tmp;
  const World w = sampleWorld();
  const EsdfGrid g = bakeEsdf(w.scene, 0.25);
  saveEsdf(tmp / "g.esdf", g);
  const EsdfGrid back = loadEsdf(tmp / "g.esdf");
  CHECK(back.dims() == g.dims());
  CHECK(back.origin() == g.origin());
  CHECK(back.resolution() == g.resolution());
  for (std::size_t i = 0; i < g.size(); ++i) {
    REQUIRE(back.values()[i] == static_cast<double>(static_cast<float>(g.values()[i])));
  }
  CHECK(fs::file_size(tmp / "g.esdf") == 4 + 4 + 24 + 8 + 12 + 4 * g.size());

  const std::string bytes = readFile(tmp / "g.esdf");
  writeText(tmp / "cut.esdf", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(loadEsdf(tmp / "cut.esdf"), ParseError);
  writeText(tmp / "magic.esdf", "NOPE" + bytes.substr(4));
  CHECK_THROWS_AS(loadEsdf(tmp / "magic.esdf"), ParseError);
}

TEST_CASE("scan round trip") {
  const TempDir tmp;
  const World w = sampleWorld();
  ScanOptions opts;
  opts.dropout = 0.3;
  opts.dropout_seed = 2;
  const SensorPose pose{w.start, Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Vec3d::UnitZ()))};
  const RangeScan scan = synthesizeScan(fieldOf(w.scene), pose, ScanPattern{8, 32, 60.0}, opts);
  saveScan(tmp / "s.json", scan);
  const RangeScan back = loadScan(tmp / "s.json");
  REQUIRE(back.beams.size() == scan.beams.size());
  CHECK(back.validCount() == scan.validCount());
  for (std::size_t i = 0; i < scan.beams.size(); ++i) {
    CHECK(back.beams[i].valid == scan.beams[i].valid);
    if (scan.beams[i].valid) CHECK(back.beams[i].range == scan.beams[i].range);
    CHECK((back.worldDirection(back.beams[i]) - scan.worldDirection(scan.beams[i])).norm() < 1e-12);
  }
}

TEST_CASE("parameter files") {
  const TempDir tmp;
  const PolicyParams lidar = preset("lidar");
  const PolicyParams back = paramsFromJson(paramsToJson(lidar), preset("static_map"));
  CHECK(back.attractor.alpha == lidar.attractor.alpha);
  CHECK(back.obstacle.radius == lidar.obstacle.radius);
  CHECK(back.obstacle.nu_damp == lidar.obstacle.nu_damp);

  writeText(tmp / "p.json", R"({"preset": "lidar", "eta_rep": 2.5})");
  const PolicyParams p = loadParams(tmp / "p.json");
  CHECK(p.obstacle.eta_rep == 2.5);
  CHECK(p.obstacle.eta_damp == lidar.obstacle.eta_damp);
  writeText(tmp / "neg.json", R"({"r": -1})");
  CHECK_THROWS_AS(loadParams(tmp / "neg.json"), ParseError);
}

TEST_CASE("experiment config round trip") {
  const TempDir tmp;
  writeText(tmp / "c.json", R"({
    "format": "rmp-experiment", "version": 1,
    "preset": "static_map", "overrides": {"alpha_g": 12.0},
    "seeds": {"first": 10, "count": 5},
    "tiers": [25, 100],
    "planners": ["esdf", "ray:16", "lidar:8x32"],
    "rollout": {"dt": 0.005, "max_time": 30},
    "record_timing": false
  })");
  const ExperimentConfig cfg = loadConfig(tmp / "c.json");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{10, 11, 12, 13, 14});
  CHECK(cfg.params.attractor.alpha == 12.0);
  CHECK(cfg.params.attractor.beta == 15.0);
  CHECK(cfg.rollout.dt == 0.005);
  CHECK(cfg.planners.size() == 3);
  CHECK_FALSE(cfg.record_timing);

  writeText(tmp / "c2.json", configToJson(cfg).dump(2));
  const ExperimentConfig again = loadConfig(tmp / "c2.json");
  CHECK(sameConfig(cfg, again));
  CHECK(configToJson(again) == configToJson(cfg));
  CHECK(again.batch().rollout.params.attractor.alpha == 12.0);

  ExperimentConfig changed = again;
  changed.rollout.max_time = 31;
  CHECK_FALSE(sameConfig(cfg, changed));

  writeText(tmp / "bad.json", R"({"format": "rmp-experiment", "version": 1, "seeds": [], "tiers": [1], "planners": ["esdf"]})");
  CHECK_THROWS_AS(loadConfig(tmp / "bad.json"), ParseError);
}

TEST_CASE("velocity traces") {
  const TempDir tmp;
  writeText(tmp / "v.csv", "vx,vy,vz\n1,0,0\n# pause\n0.5, -1, 2\n");
  const auto vs = loadVelocities(tmp / "v.csv");
  REQUIRE(vs.size() == 2);
  CHECK(vs[1] == Vec3d(0.5, -1, 2));
  writeText(tmp / "bad.csv", "1,0,0\nfast,0,0\n");
  try {
    loadVelocities(tmp / "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
