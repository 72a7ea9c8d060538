#include "rmp/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rmp {

using nlohmann::json;

ParseError::ParseError(const std::string& path, int line, const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", path, line, message)
                                  : fmt::format("{}: {}", path, message)),
      path_(path),
      line_(line) {}

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parseJson(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ParseError(path, line, e.what());
  }
}

namespace {

void writeText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("{}: cannot open for writing", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("{}: write failed", path.string()));
}

json vec(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3d vecFrom(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return Vec3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

void checkHeader(const json& j, std::string_view format, int version) {
  if (j.value("format", std::string()) != format) {
    throw std::invalid_argument(fmt::format("expected format \"{}\"", format));
  }
  const int v = j.at("version").get<int>();
  if (v != version) throw std::invalid_argument(fmt::format("unsupported version {}", v));
}

template <typename T, typename Fn>
T withPath(const std::filesystem::path& path, const Fn& fn) {
  const std::string text = readFile(path);
  const json j = parseJson(text, path.string());
  try {
    return fn(j);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

}  // namespace

json sceneToJson(const Scene& scene) {
  json prims = json::array();
  for (const Primitive& p : scene.primitives) {
    json jp;
    jp["kind"] = p.kind == PrimitiveKind::kSphere ? "sphere" : "box";
    jp["center"] = vec(p.center);
    if (p.kind == PrimitiveKind::kSphere) {
      jp["radius"] = p.radius();
    } else {
      jp["half_extents"] = vec(p.size);
    }
    jp["op"] = p.op == BoolOp::kUnion ? "union" : "subtract";
    jp["velocity"] = vec(p.velocity);
    prims.push_back(std::move(jp));
  }
  json j;
  j["format"] = "rmp-scene";
  j["version"] = kSceneVersion;
  j["seed"] = scene.seed;
  j["bounds"] = {{"min", vec(scene.bounds.min())}, {"max", vec(scene.bounds.max())}};
  if (scene.start) j["start"] = vec(*scene.start);
  if (scene.goal) j["goal"] = vec(*scene.goal);
  j["primitives"] = std::move(prims);
  return j;
}

Scene sceneFromJson(const json& j) {
  checkHeader(j, "rmp-scene", kSceneVersion);
  Scene scene;
  scene.seed = j.value("seed", std::uint64_t{0});
  scene.bounds = Box3d(vecFrom(j.at("bounds").at("min")), vecFrom(j.at("bounds").at("max")));
  if (j.contains("start")) scene.start = vecFrom(j.at("start"));
  if (j.contains("goal")) scene.goal = vecFrom(j.at("goal"));
  std::size_t index = 0;
  for (const json& jp : j.at("primitives")) {
    try {
      const std::string kind = jp.at("kind").get<std::string>();
      const std::string op_name = jp.value("op", std::string("union"));
      if (op_name != "union" && op_name != "subtract") {
        throw std::invalid_argument(fmt::format("unknown op \"{}\"", op_name));
      }
      const BoolOp op = op_name == "union" ? BoolOp::kUnion : BoolOp::kSubtract;
      const Vec3d center = vecFrom(jp.at("center"));
      Primitive p;
      if (kind == "sphere") {
        p = Primitive::sphere(center, jp.at("radius").get<double>(), op);
      } else if (kind == "box") {
        p = Primitive::box(center, vecFrom(jp.at("half_extents")), op);
      } else {
        throw std::invalid_argument(fmt::format("unknown kind \"{}\"", kind));
      }
      if (jp.contains("velocity")) p.velocity = vecFrom(jp.at("velocity"));
      scene.primitives.push_back(p);
    } catch (const std::exception& e) {
      throw std::invalid_argument(fmt::format("primitives[{}]: {}", index, e.what()));
    }
    ++index;
  }
  scene.validate();
  return scene;
}

std::string serializeScene(const Scene& scene) { return sceneToJson(scene).dump(2) + "\n"; }

void saveScene(const std::filesystem::path& path, const Scene& scene) {
  writeText(path, serializeScene(scene));
}

Scene loadScene(const std::filesystem::path& path) {
  return withPath<Scene>(path, [](const json& j) { return sceneFromJson(j); });
}

namespace {

template <typename T>
void putLe(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T getLe(const std::string& in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (pos + sizeof(U) > in.size()) throw std::invalid_argument("truncated esdf blob");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

}  // namespace

void saveEsdf(const std::filesystem::path& path, const EsdfGrid& grid) {
  std::string out = "ESDF";
  out.reserve(64 + grid.size() * 4);
  putLe<std::uint32_t>(out, kEsdfVersion);
  for (int a = 0; a < 3; ++a) putLe<double>(out, grid.origin()[a]);
  putLe<double>(out, grid.resolution());
  for (int a = 0; a < 3; ++a) putLe<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dims()[a]));
  for (double v : grid.values()) putLe<float>(out, static_cast<float>(v));
  writeText(path, out);
}

EsdfGrid loadEsdf(const std::filesystem::path& path) {
  const std::string in = readFile(path);
  try {
    if (in.compare(0, 4, "ESDF") != 0) throw std::invalid_argument("bad magic");
    std::size_t pos = 4;
    const auto version = getLe<std::uint32_t>(in, pos);
    if (version != kEsdfVersion) throw std::invalid_argument(fmt::format("unsupported version {}", version));
    Vec3d origin;
    for (int a = 0; a < 3; ++a) origin[a] = getLe<double>(in, pos);
    const double resolution = getLe<double>(in, pos);
    Eigen::Vector3i dims;
    for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(getLe<std::uint32_t>(in, pos));
    const std::size_t n = static_cast<std::size_t>(dims.cast<long long>().prod());
    if (in.size() - pos != n * 4) throw std::invalid_argument("voxel payload size mismatch");
    std::vector<double> values(n);
    for (auto& v : values) v = getLe<float>(in, pos);
    return EsdfGrid(origin, resolution, dims, std::move(values));
  } catch (const std::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

json scanToJson(const RangeScan& scan) {
  json beams = json::array();
  const int cols = scan.pattern.cols;
  for (std::size_t i = 0; i < scan.beams.size(); ++i) {
    const Beam& b = scan.beams[i];
    beams.push_back(json::array({static_cast<int>(i) / cols, static_cast<int>(i) % cols,
                                 b.valid ? b.range : 0.0, b.valid ? 1 : 0}));
  }
  const auto& q = scan.pose.orientation;
  json j;
  j["format"] = "rmp-scan";
  j["version"] = kScanVersion;
  j["time"] = scan.time;
  j["pose"] = {{"position", vec(scan.pose.position)},
               {"orientation", json::array({q.w(), q.x(), q.y(), q.z()})}};
  j["pattern"] = {{"rows", scan.pattern.rows},
                  {"cols", scan.pattern.cols},
                  {"vertical_fov_deg", scan.pattern.vertical_fov_deg}};
  j["beams"] = std::move(beams);
  return j;
}

RangeScan scanFromJson(const json& j) {
  checkHeader(j, "rmp-scan", kScanVersion);
  RangeScan scan;
  scan.time = j.value("time", 0.0);
  scan.pose.position = vecFrom(j.at("pose").at("position"));
  const json& q = j.at("pose").at("orientation");
  if (!q.is_array() || q.size() != 4) throw std::invalid_argument("orientation must be [w,x,y,z]");
  scan.pose.orientation =
      Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>())
          .normalized();
  const json& pat = j.at("pattern");
  scan.pattern = ScanPattern{pat.at("rows").get<int>(), pat.at("cols").get<int>(),
                             pat.value("vertical_fov_deg", 90.0)};
  if (scan.pattern.rows < 1 || scan.pattern.cols < 1) throw std::invalid_argument("empty scan pattern");
  scan.beams.resize(scan.pattern.beamCount());
  for (int r = 0; r < scan.pattern.rows; ++r) {
    for (int c = 0; c < scan.pattern.cols; ++c) {
      scan.beams[static_cast<std::size_t>(r) * scan.pattern.cols + c].direction =
          scan.pattern.direction(r, c);
    }
  }
  for (const json& b : j.at("beams")) {
    const int row = b.at(0).get<int>();
    const int col = b.at(1).get<int>();
    if (row < 0 || row >= scan.pattern.rows || col < 0 || col >= scan.pattern.cols) {
      throw std::invalid_argument(fmt::format("beam ({}, {}) outside pattern", row, col));
    }
    Beam& beam = scan.beams[static_cast<std::size_t>(row) * scan.pattern.cols + col];
    beam.range = b.at(2).get<double>();
    beam.valid = b.at(3).get<int>() != 0 && beam.range > 0.0;
  }
  return scan;
}

void saveScan(const std::filesystem::path& path, const RangeScan& scan) {
  writeText(path, scanToJson(scan).dump() + "\n");
}

RangeScan loadScan(const std::filesystem::path& path) {
  return withPath<RangeScan>(path, [](const json& j) { return scanFromJson(j); });
}

json paramsToJson(const PolicyParams& p) {
  return {{"name", p.name},
          {"alpha_g", p.attractor.alpha},
          {"beta_g", p.attractor.beta},
          {"c", p.attractor.c},
          {"c_obstacle", p.obstacle.c},
          {"eta_rep", p.obstacle.eta_rep},
          {"upsilon_rep", p.obstacle.nu_rep},
          {"eta_damp", p.obstacle.eta_damp},
          {"upsilon_damp", p.obstacle.nu_damp},
          {"r", p.obstacle.radius},
          {"epsilon", p.obstacle.epsilon},
          {"lidar_min_range", p.lidar_min_range}};
}

PolicyParams paramsFromJson(const json& j, PolicyParams p) {
  auto set = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  if (j.contains("name")) p.name = j.at("name").get<std::string>();
  set("alpha_g", p.attractor.alpha);
  set("beta_g", p.attractor.beta);
  if (j.contains("c")) p.attractor.c = p.obstacle.c = j.at("c").get<double>();
  set("c_obstacle", p.obstacle.c);
  set("eta_rep", p.obstacle.eta_rep);
  set("upsilon_rep", p.obstacle.nu_rep);
  set("eta_damp", p.obstacle.eta_damp);
  set("upsilon_damp", p.obstacle.nu_damp);
  set("r", p.obstacle.radius);
  set("epsilon", p.obstacle.epsilon);
  set("lidar_min_range", p.lidar_min_range);
  p.validate();
  return p;
}

PolicyParams loadParams(const std::filesystem::path& path) {
  return withPath<PolicyParams>(path, [](const json& j) {
    const PolicyParams base = preset(j.value("preset", std::string("static_map")));
    return paramsFromJson(j, base);
  });
}

BatchConfig ExperimentConfig::batch() const {
  BatchConfig b;
  b.seeds = seeds;
  b.tiers = tiers;
  b.planners = planners;
  b.rollout = rollout;
  b.rollout.params = params;
  b.world = world;
  b.record_timing = record_timing;
  return b;
}

json configToJson(const ExperimentConfig& cfg) {
  json planners = json::array();
  for (const auto& p : cfg.planners) planners.push_back(p.str());
  const RolloutConfig& r = cfg.rollout;
  const WorldGenParams& w = cfg.world;
  json j;
  j["format"] = "rmp-experiment";
  j["version"] = kConfigVersion;
  j["preset"] = cfg.preset;
  j["overrides"] = paramsToJson(cfg.params);
  j["seeds"] = cfg.seeds;
  j["tiers"] = cfg.tiers;
  j["planners"] = planners;
  j["rollout"] = {{"dt", r.dt},
                  {"max_time", r.max_time},
                  {"robot_radius", r.robot_radius},
                  {"goal_tolerance", r.goal_tolerance},
                  {"accel_limit", r.accel_limit},
                  {"max_range", r.max_range},
                  {"resolution", r.resolution},
                  {"stuck_window", r.stuck_window},
                  {"stuck_speed", r.stuck_speed},
                  {"scan_vertical_fov_deg", r.scan_vertical_fov_deg}};
  j["world"] = {{"bounds", {{"min", vec(w.bounds.min())}, {"max", vec(w.bounds.max())}}},
                {"min_size", w.min_size},
                {"max_size", w.max_size},
                {"sphere_probability", w.sphere_probability},
                {"subtract_probability", w.subtract_probability},
                {"min_separation_fraction", w.min_separation_fraction},
                {"max_attempts", w.max_attempts}};
  j["workers"] = cfg.workers;
  j["record_timing"] = cfg.record_timing;
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig configFromJson(const json& j) {
  checkHeader(j, "rmp-experiment", kConfigVersion);
  ExperimentConfig cfg;
  cfg.preset = j.value("preset", std::string("static_map"));
  cfg.params = paramsFromJson(j.value("overrides", json::object()), preset(cfg.preset));

  const json& seeds = j.at("seeds");
  if (seeds.is_object()) {
    const auto first = seeds.value("first", std::uint64_t{0});
    const auto count = seeds.at("count").get<std::uint64_t>();
    for (std::uint64_t s = 0; s < count; ++s) cfg.seeds.push_back(first + s);
  } else {
    cfg.seeds = seeds.get<std::vector<std::uint64_t>>();
  }
  cfg.tiers = j.at("tiers").get<std::vector<int>>();
  for (const auto& p : j.at("planners")) cfg.planners.push_back(PlannerSpec::parse(p.get<std::string>()));

  const json r = j.value("rollout", json::object());
  RolloutConfig& rc = cfg.rollout;
  rc.dt = r.value("dt", rc.dt);
  rc.max_time = r.value("max_time", rc.max_time);
  rc.robot_radius = r.value("robot_radius", rc.robot_radius);
  rc.goal_tolerance = r.value("goal_tolerance", rc.goal_tolerance);
  rc.accel_limit = r.value("accel_limit", rc.accel_limit);
  rc.max_range = r.value("max_range", rc.max_range);
  rc.resolution = r.value("resolution", rc.resolution);
  rc.stuck_window = r.value("stuck_window", rc.stuck_window);
  rc.stuck_speed = r.value("stuck_speed", rc.stuck_speed);
  rc.scan_vertical_fov_deg = r.value("scan_vertical_fov_deg", rc.scan_vertical_fov_deg);
  rc.params = cfg.params;

  const json w = j.value("world", json::object());
  WorldGenParams& wp = cfg.world;
  if (w.contains("bounds")) {
    wp.bounds = Box3d(vecFrom(w.at("bounds").at("min")), vecFrom(w.at("bounds").at("max")));
  }
  wp.min_size = w.value("min_size", wp.min_size);
  wp.max_size = w.value("max_size", wp.max_size);
  wp.sphere_probability = w.value("sphere_probability", wp.sphere_probability);
  wp.subtract_probability = w.value("subtract_probability", wp.subtract_probability);
  wp.min_separation_fraction = w.value("min_separation_fraction", wp.min_separation_fraction);
  wp.max_attempts = w.value("max_attempts", wp.max_attempts);

  cfg.workers = j.value("workers", 0);
  cfg.record_timing = j.value("record_timing", true);
  cfg.output_dir = j.value("output_dir", std::string("."));
  if (cfg.seeds.empty() || cfg.tiers.empty() || cfg.planners.empty()) {
    throw std::invalid_argument("config needs non-empty seeds, tiers and planners");
  }
  rc.validate();
  return cfg;
}

ExperimentConfig loadConfig(const std::filesystem::path& path) {
  return withPath<ExperimentConfig>(path, [](const json& j) { return configFromJson(j); });
}

bool sameConfig(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto same_params = [](const PolicyParams& x, const PolicyParams& y) {
    const auto &xa = x.attractor, &ya = y.attractor;
    const auto &xo = x.obstacle, &yo = y.obstacle;
    return x.name == y.name && xa.alpha == ya.alpha && xa.beta == ya.beta && xa.c == ya.c &&
           xo.eta_rep == yo.eta_rep && xo.nu_rep == yo.nu_rep && xo.eta_damp == yo.eta_damp &&
           xo.nu_damp == yo.nu_damp && xo.epsilon == yo.epsilon && xo.radius == yo.radius &&
           xo.c == yo.c && x.lidar_min_range == y.lidar_min_range;
  };
  const RolloutConfig &ra = a.rollout, &rb = b.rollout;
  const WorldGenParams &wa = a.world, &wb = b.world;
  return a.preset == b.preset && same_params(a.params, b.params) && a.seeds == b.seeds &&
         a.tiers == b.tiers && a.planners == b.planners && ra.dt == rb.dt &&
         ra.max_time == rb.max_time && ra.robot_radius == rb.robot_radius &&
         ra.goal_tolerance == rb.goal_tolerance && ra.accel_limit == rb.accel_limit &&
         ra.max_range == rb.max_range && ra.resolution == rb.resolution &&
         ra.stuck_window == rb.stuck_window && ra.stuck_speed == rb.stuck_speed &&
         ra.scan_vertical_fov_deg == rb.scan_vertical_fov_deg &&
         wa.bounds.min() == wb.bounds.min() &&
         wa.bounds.max() == wb.bounds.max() && wa.min_size == wb.min_size &&
         wa.max_size == wb.max_size && wa.sphere_probability == wb.sphere_probability &&
         wa.subtract_probability == wb.subtract_probability &&
         wa.min_separation_fraction == wb.min_separation_fraction &&
         wa.max_attempts == wb.max_attempts && a.workers == b.workers &&
         a.record_timing == b.record_timing && a.output_dir == b.output_dir;
}

std::vector<Vec3d> loadVelocities(const std::filesystem::path& path) {
  std::istringstream in(readFile(path));
  std::vector<Vec3d> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Vec3d v;
    if (!(ls >> v.x() >> v.y() >> v.z())) {
      if (out.empty() && line_no == 1) continue;  // header
      throw ParseError(path.string(), line_no, "expected vx,vy,vz");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace rmp
