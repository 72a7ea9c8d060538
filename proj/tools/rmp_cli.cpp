// rmpnav: world generation, rollouts, batch evaluation, benchmarks and scan
// replay from the command line.
//
// Exit codes: 0 success, 2 collision, 3 timeout, 4 stuck, 64 usage, 65 data.

#include "rmp/bench.hpp"
#include "rmp/geometry.hpp"
#include "rmp/io.hpp"
#include "rmp/policies.hpp"
#include "rmp/simulator.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitCollision = 2;
constexpr int kExitTimeout = 3;
constexpr int kExitStuck = 4;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exitCode(rmp::Outcome o) {
  switch (o) {
    case rmp::Outcome::kSuccess: return kExitSuccess;
    case rmp::Outcome::kCollision: return kExitCollision;
    case rmp::Outcome::kTimeout: return kExitTimeout;
    case rmp::Outcome::kStuck: return kExitStuck;
  }
  return kExitData;
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

rmp::Box3d parseBounds(const std::string& text) {
  std::vector<double> v;
  for (const auto& item : splitList(text)) v.push_back(std::stod(item));
  if (v.size() == 1) return rmp::Box3d(rmp::Vec3d::Zero(), rmp::Vec3d::Constant(v[0]));
  if (v.size() == 3) return rmp::Box3d(rmp::Vec3d::Zero(), rmp::Vec3d(v[0], v[1], v[2]));
  if (v.size() == 6) return rmp::Box3d(rmp::Vec3d(v[0], v[1], v[2]), rmp::Vec3d(v[3], v[4], v[5]));
  throw UsageError("--bounds takes SIZE, SX,SY,SZ or X0,Y0,Z0,X1,Y1,Z1");
}

rmp::Vec3d parseVec(const std::string& text) {
  const auto items = splitList(text);
  if (items.size() != 3) throw UsageError(fmt::format("expected x,y,z, got '{}'", text));
  return {std::stod(items[0]), std::stod(items[1]), std::stod(items[2])};
}

std::ofstream openOut(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("{}: cannot open for writing", path));
  return out;
}

rmp::PlannerSpec parsePlanner(const std::string& text) {
  try {
    return rmp::PlannerSpec::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

rmp::PolicyParams resolveParams(const std::string& preset, const std::string& params_file) {
  if (!params_file.empty()) return rmp::loadParams(params_file);
  return rmp::preset(preset);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raycasting Riemannian motion policy navigation toolkit"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Worker threads for parallel internals (0 = all cores)");

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "Generate a random cluttered scene");
  std::uint64_t gen_seed = 0;
  int gen_obstacles = 0;
  std::string gen_bounds = "10";
  std::string gen_out;
  std::string gen_esdf;
  double gen_resolution = rmp::kDefaultResolution;
  gen->add_option("--seed", gen_seed, "World seed")->required();
  gen->add_option("--obstacles", gen_obstacles, "Number of primitives")->required();
  gen->add_option("--bounds", gen_bounds, "SIZE | SX,SY,SZ | X0,Y0,Z0,X1,Y1,Z1");
  gen->add_option("--out", gen_out, "Scene file to write")->required();
  gen->add_option("--esdf-out", gen_esdf, "Also write the baked ESDF blob");
  gen->add_option("--resolution", gen_resolution, "Bake resolution for occupancy / ESDF");

  // rollout
  auto* roll = app.add_subcommand("rollout", "Simulate one closed-loop rollout");
  std::string roll_scene, roll_planner = "ray:1024", roll_preset = "static_map", roll_params,
                          roll_out, roll_start, roll_goal;
  double roll_max_time = 60.0;
  roll->add_option("--scene", roll_scene, "Scene file")->required();
  roll->add_option("--planner", roll_planner, "ray:N | esdf | lidar:ROWSxCOLS");
  roll->add_option("--preset", roll_preset, "static_map | lidar");
  roll->add_option("--params", roll_params, "Parameter file (overrides --preset)");
  roll->add_option("--out", roll_out, "Trajectory CSV");
  roll->add_option("--start", roll_start, "x,y,z (default: scene start)");
  roll->add_option("--goal", roll_goal, "x,y,z (default: scene goal)");
  roll->add_option("--max-time", roll_max_time, "Episode length limit in seconds");

  // eval
  auto* eval = app.add_subcommand("eval", "Batch evaluation over random worlds");
  std::string eval_config, eval_out;
  eval->add_option("--config", eval_config, "Experiment config file")->required();
  eval->add_option("--out", eval_out, "Batch CSV (default: <output_dir>/batch.csv)");

  // bench
  auto* bench = app.add_subcommand("bench", "Policy evaluation throughput");
  std::string bench_rays = "16", bench_workers = "1", bench_scans, bench_out;
  int bench_reps = 100, bench_obstacles = 100;
  std::uint64_t bench_seed = 0;
  bench->add_option("--rays-sweep", bench_rays, "Comma-separated ray counts");
  bench->add_option("--workers-sweep", bench_workers, "Comma-separated worker counts");
  bench->add_option("--scan-sizes", bench_scans, "Comma-separated ROWSxCOLS scan sizes");
  bench->add_option("--reps", bench_reps, "Timed repetitions per configuration (>= 100)");
  bench->add_option("--seed", bench_seed, "World seed");
  bench->add_option("--obstacles", bench_obstacles, "World obstacle count");
  bench->add_option("--out", bench_out, "Report CSV");

  // replay-scan
  auto* replay = app.add_subcommand("replay-scan", "Evaluate the scan policy on recorded scans");
  std::vector<std::string> replay_scans;
  std::string replay_velocities, replay_preset = "lidar", replay_params, replay_out;
  replay->add_option("--scans", replay_scans, "Scan files");
  replay->add_option("--velocities", replay_velocities, "Velocity trace CSV (vx,vy,vz per scan)");
  replay->add_option("--preset", replay_preset, "static_map | lidar");
  replay->add_option("--params", replay_params, "Parameter file (overrides --preset)");
  replay->add_option("--out", replay_out, "Per-scan policy CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const rmp::Workers pool(workers);

    if (*gen) {
      rmp::WorldGenParams wp;
      wp.bounds = parseBounds(gen_bounds);
      wp.n_obstacles = gen_obstacles;
      const rmp::World world = rmp::generateWorld(gen_seed, wp);
      rmp::saveScene(gen_out, world.scene);
      const rmp::EsdfGrid grid = rmp::bakeEsdf(world.scene, gen_resolution, rmp::kDefaultMaxVoxels, pool);
      if (!gen_esdf.empty()) rmp::saveEsdf(gen_esdf, grid);
      fmt::print("occupancy {:.4f} at resolution {}\n", rmp::occupiedFraction(grid), gen_resolution);
      return kExitSuccess;
    }

    if (*roll) {
      const rmp::Scene scene = rmp::loadScene(roll_scene);
      rmp::RolloutConfig cfg;
      cfg.planner = parsePlanner(roll_planner);
      cfg.params = resolveParams(roll_preset, roll_params);
      cfg.max_time = roll_max_time;
      const rmp::Vec3d start = !roll_start.empty() ? parseVec(roll_start) : scene.start.value_or(rmp::Vec3d::Zero());
      if (roll_start.empty() && !scene.start) throw UsageError("scene has no start; pass --start");
      if (roll_goal.empty() && !scene.goal) throw UsageError("scene has no goal; pass --goal");
      const rmp::Vec3d goal = !roll_goal.empty() ? parseVec(roll_goal) : *scene.goal;
      const rmp::TrajectoryRecord rec = rmp::rollout(scene, start, goal, cfg, nullptr, pool);
      if (!roll_out.empty()) {
        auto out = openOut(roll_out);
        rmp::writeTrajectoryCsv(out, rec);
      }
      fmt::print("{} after {:.2f} s, path {:.2f} m, smoothness {}, plan {:.1f} us/step\n",
                 rmp::outcomeName(rec.outcome), rec.samples.back().t, rec.path_length,
                 rec.smoothness ? fmt::format("{:.4f}", *rec.smoothness) : "n/a",
                 rec.mean_plan_time_us);
      return exitCode(rec.outcome);
    }

    if (*eval) {
      const rmp::ExperimentConfig cfg = rmp::loadConfig(eval_config);
      const rmp::Workers batch_pool(workers > 0 ? workers : cfg.workers);
      const auto rows = rmp::evaluateBatch(cfg.batch(), batch_pool, [](const rmp::BatchProgress& p) {
        fmt::print(stderr, "\r[{}/{}] worlds", p.done, p.total);
      });
      fmt::print(stderr, "\n");
      std::filesystem::path out = eval_out;
      if (out.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        out = std::filesystem::path(cfg.output_dir) / "batch.csv";
      }
      auto os = openOut(out.string());
      rmp::writeBatchCsv(os, rows, cfg.record_timing);
      for (const auto& r : rows) {
        if (r.n_errors > 0) {
          fmt::print(stderr, "tier {} {}: {} runs failed to set up\n", r.tier, r.planner.str(), r.n_errors);
        }
      }
      return kExitSuccess;
    }

    if (*bench) {
      if (bench_reps < 100) throw UsageError("--reps must be at least 100");
      rmp::WorldGenParams wp;
      wp.n_obstacles = bench_obstacles;
      const rmp::World world = rmp::generateWorld(bench_seed, wp);
      const rmp::EsdfGrid grid = rmp::bakeEsdf(world.scene, rmp::kDefaultResolution, rmp::kDefaultMaxVoxels, pool);
      const auto poses = rmp::benchPoses(world.scene, 10, bench_seed);
      const rmp::ObstacleParams params = rmp::preset("static_map").obstacle;
      rmp::BenchOptions opts;
      opts.reps = bench_reps;
      std::vector<rmp::BenchRow> rows;
      for (const auto& w : splitList(bench_workers)) {
        const int nw = std::stoi(w);
        for (const auto& r : splitList(bench_rays)) {
          rows.push_back(rmp::benchPolicy(grid, poses, std::stoul(r), nw, params, opts));
        }
        for (const auto& s : splitList(bench_scans)) {
          const auto spec = parsePlanner("lidar:" + s);
          rows.push_back(rmp::benchScanPolicy(grid, poses, spec.rows, spec.cols, nw,
                                              rmp::preset("lidar").obstacle, opts));
        }
      }
      rmp::printBenchTable(std::cout, rows);
      if (!bench_out.empty()) {
        auto out = openOut(bench_out);
        rmp::writeBenchCsv(out, rows);
      }
      return kExitSuccess;
    }

    if (*replay) {
      if (replay_scans.empty()) throw UsageError("replay-scan needs at least one --scans file");
      const rmp::PolicyParams params = resolveParams(replay_preset, replay_params);
      std::vector<rmp::Vec3d> velocities;
      if (!replay_velocities.empty()) velocities = rmp::loadVelocities(replay_velocities);
      std::ostringstream csv;
      csv << "scan,file,valid_beams,fx,fy,fz,a_xx,a_xy,a_xz,a_yy,a_yz,a_zz\n";
      for (std::size_t i = 0; i < replay_scans.size(); ++i) {
        rmp::RangeScan scan;
        try {
          scan = rmp::loadScan(replay_scans[i]);
        } catch (const std::exception& e) {
          fmt::print(stderr, "warning: skipping scan: {}\n", e.what());
          continue;
        }
        const rmp::Vec3d v = i < velocities.size() ? velocities[i] : rmp::Vec3d::Zero();
        const rmp::Policyd p = rmp::lidarPolicy(v, scan, params.obstacle, params.lidar_min_range, pool);
        fmt::print(csv, "{},{},{},{},{},{},{},{},{},{},{},{}\n", i, replay_scans[i], scan.validCount(),
                   p.f.x(), p.f.y(), p.f.z(), p.A(0, 0), p.A(0, 1), p.A(0, 2), p.A(1, 1), p.A(1, 2),
                   p.A(2, 2));
      }
      if (replay_out.empty()) {
        std::cout << csv.str();
      } else {
        auto out = openOut(replay_out);
        out << csv.str();
      }
      return kExitSuccess;
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const rmp::ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
