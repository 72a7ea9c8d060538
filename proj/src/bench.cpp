#include "rmp/bench.hpp"

#include "rmp/simulator.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace rmp {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Eval>
BenchRow timeLoop(std::string planner, std::size_t rays, int workers, std::size_t n_poses,
                  const BenchOptions& options, const Eval& eval) {
  if (options.reps < 1 || n_poses == 0) throw std::invalid_argument("bench needs reps and poses");
  using Clock = std::chrono::steady_clock;
  BenchRow row;
  row.planner = std::move(planner);
  row.rays = rays;
  row.workers = workers;
  row.reps = options.reps;
  row.outputs.resize(n_poses);
  for (int i = 0; i < options.warmup; ++i) eval(static_cast<std::size_t>(i) % n_poses);

  std::vector<double> samples_us(static_cast<std::size_t>(options.reps));
  for (int i = 0; i < options.reps; ++i) {
    const std::size_t pose = static_cast<std::size_t>(i) % n_poses;
    const auto t0 = Clock::now();
    Policyd out = eval(pose);
    samples_us[i] = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    row.outputs[pose] = out;
  }
  row.mean_us = std::accumulate(samples_us.begin(), samples_us.end(), 0.0) / options.reps;
  row.median_us = percentile(samples_us, 0.5);
  row.p95_us = percentile(samples_us, 0.95);
  row.hz = 1e6 / row.mean_us;
  row.per_ray_ns = row.mean_us * 1e3 / static_cast<double>(rays);
  return row;
}

}  // namespace

std::vector<RobotStated> benchPoses(const Scene& scene, std::size_t count, std::uint64_t seed,
                                    double clearance, double speed) {
  std::mt19937_64 rng(seed);
  std::vector<RobotStated> poses;
  const Box3d& b = scene.bounds;
  for (int attempt = 0; poses.size() < count && attempt < 100000; ++attempt) {
    Vec3d x;
    for (int a = 0; a < 3; ++a) x[a] = b.min()[a] + unit(rng) * b.sizes()[a];
    Vec3d v(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
    if (sceneDistance(scene, x) <= clearance || v.norm() < 1e-3) continue;
    poses.push_back({x, speed * v.normalized()});
  }
  if (poses.size() < count) throw std::runtime_error("could not place bench poses");
  return poses;
}

BenchRow benchPolicy(const EsdfGrid& grid, std::span<const RobotStated> poses, std::size_t n_rays,
                     int workers, const ObstacleParams& params, const BenchOptions& options) {
  const Workers pool(workers);
  const RayBundle bundle = sampleDirections(n_rays);
  const FieldRef field = fieldOf(grid);
  return timeLoop("ray", n_rays, workers, poses.size(), options, [&](std::size_t i) {
    return rayPolicy(poses[i], field, bundle, params, kDefaultMaxRange, pool);
  });
}

BenchRow benchScanPolicy(const EsdfGrid& grid, std::span<const RobotStated> poses, int rows,
                         int cols, int workers, const ObstacleParams& params,
                         const BenchOptions& options) {
  const Workers pool(workers);
  const ScanPattern pattern{rows, cols, 90.0};
  std::vector<RangeScan> scans;
  scans.reserve(poses.size());
  for (const auto& pose : poses) {
    scans.push_back(synthesizeScan(fieldOf(grid), SensorPose{pose.position}, pattern, {}, pool));
  }
  return timeLoop("scan", pattern.beamCount(), workers, poses.size(), options, [&](std::size_t i) {
    return lidarPolicy(poses[i].velocity, scans[i], params, 0.0, pool);
  });
}

void writeBenchCsv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "planner,rays,workers,reps,median_us,p95_us,hz,per_ray_ns\n";
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{:.3f},{:.3f},{:.3f},{:.3f}\n", r.planner, r.rays, r.workers,
               r.reps, r.median_us, r.p95_us, r.hz, r.per_ray_ns);
  }
}

void printBenchTable(std::ostream& os, std::span<const BenchRow> rows) {
  fmt::print(os, "{:<6} {:>8} {:>7} {:>12} {:>12} {:>12} {:>10}  {}\n", "policy", "rays",
             "workers", "median_us", "p95_us", "hz", "ns/ray", "vs 20 Hz sensor");
  for (const auto& r : rows) {
    fmt::print(os, "{:<6} {:>8} {:>7} {:>12.1f} {:>12.1f} {:>12.1f} {:>10.1f}  {}\n", r.planner,
               r.rays, r.workers, r.median_us, r.p95_us, r.hz, r.per_ray_ns,
               r.hz > kSensorRateHz ? "above" : "BELOW");
  }
}

}  // namespace rmp
