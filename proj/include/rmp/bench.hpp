#pragma once

// Throughput benchmarks of the raycasting and scan policies: full
// evaluate/reduce/resolve cycle timed per call over a fixed set of poses.

#include "rmp/geometry.hpp"
#include "rmp/policies.hpp"
#include "rmp/raycast.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rmp {

struct BenchRow {
  std::string planner;  // "ray" or "scan"
  std::size_t rays = 0;
  int workers = 1;
  int reps = 0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double hz = 0.0;  // 1 / mean latency
  double per_ray_ns = 0.0;
  /// Policies produced for each pose on the last repetition.
  std::vector<Policyd> outputs;
};

struct BenchOptions {
  int reps = 100;
  int warmup = 10;
};

/// Free poses with random velocities of the given speed, deterministic in seed.
std::vector<RobotStated> benchPoses(const Scene& scene, std::size_t count, std::uint64_t seed,
                                    double clearance = 0.5, double speed = 1.0);

BenchRow benchPolicy(const EsdfGrid& grid, std::span<const RobotStated> poses, std::size_t n_rays,
                     int workers, const ObstacleParams& params, const BenchOptions& options = {});

/// Scans for every pose are synthesized against the grid before timing starts.
BenchRow benchScanPolicy(const EsdfGrid& grid, std::span<const RobotStated> poses, int rows,
                         int cols, int workers, const ObstacleParams& params,
                         const BenchOptions& options = {});

void writeBenchCsv(std::ostream& os, std::span<const BenchRow> rows);
void printBenchTable(std::ostream& os, std::span<const BenchRow> rows);

inline constexpr double kSensorRateHz = 20.0;

}  // namespace rmp
