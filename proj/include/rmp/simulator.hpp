#pragma once

// Closed-loop rollouts of a policy-driven point robot, trajectory metrics and
// batch evaluation over random worlds.

#include "rmp/geometry.hpp"
#include "rmp/parallel.hpp"
#include "rmp/policies.hpp"
#include "rmp/raycast.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rmp {

enum class PlannerKind { kRay, kEsdf, kLidar };

struct PlannerSpec {
  PlannerKind kind = PlannerKind::kRay;
  int n_rays = 1024;
  int rows = 64;
  int cols = 512;

  static PlannerSpec ray(int n) { return {PlannerKind::kRay, n, 0, 0}; }
  static PlannerSpec esdf() { return {PlannerKind::kEsdf, 0, 0, 0}; }
  static PlannerSpec lidar(int rows, int cols) { return {PlannerKind::kLidar, 0, rows, cols}; }

  /// "ray:1024", "esdf", "lidar:64x512".
  static PlannerSpec parse(std::string_view text);
  std::string str() const;
  bool operator==(const PlannerSpec&) const = default;
};

struct RolloutConfig {
  double dt = 0.01;
  double max_time = 60.0;
  double robot_radius = 0.3;
  double goal_tolerance = 0.3;
  PlannerSpec planner;
  PolicyParams params = preset("static_map");
  double accel_limit = 40.0;
  double max_range = kDefaultMaxRange;
  double resolution = kDefaultResolution;
  double stuck_window = 2.0;
  double stuck_speed = 0.01;
  double scan_vertical_fov_deg = 90.0;
  /// Finish with SUCCESS as soon as the goal tolerance is reached. Disable
  /// for hold-position runs that should last the full max_time.
  bool stop_at_goal = true;

  void validate() const;
};

enum class Outcome { kSuccess, kCollision, kTimeout, kStuck };
std::string_view outcomeName(Outcome o);

struct TrajectorySample {
  double t = 0.0;
  Vec3d x = Vec3d::Zero();
  Vec3d v = Vec3d::Zero();
  Vec3d a = Vec3d::Zero();
  double plan_time_us = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  Outcome outcome = Outcome::kTimeout;
  std::optional<double> smoothness;
  double path_length = 0.0;
  double mean_plan_time_us = 0.0;
  double min_clearance = 0.0;  // min over samples of sceneDistance - robot_radius
  int clamp_events = 0;
  double wall_time_s = 0.0;
};

/// Semi-implicit Euler: v' = v + a dt, x' = x + v' dt.
RobotStated step(const RobotStated& state, const Vec3d& a, double dt);

/// Runs one rollout. For ray and esdf planners a baked grid is required; pass
/// one to share it between rollouts, otherwise it is baked at cfg.resolution.
/// Throws std::invalid_argument when start or goal lack clearance.
TrajectoryRecord rollout(const Scene& scene, const Vec3d& start, const Vec3d& goal,
                         const RolloutConfig& cfg, const EsdfGrid* grid = nullptr,
                         const Workers& workers = serialWorkers());

/// Mean angular similarity 1 - acos(cos angle)/pi over consecutive segment
/// pairs; segments shorter than 1e-6 are skipped. nullopt with fewer than
/// two usable segments.
std::optional<double> smoothness(std::span<const Vec3d> points);
std::optional<double> smoothness(const TrajectoryRecord& traj);

void writeTrajectoryCsv(std::ostream& os, const TrajectoryRecord& traj);

struct BatchConfig {
  std::vector<std::uint64_t> seeds;
  std::vector<int> tiers;
  std::vector<PlannerSpec> planners;
  RolloutConfig rollout;
  WorldGenParams world;
  /// When false, timing columns are written as 0 so reruns are byte-identical.
  bool record_timing = true;
};

struct BatchRow {
  int tier = 0;
  PlannerSpec planner;
  int n_runs = 0;
  int n_errors = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double stuck_rate = 0.0;
  double timeout_rate = 0.0;
  double smoothness_mean = 0.0;
  double smoothness_p10 = 0.0;
  double smoothness_p90 = 0.0;
  double plan_time_us_mean = 0.0;
  double rollout_wall_s_mean = 0.0;
  std::vector<double> smoothness_values;
};

struct BatchProgress {
  std::size_t done = 0;
  std::size_t total = 0;
};

/// Rows ordered by tier, then planner, as given. Rollouts run in parallel on
/// the pool; outcomes do not depend on the worker count.
std::vector<BatchRow> evaluateBatch(const BatchConfig& cfg, const Workers& workers = serialWorkers(),
                                    const std::function<void(const BatchProgress&)>& progress = {});

void writeBatchCsv(std::ostream& os, std::span<const BatchRow> rows, bool record_timing = true);

/// Linear-interpolation percentile, q in [0, 1]. NaN for empty input.
double percentile(std::vector<double> values, double q);

}  // namespace rmp
