#include "rmp/simulator.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace rmp {

namespace {

int parseInt(std::string_view s, std::string_view what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value <= 0) {
    throw std::invalid_argument(fmt::format("bad {} '{}'", what, s));
  }
  return value;
}

}  // namespace

PlannerSpec PlannerSpec::parse(std::string_view text) {
  if (text == "esdf") return esdf();
  if (text.starts_with("ray:")) return ray(parseInt(text.substr(4), "ray count"));
  if (text.starts_with("lidar:")) {
    const std::string_view dims = text.substr(6);
    const auto x = dims.find('x');
    if (x == std::string_view::npos) {
      throw std::invalid_argument(fmt::format("lidar planner needs ROWSxCOLS, got '{}'", text));
    }
    return lidar(parseInt(dims.substr(0, x), "scan rows"), parseInt(dims.substr(x + 1), "scan cols"));
  }
  throw std::invalid_argument(fmt::format("unknown planner '{}'", text));
}

std::string PlannerSpec::str() const {
  switch (kind) {
    case PlannerKind::kRay: return fmt::format("ray:{}", n_rays);
    case PlannerKind::kEsdf: return "esdf";
    case PlannerKind::kLidar: return fmt::format("lidar:{}x{}", rows, cols);
  }
  return {};
}

void RolloutConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(max_time > 0.0)) throw std::invalid_argument("max_time must be positive");
  if (!(robot_radius >= 0.0)) throw std::invalid_argument("robot_radius must be >= 0");
  if (!(goal_tolerance > 0.0)) throw std::invalid_argument("goal_tolerance must be positive");
  if (!(accel_limit > 0.0)) throw std::invalid_argument("accel_limit must be positive");
  if (planner.kind == PlannerKind::kRay && planner.n_rays <= 0) {
    throw std::invalid_argument("ray planner needs a positive ray count");
  }
  if (planner.kind == PlannerKind::kLidar && (planner.rows <= 0 || planner.cols <= 0)) {
    throw std::invalid_argument("lidar planner needs positive scan dimensions");
  }
  params.validate();
}

std::string_view outcomeName(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "SUCCESS";
    case Outcome::kCollision: return "COLLISION";
    case Outcome::kTimeout: return "TIMEOUT";
    case Outcome::kStuck: return "STUCK";
  }
  return "UNKNOWN";
}

RobotStated step(const RobotStated& state, const Vec3d& a, double dt) {
  RobotStated next;
  next.velocity = state.velocity + a * dt;
  next.position = state.position + next.velocity * dt;
  return next;
}

TrajectoryRecord rollout(const Scene& scene, const Vec3d& start, const Vec3d& goal,
                         const RolloutConfig& cfg, const EsdfGrid* grid, const Workers& workers) {
  cfg.validate();
  if (sceneDistance(scene, start, 0.0) <= cfg.robot_radius) {
    throw std::invalid_argument("start position lacks clearance");
  }
  if (cfg.stop_at_goal && sceneDistance(scene, goal, 0.0) <= cfg.robot_radius) {
    throw std::invalid_argument("goal position lacks clearance");
  }

  using Clock = std::chrono::steady_clock;
  const auto wall_start = Clock::now();

  std::optional<EsdfGrid> own_grid;
  if (cfg.planner.kind != PlannerKind::kLidar && grid == nullptr) {
    own_grid = bakeEsdf(scene, cfg.resolution, kDefaultMaxVoxels, workers);
    grid = &*own_grid;
  }
  const RayBundle bundle =
      cfg.planner.kind == PlannerKind::kRay ? sampleDirections(cfg.planner.n_rays) : RayBundle{};
  const ScanPattern pattern{cfg.planner.rows, cfg.planner.cols, cfg.scan_vertical_fov_deg};
  const auto& params = cfg.params;

  TrajectoryRecord rec;
  const auto max_steps = static_cast<std::size_t>(std::llround(cfg.max_time / cfg.dt));
  const auto window = static_cast<std::size_t>(std::llround(cfg.stuck_window / cfg.dt));
  rec.samples.reserve(max_steps + 1);
  rec.min_clearance = std::numeric_limits<double>::infinity();

  RobotStated state{start, Vec3d::Zero()};
  double speed_window_sum = 0.0;
  double plan_time_total = 0.0;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    TrajectorySample sample{t, state.position, state.velocity, Vec3d::Zero(), 0.0};
    const double clearance = sceneDistance(scene, state.position, t) - cfg.robot_radius;
    rec.min_clearance = std::min(rec.min_clearance, clearance);

    std::optional<Outcome> done;
    const bool at_goal = (state.position - goal).norm() <= cfg.goal_tolerance;
    speed_window_sum += state.velocity.norm();
    if (k > window) speed_window_sum -= rec.samples[k - window - 1].v.norm();
    if (!state.allFinite() || clearance <= 0.0) {
      done = Outcome::kCollision;
    } else if (cfg.stop_at_goal && at_goal) {
      done = Outcome::kSuccess;
    } else if (k >= max_steps) {
      done = cfg.stop_at_goal || !at_goal ? Outcome::kTimeout : Outcome::kSuccess;
    } else if (cfg.stop_at_goal && k >= window &&
               speed_window_sum / static_cast<double>(window + 1) < cfg.stuck_speed) {
      done = Outcome::kStuck;
    }
    if (done) {
      rec.samples.push_back(sample);
      rec.outcome = *done;
      break;
    }

    std::optional<RangeScan> scan;
    if (cfg.planner.kind == PlannerKind::kLidar) {
      ScanOptions opts;
      opts.max_range = cfg.max_range;
      scan = synthesizeScan(scene, SensorPose{state.position, Eigen::Quaterniond::Identity()},
                            pattern, t, opts, workers);
    }

    const auto plan_start = Clock::now();
    PolicySumd total = PolicySumd::of(attractor(state, goal, params.attractor));
    switch (cfg.planner.kind) {
      case PlannerKind::kRay:
        total += rayPolicySum(state, fieldOf(*grid), bundle, params.obstacle, cfg.max_range, workers);
        break;
      case PlannerKind::kEsdf:
        total += esdfPolicy(state, *grid, params.obstacle);
        break;
      case PlannerKind::kLidar:
        total += lidarPolicySum(state.velocity, *scan, params.obstacle, params.lidar_min_range,
                                workers);
        break;
    }
    Vec3d a = resolve(total).f;
    const double plan_us =
        std::chrono::duration<double, std::micro>(Clock::now() - plan_start).count();

    const double a_norm = a.norm();
    if (a_norm > cfg.accel_limit) {
      a *= cfg.accel_limit / a_norm;
      ++rec.clamp_events;
    }
    sample.a = a;
    sample.plan_time_us = plan_us;
    plan_time_total += plan_us;
    rec.samples.push_back(sample);
    state = step(state, a, cfg.dt);
  }

  for (std::size_t i = 1; i < rec.samples.size(); ++i) {
    rec.path_length += (rec.samples[i].x - rec.samples[i - 1].x).norm();
  }
  const std::size_t planned = rec.samples.size() - 1;
  rec.mean_plan_time_us = planned > 0 ? plan_time_total / static_cast<double>(planned) : 0.0;
  rec.smoothness = smoothness(rec);
  rec.wall_time_s = std::chrono::duration<double>(Clock::now() - wall_start).count();
  return rec;
}

std::optional<double> smoothness(std::span<const Vec3d> points) {
  constexpr double kMinSegment = 1e-6;
  std::vector<Vec3d> segments;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Vec3d s = points[i] - points[i - 1];
    if (s.norm() >= kMinSegment) segments.push_back(s);
  }
  if (segments.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const Vec3d& a = segments[i - 1];
    const Vec3d& b = segments[i];
    const double cosine = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
    sum += 1.0 - std::acos(cosine) / std::numbers::pi;
  }
  return sum / static_cast<double>(segments.size() - 1);
}

std::optional<double> smoothness(const TrajectoryRecord& traj) {
  std::vector<Vec3d> points;
  points.reserve(traj.samples.size());
  for (const auto& s : traj.samples) points.push_back(s.x);
  return smoothness(std::span<const Vec3d>(points));
}

void writeTrajectoryCsv(std::ostream& os, const TrajectoryRecord& traj) {
  os << "t,x,y,z,vx,vy,vz,ax,ay,az,plan_time_us\n";
  for (const auto& s : traj.samples) {
    fmt::print(os, "{:.4f},{},{},{},{},{},{},{},{},{},{:.3f}\n", s.t, s.x.x(), s.x.y(), s.x.z(),
               s.v.x(), s.v.y(), s.v.z(), s.a.x(), s.a.y(), s.a.z(), s.plan_time_us);
  }
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

struct RunResult {
  bool error = false;
  Outcome outcome = Outcome::kTimeout;
  std::optional<double> smoothness;
  double plan_time_us = 0.0;
  double wall_s = 0.0;
};

}  // namespace

std::vector<BatchRow> evaluateBatch(const BatchConfig& cfg, const Workers& workers,
                                    const std::function<void(const BatchProgress&)>& progress) {
  if (cfg.seeds.empty() || cfg.tiers.empty() || cfg.planners.empty()) {
    throw std::invalid_argument("batch needs seeds, tiers and planners");
  }
  cfg.rollout.validate();
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_planners = cfg.planners.size();
  const std::size_t n_jobs = cfg.tiers.size() * n_seeds;
  // results[(tier * n_seeds + seed) * n_planners + planner]
  std::vector<RunResult> results(n_jobs * n_planners);
  std::mutex progress_mutex;
  BatchProgress state{0, n_jobs};

  workers.parallelFor(n_jobs, [&](std::size_t job) {
    const int tier = cfg.tiers[job / n_seeds];
    const std::uint64_t seed = cfg.seeds[job % n_seeds];
    RunResult* out = &results[job * n_planners];
    try {
      WorldGenParams wp = cfg.world;
      wp.n_obstacles = tier;
      wp.robot_radius = cfg.rollout.robot_radius;
      const World world = generateWorld(seed, wp);
      const EsdfGrid grid = bakeEsdf(world.scene, cfg.rollout.resolution);
      for (std::size_t p = 0; p < n_planners; ++p) {
        RolloutConfig rc = cfg.rollout;
        rc.planner = cfg.planners[p];
        try {
          const TrajectoryRecord rec = rollout(world.scene, world.start, world.goal, rc, &grid);
          out[p] = {false, rec.outcome, rec.smoothness, rec.mean_plan_time_us, rec.wall_time_s};
        } catch (const std::exception&) {
          out[p].error = true;
        }
      }
    } catch (const std::exception&) {
      for (std::size_t p = 0; p < n_planners; ++p) out[p].error = true;
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      ++state.done;
      progress(state);
    }
  });

  std::vector<BatchRow> rows;
  for (std::size_t ti = 0; ti < cfg.tiers.size(); ++ti) {
    for (std::size_t p = 0; p < n_planners; ++p) {
      BatchRow row;
      row.tier = cfg.tiers[ti];
      row.planner = cfg.planners[p];
      int success = 0, collision = 0, stuck = 0, timeout = 0, timed = 0;
      double plan_sum = 0.0, wall_sum = 0.0;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const RunResult& r = results[(ti * n_seeds + s) * n_planners + p];
        ++row.n_runs;
        if (r.error) {
          ++row.n_errors;
          continue;
        }
        switch (r.outcome) {
          case Outcome::kSuccess:
            ++success;
            if (r.smoothness) row.smoothness_values.push_back(*r.smoothness);
            break;
          case Outcome::kCollision: ++collision; break;
          case Outcome::kStuck: ++stuck; break;
          case Outcome::kTimeout: ++timeout; break;
        }
        plan_sum += r.plan_time_us;
        wall_sum += r.wall_s;
        ++timed;
      }
      const double n = row.n_runs;
      row.success_rate = success / n;
      row.collision_rate = collision / n;
      row.stuck_rate = stuck / n;
      row.timeout_rate = timeout / n;
      const auto& sv = row.smoothness_values;
      row.smoothness_mean = sv.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : std::accumulate(sv.begin(), sv.end(), 0.0) / sv.size();
      row.smoothness_p10 = percentile(sv, 0.1);
      row.smoothness_p90 = percentile(sv, 0.9);
      row.plan_time_us_mean = timed > 0 ? plan_sum / timed : 0.0;
      row.rollout_wall_s_mean = timed > 0 ? wall_sum / timed : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void writeBatchCsv(std::ostream& os, std::span<const BatchRow> rows, bool record_timing) {
  os << "tier,planner,n_runs,success_rate,collision_rate,stuck_rate,timeout_rate,"
        "smoothness_mean,smoothness_p10,smoothness_p90,plan_time_us_mean\n";
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.6f},{:.6f},{:.6f},{:.3f}\n", r.tier,
               r.planner.str(), r.n_runs, r.success_rate, r.collision_rate, r.stuck_rate,
               r.timeout_rate, r.smoothness_mean, r.smoothness_p10, r.smoothness_p90,
               record_timing ? r.plan_time_us_mean : 0.0);
  }
}

}  // namespace rmp
