#include "rmp/policies.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmp {

void PolicyParams::validate() const {
  const auto& a = attractor;
  const auto& o = obstacle;
  if (!(a.alpha > 0 && a.beta > 0 && a.c > 0)) {
    throw std::invalid_argument("attractor alpha, beta and c must be positive");
  }
  if (!(o.eta_rep > 0 && o.nu_rep > 0 && o.eta_damp > 0 && o.nu_damp > 0 && o.epsilon > 0 &&
        o.radius > 0 && o.c > 0)) {
    throw std::invalid_argument("obstacle parameters must be positive");
  }
  if (lidar_min_range < 0) throw std::invalid_argument("lidar_min_range must be >= 0");
}

PolicyParams preset(std::string_view name) {
  PolicyParams p;
  p.name = std::string(name);
  if (name == "static_map") {
    p.attractor = {10.0, 15.0, 0.2};
    p.obstacle = {88.0, 1.4, 140.0, 1.2, 1e-6, 2.4, 0.2};
  } else if (name == "lidar") {
    p.attractor = {0.8, 1.6, 1.0};
    p.obstacle = {1.2, 1.5, 3.0, 1.0, 1e-6, 1.3, 1.0};
  } else {
    throw std::invalid_argument(fmt::format("unknown preset '{}'", name));
  }
  return p;
}

Policyd attractor(const RobotStated& state, const Vec3d& goal, const AttractorParams& p) {
  return Policyd{p.alpha * softNormalize(goal - state.position, p.c) - p.beta * state.velocity,
                 Mat3d::Identity()};
}

double radiusWeight(double d, double r) {
  if (d >= r) return 0.0;
  return d * d / (r * r) - 2.0 * d / r + 1.0;
}

Policyd obstacleRayPolicy(const Vec3d& velocity, const Vec3d& r_away, double d,
                          const ObstacleParams& p) {
  const Vec3d f_rep = p.eta_rep * std::exp(-d / p.nu_rep) * r_away;
  const double closing = std::max(0.0, -velocity.dot(r_away));
  const Vec3d g_obs = closing * closing * r_away;
  const Vec3d f_damp = p.eta_damp / (d / p.nu_damp + p.epsilon) * g_obs;
  const double w = radiusWeight(d, p.radius);
  Policyd out;
  out.f = f_rep + f_damp;
  if (w > 0.0) {
    const Vec3d s = softNormalize(f_damp, p.c);
    out.A = w * s * s.transpose();
  }
  return out;
}

Policyd esdfPolicy(const RobotStated& state, const EsdfGrid& grid, const ObstacleParams& p) {
  const EsdfSample sample = esdfLookup(grid, state.position);
  if (sample.degenerate) return Policyd::zero();
  return obstacleRayPolicy(state.velocity, sample.gradient, std::max(sample.distance, 0.0), p);
}

PolicySumd rayPolicySum(const RobotStated& state, const FieldRef& field, const RayBundle& bundle,
                        const ObstacleParams& p, double max_range, const Workers& workers) {
  return reduceRays(
      bundle.size(),
      [&](std::size_t i) -> std::optional<PolicySumd> {
        const Vec3d& dir = bundle.directions[i];
        const auto hit = raycast(field, state.position, dir, max_range);
        if (!hit) return std::nullopt;
        return PolicySumd::of(obstacleRayPolicy(state.velocity, -dir, *hit, p));
      },
      workers);
}

Policyd rayPolicy(const RobotStated& state, const FieldRef& field, const RayBundle& bundle,
                  const ObstacleParams& p, double max_range, const Workers& workers) {
  return resolve(rayPolicySum(state, field, bundle, p, max_range, workers));
}

PolicySumd lidarPolicySum(const Vec3d& velocity, const RangeScan& scan, const ObstacleParams& p,
                          double min_range, const Workers& workers) {
  return reduceRays(
      scan.beams.size(),
      [&](std::size_t i) -> std::optional<PolicySumd> {
        const Beam& beam = scan.beams[i];
        if (!beam.valid || beam.range < min_range) return std::nullopt;
        return PolicySumd::of(obstacleRayPolicy(velocity, -scan.worldDirection(beam), beam.range, p));
      },
      workers);
}

Policyd lidarPolicy(const Vec3d& velocity, const RangeScan& scan, const ObstacleParams& p,
                    double min_range, const Workers& workers) {
  return resolve(lidarPolicySum(velocity, scan, p, min_range, workers));
}

}  // namespace rmp
