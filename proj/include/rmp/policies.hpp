#pragma once

// Goal attractor, per-ray obstacle policy and the obstacle policies built on
// it: single ESDF lookup, Halton raycasting bundle and raw LiDAR scans.

#include "rmp/geometry.hpp"
#include "rmp/parallel.hpp"
#include "rmp/raycast.hpp"

#include <string>
#include <string_view>

namespace rmp {

struct AttractorParams {
  double alpha = 10.0;  // gain
  double beta = 15.0;   // damping
  double c = 0.2;       // soft-normalization
};

struct ObstacleParams {
  double eta_rep = 88.0;
  double nu_rep = 1.4;
  double eta_damp = 140.0;
  double nu_damp = 1.2;
  double epsilon = 1e-6;
  double radius = 2.4;
  double c = 0.2;
};

struct PolicyParams {
  std::string name;
  AttractorParams attractor;
  ObstacleParams obstacle;
  /// LiDAR beams closer than this are treated as hits on the vehicle itself.
  double lidar_min_range = 0.3;

  void validate() const;
};

/// Named presets: "static_map" and "lidar".
PolicyParams preset(std::string_view name);

/// f = alpha * s(goal - x) - beta * v, A = I.
Policyd attractor(const RobotStated& state, const Vec3d& goal, const AttractorParams& p);

/// Radius weight d^2/r^2 - 2d/r + 1 for d < r, else 0.
double radiusWeight(double d, double r);

/// Per-ray obstacle policy. r_away points away from the obstacle, d is the
/// distance to it. Returns (f_rep + f_damp, w_r(d) s(f_damp) s(f_damp)^T).
Policyd obstacleRayPolicy(const Vec3d& velocity, const Vec3d& r_away, double d,
                          const ObstacleParams& p);

/// Single-lookup obstacle policy using the ESDF distance and gradient.
Policyd esdfPolicy(const RobotStated& state, const EsdfGrid& grid, const ObstacleParams& p);

/// Partial sums for the raycasting policy: one obstacle policy per hit ray,
/// with the cast direction negated to point away from the hit.
PolicySumd rayPolicySum(const RobotStated& state, const FieldRef& field, const RayBundle& bundle,
                        const ObstacleParams& p, double max_range = kDefaultMaxRange,
                        const Workers& workers = serialWorkers());

Policyd rayPolicy(const RobotStated& state, const FieldRef& field, const RayBundle& bundle,
                  const ObstacleParams& p, double max_range = kDefaultMaxRange,
                  const Workers& workers = serialWorkers());

PolicySumd lidarPolicySum(const Vec3d& velocity, const RangeScan& scan, const ObstacleParams& p,
                          double min_range = 0.0, const Workers& workers = serialWorkers());

/// Same reduction as rayPolicy with (direction, range) taken from the valid
/// beams of a scan. Directions are rotated into the world by the scan pose.
Policyd lidarPolicy(const Vec3d& velocity, const RangeScan& scan, const ObstacleParams& p,
                    double min_range = 0.0, const Workers& workers = serialWorkers());

}  // namespace rmp
