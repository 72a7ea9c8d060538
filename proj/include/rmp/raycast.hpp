#pragma once

// Halton sphere sampling, sphere-traced raycasts against scenes and ESDF
// grids, and synthetic LiDAR range scans.

#include "rmp/geometry.hpp"

#include <Eigen/Geometry>

#include <optional>
#include <variant>
#include <vector>

namespace rmp {

/// Radical inverse of index in the given base.
double halton(std::uint64_t index, unsigned base);

struct RayBundle {
  std::vector<Vec3d> directions;
  std::size_t size() const { return directions.size(); }
};

/// Directions i = 1..n: polar = acos(1 - 2 H(i,2)), azimuth = 2 pi H(i,3).
/// Index 0 is skipped since it maps onto the +z pole.
RayBundle sampleDirections(std::size_t n);

inline constexpr double kDefaultMaxRange = 20.0;
inline constexpr double kAnalyticSurfaceEpsilon = 1e-4;
inline constexpr int kMaxTraceSteps = 1024;

/// A scene evaluated at a fixed time; sphere-traced exactly.
struct SceneAtTime {
  const Scene* scene = nullptr;
  double time = 0.0;
  /// Hit threshold; raise it to match a grid's when comparing the two.
  double epsilon = kAnalyticSurfaceEpsilon;
};

/// Anything the raycaster can trace: a baked grid or an analytic scene.
using FieldRef = std::variant<const EsdfGrid*, SceneAtTime>;

inline FieldRef fieldOf(const EsdfGrid& grid) { return &grid; }
inline FieldRef fieldOf(const Scene& scene, double t = 0.0) { return SceneAtTime{&scene, t}; }

double surfaceEpsilon(const EsdfGrid& grid);
double surfaceEpsilon(const FieldRef& field);

/// Sphere traces from origin along the unit direction. Returns the hit
/// distance, 0 when origin is already inside an obstacle, or nullopt (miss)
/// once the trace passes max_range. Grid traces also miss when leaving the
/// grid bounds.
std::optional<double> raycast(const FieldRef& field, const Vec3d& origin, const Vec3d& dir,
                              double max_range = kDefaultMaxRange);

struct Beam {
  Vec3d direction = Vec3d::UnitX();  // sensor frame
  double range = 0.0;
  bool valid = false;
};

struct SensorPose {
  Vec3d position = Vec3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct ScanPattern {
  int rows = 64;
  int cols = 512;
  double vertical_fov_deg = 90.0;  // symmetric about the horizon

  std::size_t beamCount() const { return static_cast<std::size_t>(rows) * cols; }
  /// Unit direction for lattice cell (row, col) in the sensor frame.
  Vec3d direction(int row, int col) const;
};

/// Beams are stored row-major: index = row * cols + col.
struct RangeScan {
  SensorPose pose;
  ScanPattern pattern;
  std::vector<Beam> beams;
  double time = 0.0;

  std::size_t validCount() const;
  Vec3d worldDirection(const Beam& b) const { return pose.orientation * b.direction; }
};

struct ScanOptions {
  double max_range = kDefaultMaxRange;
  /// Fraction of beams dropped at random (marked invalid).
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
};

/// Regular elevation x azimuth lattice traced against the field; misses are
/// marked invalid.
RangeScan synthesizeScan(const FieldRef& field, const SensorPose& pose, const ScanPattern& pattern,
                         const ScanOptions& options = {}, const Workers& workers = serialWorkers());

/// Scan of the scene with primitives displaced to time t.
RangeScan synthesizeScan(const Scene& scene, const SensorPose& pose, const ScanPattern& pattern,
                         double t, const ScanOptions& options = {},
                         const Workers& workers = serialWorkers());

}  // namespace rmp
