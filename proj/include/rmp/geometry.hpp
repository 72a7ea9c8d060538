#pragma once

// World representation: analytic primitive scenes composed with boolean
// union/subtract, baked voxel ESDF grids and distance/gradient queries.

#include "rmp/core.hpp"
#include "rmp/parallel.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmp {

using Box3d = Eigen::AlignedBox<double, 3>;

enum class PrimitiveKind { kSphere, kBox };
enum class BoolOp { kUnion, kSubtract };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kSphere;
  Vec3d center = Vec3d::Zero();
  /// Sphere: radius in x(); box: half-extents.
  Vec3d size = Vec3d::Ones();
  BoolOp op = BoolOp::kUnion;
  Vec3d velocity = Vec3d::Zero();

  static Primitive sphere(const Vec3d& center, double radius, BoolOp op = BoolOp::kUnion);
  static Primitive box(const Vec3d& center, const Vec3d& half_extents,
                       BoolOp op = BoolOp::kUnion);

  double radius() const { return size.x(); }
  /// Signed distance at time t; the primitive is translated by velocity * t.
  double distance(const Vec3d& x, double t = 0.0) const;
  bool valid() const;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scene {
  Box3d bounds{Vec3d::Zero(), Vec3d::Constant(10.0)};
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;
  std::optional<Vec3d> start;
  std::optional<Vec3d> goal;

  /// Distance reported when nothing is in range: the bounds diagonal.
  double emptyDistance() const { return bounds.diagonal().norm(); }
  void validate() const;
};

/// Signed distance to the scene composition at time t. Primitives are folded
/// in list order: union takes min(d, d_i), subtract takes max(d, -d_i).
double sceneDistance(const Scene& scene, const Vec3d& x, double t = 0.0);

/// Voxel ESDF; voxel (i,j,k) has its center at origin + (ijk + 0.5) * resolution.
/// Values are stored x-fastest.
class EsdfGrid {
 public:
  EsdfGrid() = default;
  EsdfGrid(const Vec3d& origin, double resolution, const Eigen::Vector3i& dims,
           std::vector<double> values);

  const Vec3d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  Box3d bounds() const;
  Vec3d voxelCenter(int i, int j, int k) const;
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.y()) * k);
  }
  double at(int i, int j, int k) const { return values_[index(i, j, k)]; }

  bool contains(const Vec3d& x) const;
  /// Trilinear interpolation of voxel values; positions outside the voxel
  /// center lattice are clamped onto it.
  double interpolate(const Vec3d& x) const;

 private:
  Vec3d origin_ = Vec3d::Zero();
  double resolution_ = 1.0;
  Eigen::Vector3i dims_ = Eigen::Vector3i::Zero();
  std::vector<double> values_;
};

struct EsdfSample {
  double distance = 0.0;
  Vec3d gradient = Vec3d::Zero();
  bool extrapolated = false;
  bool degenerate = false;
};

inline constexpr double kDefaultResolution = 0.2;
inline constexpr std::size_t kDefaultMaxVoxels = std::size_t{512} * 512 * 512;

EsdfGrid bakeEsdf(const Scene& scene, double resolution = kDefaultResolution,
                  std::size_t max_voxels = kDefaultMaxVoxels,
                  const Workers& workers = serialWorkers());

/// Distance by trilinear interpolation; gradient by central differences of the
/// interpolated field with step = resolution, normalized.
EsdfSample esdfLookup(const EsdfGrid& grid, const Vec3d& x);

/// Fraction of voxels whose value is <= 0.
double occupiedFraction(const EsdfGrid& grid);

struct WorldGenParams {
  Box3d bounds{Vec3d::Zero(), Vec3d::Constant(10.0)};
  int n_obstacles = 0;
  double min_size = 0.3;
  double max_size = 1.5;
  double sphere_probability = 0.5;
  double subtract_probability = 0.2;
  double robot_radius = 0.3;
  /// Start/goal must be at least this fraction of the bounds diagonal apart.
  double min_separation_fraction = 0.6;
  int max_attempts = 10000;
};

struct World {
  Scene scene;
  Vec3d start = Vec3d::Zero();
  Vec3d goal = Vec3d::Zero();
};

/// Deterministic random cluttered world. Start and goal are in free space on
/// opposite x-halves of the bounds. Throws GeometryError when no free
/// start/goal pair is found within max_attempts.
World generateWorld(std::uint64_t seed, const WorldGenParams& params);

}  // namespace rmp
