#include "rmp/geometry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace rmp {

Primitive Primitive::sphere(const Vec3d& center, double radius, BoolOp op) {
  Primitive p;
  p.kind = PrimitiveKind::kSphere;
  p.center = center;
  p.size = Vec3d::Constant(radius);
  p.op = op;
  return p;
}

Primitive Primitive::box(const Vec3d& center, const Vec3d& half_extents, BoolOp op) {
  Primitive p;
  p.kind = PrimitiveKind::kBox;
  p.center = center;
  p.size = half_extents;
  p.op = op;
  return p;
}

double Primitive::distance(const Vec3d& x, double t) const {
  const Vec3d local = x - (center + velocity * t);
  if (kind == PrimitiveKind::kSphere) return local.norm() - radius();
  const Vec3d q = local.cwiseAbs() - size;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

bool Primitive::valid() const {
  if (!center.allFinite() || !velocity.allFinite() || !size.allFinite()) return false;
  return kind == PrimitiveKind::kSphere ? radius() > 0.0 : (size.array() > 0.0).all();
}

void Scene::validate() const {
  if (!bounds.min().allFinite() || !bounds.max().allFinite() ||
      !(bounds.sizes().array() > 0.0).all()) {
    throw GeometryError("scene bounds are degenerate");
  }
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    if (!primitives[i].valid()) throw GeometryError(fmt::format("primitive {} is invalid", i));
  }
}

double sceneDistance(const Scene& scene, const Vec3d& x, double t) {
  double d = scene.emptyDistance();
  for (const Primitive& p : scene.primitives) {
    const double di = p.distance(x, t);
    d = p.op == BoolOp::kUnion ? std::min(d, di) : std::max(d, -di);
  }
  return d;
}

EsdfGrid::EsdfGrid(const Vec3d& origin, double resolution, const Eigen::Vector3i& dims,
                   std::vector<double> values)
    : origin_(origin), resolution_(resolution), dims_(dims), values_(std::move(values)) {
  if (!(resolution > 0.0) || (dims.array() <= 0).any()) {
    throw GeometryError("esdf grid needs positive resolution and dims");
  }
  if (values_.size() != static_cast<std::size_t>(dims.prod())) {
    throw GeometryError(fmt::format("esdf grid expects {} values, got {}", dims.prod(),
                                    values_.size()));
  }
}

Box3d EsdfGrid::bounds() const {
  return Box3d(origin_, origin_ + dims_.cast<double>() * resolution_);
}

Vec3d EsdfGrid::voxelCenter(int i, int j, int k) const {
  return origin_ + (Vec3d(i, j, k).array() + 0.5).matrix() * resolution_;
}

bool EsdfGrid::contains(const Vec3d& x) const { return bounds().contains(x); }

double EsdfGrid::interpolate(const Vec3d& x) const {
  // Continuous index relative to voxel centers.
  const Vec3d u = (x - origin_) / resolution_ - Vec3d::Constant(0.5);
  int i0[3];
  double w[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = dims_[a] - 1;
    const double ua = std::clamp(u[a], 0.0, hi);
    const double fl = std::min(std::floor(ua), std::max(hi - 1.0, 0.0));
    i0[a] = static_cast<int>(fl);
    w[a] = dims_[a] > 1 ? ua - fl : 0.0;
  }
  const int i1x = std::min(i0[0] + 1, dims_.x() - 1);
  const int i1y = std::min(i0[1] + 1, dims_.y() - 1);
  const int i1z = std::min(i0[2] + 1, dims_.z() - 1);
  const double c00 = at(i0[0], i0[1], i0[2]) * (1 - w[0]) + at(i1x, i0[1], i0[2]) * w[0];
  const double c10 = at(i0[0], i1y, i0[2]) * (1 - w[0]) + at(i1x, i1y, i0[2]) * w[0];
  const double c01 = at(i0[0], i0[1], i1z) * (1 - w[0]) + at(i1x, i0[1], i1z) * w[0];
  const double c11 = at(i0[0], i1y, i1z) * (1 - w[0]) + at(i1x, i1y, i1z) * w[0];
  const double c0 = c00 * (1 - w[1]) + c10 * w[1];
  const double c1 = c01 * (1 - w[1]) + c11 * w[1];
  return c0 * (1 - w[2]) + c1 * w[2];
}

EsdfGrid bakeEsdf(const Scene& scene, double resolution, std::size_t max_voxels,
                  const Workers& workers) {
  if (!(resolution > 0.0)) throw GeometryError("bake resolution must be positive");
  const Vec3d extent = scene.bounds.sizes();
  Eigen::Vector3i dims;
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double n = std::max(1.0, std::ceil(extent[a] / resolution - 1e-9));
    total *= n;
    dims[a] = static_cast<int>(std::min(n, 1e9));
  }
  if (total > static_cast<double>(max_voxels)) {
    throw GeometryError(fmt::format("resolution {} gives {} voxels, above the limit of {}",
                                    resolution, total, max_voxels));
  }
  std::vector<double> values(static_cast<std::size_t>(dims.prod()));
  const Vec3d origin = scene.bounds.min();
  auto voxel = [&](int i, int j, int k) -> Vec3d {
    return origin + (Vec3d(i, j, k).array() + 0.5).matrix() * resolution;
  };
  workers.parallelFor(static_cast<std::size_t>(dims.z()), [&](std::size_t kz) {
    const int k = static_cast<int>(kz);
    for (int j = 0; j < dims.y(); ++j) {
      for (int i = 0; i < dims.x(); ++i) {
        const std::size_t idx =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(dims.x()) * (j + static_cast<std::size_t>(dims.y()) * k);
        values[idx] = sceneDistance(scene, voxel(i, j, k), 0.0);
      }
    }
  });
  return EsdfGrid(origin, resolution, dims, std::move(values));
}

EsdfSample esdfLookup(const EsdfGrid& grid, const Vec3d& x) {
  EsdfSample s;
  s.extrapolated = !grid.contains(x);
  s.distance = grid.interpolate(x);
  const double h = grid.resolution();
  Vec3d g;
  for (int a = 0; a < 3; ++a) {
    const Vec3d e = Vec3d::Unit(a) * h;
    g[a] = (grid.interpolate(x + e) - grid.interpolate(x - e)) / (2.0 * h);
  }
  const double n = g.norm();
  if (n < 1e-9) {
    s.degenerate = true;
    s.gradient.setZero();
  } else {
    s.gradient = g / n;
  }
  return s;
}

double occupiedFraction(const EsdfGrid& grid) {
  if (grid.size() == 0) return 0.0;
  const auto occupied = std::count_if(grid.values().begin(), grid.values().end(),
                                      [](double v) { return v <= 0.0; });
  return static_cast<double>(occupied) / static_cast<double>(grid.size());
}

namespace {

// 53-bit uniform double in [0, 1) from a raw 64-bit draw; avoids the
// implementation-defined std::uniform_real_distribution so worlds are
// identical across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

Vec3d uniformIn(std::mt19937_64& rng, const Box3d& box) {
  Vec3d p;
  for (int a = 0; a < 3; ++a) p[a] = uniform(rng, box.min()[a], box.max()[a]);
  return p;
}

}  // namespace

World generateWorld(std::uint64_t seed, const WorldGenParams& params) {
  if (params.n_obstacles < 0) throw GeometryError("obstacle count must be non-negative");
  if (!(params.min_size > 0.0) || params.max_size < params.min_size) {
    throw GeometryError("obstacle size range is invalid");
  }
  std::mt19937_64 rng(seed);
  World world;
  world.scene.bounds = params.bounds;
  world.scene.seed = seed;
  world.scene.validate();

  for (int n = 0; n < params.n_obstacles; ++n) {
    const bool is_sphere = uniform01(rng) < params.sphere_probability;
    const BoolOp op = uniform01(rng) < params.subtract_probability ? BoolOp::kSubtract
                                                                   : BoolOp::kUnion;
    const Vec3d center = uniformIn(rng, params.bounds);
    if (is_sphere) {
      world.scene.primitives.push_back(
          Primitive::sphere(center, uniform(rng, params.min_size, params.max_size), op));
    } else {
      Vec3d half;
      for (int a = 0; a < 3; ++a) half[a] = uniform(rng, params.min_size, params.max_size);
      world.scene.primitives.push_back(Primitive::box(center, half, op));
    }
  }

  const Box3d& b = params.bounds;
  const double mid_x = b.center().x();
  Box3d lower = b, upper = b;
  lower.max().x() = mid_x;
  upper.min().x() = mid_x;
  const double min_sep = params.min_separation_fraction * b.diagonal().norm();
  auto free = [&](const Vec3d& p) { return sceneDistance(world.scene, p) > params.robot_radius; };

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const Vec3d start = uniformIn(rng, lower);
    const Vec3d goal = uniformIn(rng, upper);
    if ((goal - start).norm() < min_sep || !free(start) || !free(goal)) continue;
    world.start = start;
    world.goal = goal;
    world.scene.start = start;
    world.scene.goal = goal;
    return world;
  }
  throw GeometryError(fmt::format("no free start/goal pair after {} attempts (seed {})",
                                  params.max_attempts, seed));
}

}  // namespace rmp
