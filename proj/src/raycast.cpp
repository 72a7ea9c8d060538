#include "rmp/raycast.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace rmp {

double halton(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0;
  const double inv = 1.0 / base;
  while (index > 0) {
    f *= inv;
    result += f * static_cast<double>(index % base);
    index /= base;
  }
  return result;
}

RayBundle sampleDirections(std::size_t n) {
  RayBundle bundle;
  bundle.directions.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double polar = std::acos(1.0 - 2.0 * halton(i, 2));
    const double azimuth = 2.0 * std::numbers::pi * halton(i, 3);
    bundle.directions.emplace_back(std::sin(polar) * std::cos(azimuth),
                                   std::sin(polar) * std::sin(azimuth), std::cos(polar));
  }
  return bundle;
}

double surfaceEpsilon(const EsdfGrid& grid) { return 0.5 * grid.resolution(); }

double surfaceEpsilon(const FieldRef& field) {
  if (const auto* grid = std::get_if<const EsdfGrid*>(&field)) return surfaceEpsilon(**grid);
  return std::get<SceneAtTime>(field).epsilon;
}

namespace {

constexpr int kRefineSteps = 256;

template <typename DistanceFn, typename InsideFn>
std::optional<double> sphereTrace(const Vec3d& origin, const Vec3d& dir, double max_range,
                                  double eps, const DistanceFn& distance, const InsideFn& inside) {
  // Inside eps an oblique ray can still be eps / cos(angle) short of the
  // surface. Keep stepping while the distance shrinks; a grazing ray that
  // starts moving away again stops at its closest approach.
  auto refine = [&](double t, double d) {
    for (int k = 0; k < kRefineSteps && d > eps * 1e-3; ++k) {
      const Vec3d p = origin + (t + d) * dir;
      if (!inside(p)) break;
      const double next = distance(p);
      if (next >= d) break;
      t += d;
      d = next;
    }
    return t;
  };
  double t = 0.0;
  for (int step = 0; step < kMaxTraceSteps; ++step) {
    const Vec3d p = origin + t * dir;
    if (!inside(p)) return std::nullopt;
    const double d = distance(p);
    if (d < eps) return refine(t, d);
    t += d;
    if (t > max_range) return std::nullopt;
  }
  // Step budget exhausted while grazing a surface; report the conservative hit.
  return t;
}

}  // namespace

std::optional<double> raycast(const FieldRef& field, const Vec3d& origin, const Vec3d& dir,
                              double max_range) {
  const double eps = surfaceEpsilon(field);
  if (const auto* grid = std::get_if<const EsdfGrid*>(&field)) {
    const EsdfGrid& g = **grid;
    const Box3d box = g.bounds();
    return sphereTrace(
        origin, dir, max_range, eps, [&](const Vec3d& p) { return g.interpolate(p); },
        [&](const Vec3d& p) { return box.contains(p); });
  }
  const SceneAtTime& s = std::get<SceneAtTime>(field);
  return sphereTrace(
      origin, dir, max_range, eps, [&](const Vec3d& p) { return sceneDistance(*s.scene, p, s.time); },
      [](const Vec3d&) { return true; });
}

Vec3d ScanPattern::direction(int row, int col) const {
  const double half = 0.5 * vertical_fov_deg * std::numbers::pi / 180.0;
  const double elevation = rows > 1 ? -half + 2.0 * half * row / (rows - 1) : 0.0;
  const double azimuth = 2.0 * std::numbers::pi * col / cols;
  return Vec3d(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
               std::sin(elevation));
}

std::size_t RangeScan::validCount() const {
  return static_cast<std::size_t>(
      std::count_if(beams.begin(), beams.end(), [](const Beam& b) { return b.valid; }));
}

RangeScan synthesizeScan(const FieldRef& field, const SensorPose& pose, const ScanPattern& pattern,
                         const ScanOptions& options, const Workers& workers) {
  RangeScan scan;
  scan.pose = pose;
  scan.pattern = pattern;
  if (const auto* s = std::get_if<SceneAtTime>(&field)) scan.time = s->time;
  scan.beams.resize(pattern.beamCount());
  const std::size_t rows = static_cast<std::size_t>(pattern.rows);
  workers.parallelFor(rows, [&](std::size_t row) {
    for (int col = 0; col < pattern.cols; ++col) {
      Beam& beam = scan.beams[row * pattern.cols + col];
      beam.direction = pattern.direction(static_cast<int>(row), col);
      const auto hit = raycast(field, pose.position, pose.orientation * beam.direction,
                               options.max_range);
      beam.valid = hit.has_value() && *hit > 0.0;
      beam.range = hit.value_or(0.0);
    }
  });
  if (options.dropout > 0.0) {
    std::mt19937_64 rng(options.dropout_seed);
    for (Beam& beam : scan.beams) {
      if (static_cast<double>(rng() >> 11) * 0x1.0p-53 < options.dropout) beam.valid = false;
    }
  }
  return scan;
}

RangeScan synthesizeScan(const Scene& scene, const SensorPose& pose, const ScanPattern& pattern,
                         double t, const ScanOptions& options, const Workers& workers) {
  return synthesizeScan(fieldOf(scene, t), pose, pattern, options, workers);
}

}  // namespace rmp
