#pragma once

// File formats: scene documents (JSON, versioned), ESDF binary blobs, range
// scans, parameter sets and experiment configs.

#include "rmp/geometry.hpp"
#include "rmp/policies.hpp"
#include "rmp/raycast.hpp"
#include "rmp/simulator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace rmp {

/// Malformed input. what() carries the path and, for syntax errors, the line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& message);
  const std::string& path() const { return path_; }
  int line() const { return line_; }  // 0 when unknown

 private:
  std::string path_;
  int line_ = 0;
};

inline constexpr int kSceneVersion = 1;
inline constexpr int kScanVersion = 1;
inline constexpr int kConfigVersion = 1;
inline constexpr std::uint32_t kEsdfVersion = 1;

nlohmann::json sceneToJson(const Scene& scene);
Scene sceneFromJson(const nlohmann::json& j);
std::string serializeScene(const Scene& scene);
void saveScene(const std::filesystem::path& path, const Scene& scene);
Scene loadScene(const std::filesystem::path& path);

/// Header: "ESDF", u32 version, 3 x f64 origin, f64 resolution, 3 x u32 dims,
/// then f32 values x-fastest. All little-endian.
void saveEsdf(const std::filesystem::path& path, const EsdfGrid& grid);
EsdfGrid loadEsdf(const std::filesystem::path& path);

nlohmann::json scanToJson(const RangeScan& scan);
RangeScan scanFromJson(const nlohmann::json& j);
void saveScan(const std::filesystem::path& path, const RangeScan& scan);
RangeScan loadScan(const std::filesystem::path& path);

/// Field names follow the parameter table: alpha_g, beta_g, c, eta_rep,
/// upsilon_rep, eta_damp, upsilon_damp, r, plus epsilon and lidar_min_range.
nlohmann::json paramsToJson(const PolicyParams& p);
/// Applies the fields present in j on top of base.
PolicyParams paramsFromJson(const nlohmann::json& j, PolicyParams base);
PolicyParams loadParams(const std::filesystem::path& path);

struct ExperimentConfig {
  std::string preset = "static_map";
  PolicyParams params = rmp::preset("static_map");
  std::vector<std::uint64_t> seeds;
  std::vector<int> tiers;
  std::vector<PlannerSpec> planners;
  RolloutConfig rollout;
  WorldGenParams world;
  int workers = 0;
  bool record_timing = true;
  std::string output_dir = ".";

  BatchConfig batch() const;
};

nlohmann::json configToJson(const ExperimentConfig& cfg);
ExperimentConfig configFromJson(const nlohmann::json& j);
ExperimentConfig loadConfig(const std::filesystem::path& path);
/// Field-by-field equality.
bool sameConfig(const ExperimentConfig& a, const ExperimentConfig& b);

/// One velocity per line: "vx,vy,vz". A non-numeric first line is a header.
std::vector<Vec3d> loadVelocities(const std::filesystem::path& path);

/// Reads a whole file; throws ParseError when it cannot be opened.
std::string readFile(const std::filesystem::path& path);
/// Parses JSON text, converting syntax errors to ParseError with a line.
nlohmann::json parseJson(const std::string& text, const std::string& path);

}  // namespace rmp
