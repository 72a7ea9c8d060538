#pragma once

// Data-parallel evaluation of independent per-ray policies followed by a
// fixed-shape tree reduction. Rays are grouped into chunks of kRayChunk;
// each chunk is reduced pairwise into its own slot, then the slots are
// tree-reduced. The reduction tree depends only on the ray count, never on
// the worker count, so results are bitwise identical for any --workers.

#include "rmp/core.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace rmp {

inline constexpr std::size_t kRayChunk = 256;

/// Worker pool handle. count 0 means "all hardware threads".
class Workers {
 public:
  explicit Workers(int count = 0);
  ~Workers();
  Workers(Workers&&) noexcept;
  Workers& operator=(Workers&&) noexcept;

  int count() const { return count_; }

  /// Runs body(i) for i in [0, n) on the pool. Bodies must write to disjoint
  /// state only.
  void parallelFor(std::size_t n, const std::function<void(std::size_t)>& body) const;

  static int hardwareThreads();

 private:
  struct Arena;
  int count_ = 1;
  std::unique_ptr<Arena> arena_;
};

/// Sequential default used when callers do not pass a pool.
const Workers& serialWorkers();

/// Evaluates per_ray(i) -> std::optional<PolicySumd> for i in [0, n) and
/// returns the tree-reduced sum. Empty optionals contribute nothing.
template <typename PerRay>
PolicySumd reduceRays(std::size_t n, const PerRay& per_ray, const Workers& workers) {
  const std::size_t n_chunks = (n + kRayChunk - 1) / kRayChunk;
  auto chunk_sum = [&](std::size_t chunk) {
    PairwiseAccumulator<double> acc;
    const std::size_t end = std::min(n, (chunk + 1) * kRayChunk);
    for (std::size_t i = chunk * kRayChunk; i < end; ++i) {
      if (std::optional<PolicySumd> s = per_ray(i)) acc.push(*s);
    }
    return acc.finish();
  };
  if (n_chunks <= 1) return n == 0 ? PolicySumd{} : chunk_sum(0);

  std::vector<PolicySumd> slots(n_chunks);
  if (workers.count() <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) slots[c] = chunk_sum(c);
  } else {
    workers.parallelFor(n_chunks, [&](std::size_t c) { slots[c] = chunk_sum(c); });
  }
  return treeReduce<double>(std::span<const PolicySumd>(slots));
}

}  // namespace rmp
