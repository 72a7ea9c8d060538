#include "rmp/parallel.hpp"

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/parallel_for.h>
#include <oneapi/tbb/partitioner.h>
#include <oneapi/tbb/task_arena.h>

#include <algorithm>
#include <thread>

namespace rmp {

struct Workers::Arena {
  explicit Arena(int n) : arena(n) {}
  tbb::task_arena arena;
};

Workers::Workers(int count) {
  count_ = count > 0 ? count : hardwareThreads();
  if (count_ > 1) arena_ = std::make_unique<Arena>(count_);
}

Workers::~Workers() = default;
Workers::Workers(Workers&&) noexcept = default;
Workers& Workers::operator=(Workers&&) noexcept = default;

int Workers::hardwareThreads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

void Workers::parallelFor(std::size_t n, const std::function<void(std::size_t)>& body) const {
  if (!arena_) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  arena_->arena.execute([&] {
    tbb::parallel_for(
        tbb::blocked_range<std::size_t>(0, n, 1),
        [&](const tbb::blocked_range<std::size_t>& r) {
          for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
        },
        tbb::simple_partitioner());
  });
}

const Workers& serialWorkers() {
  static const Workers serial(1);
  return serial;
}

}  // namespace rmp
