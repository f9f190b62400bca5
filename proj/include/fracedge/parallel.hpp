#pragma once

#include <cstddef>
#include <functional>

namespace fracedge {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads (0 means hardware
/// concurrency). The first exception, by index, is rethrown after all workers
/// finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace fracedge
