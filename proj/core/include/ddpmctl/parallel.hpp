#pragma once

#include <cstddef>
#include <functional>

namespace ddpmctl {

/// Caps the number of worker threads used by parallel_for (0 restores the
/// hardware default).
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [begin, end). Work is split into contiguous chunks;
/// callers must only write to per-index state so results do not depend on the
/// number of threads.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace ddpmctl
