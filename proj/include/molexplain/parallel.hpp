#pragma once
// Static-partition parallel loop. Each index is processed exactly once and
// results go to caller-owned slots, so output never depends on the worker
// count.
#include <cstddef>
#include <functional>

namespace molexplain {

// 0 means one worker per hardware thread.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Calls fn(i) for i in [0, n). If any call throws, the exception of the
// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace molexplain
