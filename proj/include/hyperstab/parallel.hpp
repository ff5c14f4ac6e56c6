#pragma once

#include <cstddef>
#include <functional>

namespace hyperstab {

// Worker cap from HYPERSTAB_THREADS, else hardware concurrency (at least 1).
unsigned thread_limit();

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception (by index) is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace hyperstab
