#pragma once

#include <cstddef>
#include <functional>

namespace srl {

// Worker count from SRL_THREADS, else the hardware concurrency.
unsigned thread_count();

// Calls body(index, worker) exactly once for every index in [0, n). Callers store results
// per index and reduce them in index order so output does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, unsigned)>& body);

}  // namespace srl
