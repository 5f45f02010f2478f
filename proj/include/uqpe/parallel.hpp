#pragma once

#include <cstddef>
#include <functional>

namespace uqpe {

// Global worker-thread cap. 0 selects std::thread::hardware_concurrency().
void set_max_threads(int n);
int max_threads();

// Runs body(i) for i in [0, count). Tasks must write only to index-owned
// slots; reductions happen serially afterwards, so results do not depend on
// the thread count. Nested calls run serially on the calling worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace uqpe
