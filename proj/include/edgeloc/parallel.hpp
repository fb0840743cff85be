#pragma once

#include <cstddef>
#include <functional>

namespace edgeloc {

// Process-wide worker cap (the CLI's --threads). 1 = fully sequential.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into static contiguous chunks;
// each index writes only its own outputs, so results are bit-identical for
// every thread count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace edgeloc
