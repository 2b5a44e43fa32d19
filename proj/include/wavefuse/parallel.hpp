#pragma once

#include <cstddef>
#include <functional>

namespace wavefuse {

// Process-wide worker count used by the data-parallel loops. Defaults to 1.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs; any
// reduction over the results is done by the caller in index order, so output
// is identical for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace wavefuse
