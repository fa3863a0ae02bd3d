#pragma once

#include <cstddef>
#include <functional>

namespace multimag {

/// Worker count used by parallel_for; 0 selects hardware concurrency.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is
/// processed exactly once; callers write to disjoint outputs only, so
/// results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace multimag
