#pragma once

#include <cstdint>
#include <functional>

namespace fbmstm {

// Worker count: FBM_STM_THREADS caps it, 0 or unset means all hardware
// threads. Always at least 1.
int thread_budget() noexcept;

// Applies fn(block_index, begin, end) over [0, n) split into fixed-size
// blocks. Blocks are handed to workers dynamically, but the block boundaries
// depend only on block_size, so callers that store one partial result per
// block and fold them in index order get bit-exact results for any worker
// count. Exceptions from fn abort the sweep and are rethrown.
void for_each_block(
    std::int64_t n, std::int64_t block_size,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn,
    int n_threads = 0);

}  // namespace fbmstm
