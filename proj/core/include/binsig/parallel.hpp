#pragma once

#include <cstddef>
#include <functional>

namespace binsig {

// Worker threads used by parallel_for: BINSIG_WORKERS if set, else the
// hardware concurrency (minimum 1).
int worker_count();

// Runs fn(begin, end) over a partition of [0, n). Each index is processed by
// exactly one worker, so results are bit-stable across worker counts as long
// as fn writes only state owned by its indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace binsig
