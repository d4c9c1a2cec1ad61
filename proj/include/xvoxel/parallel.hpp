#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "xvoxel/kern/kernels.hpp"

namespace xv {

// Global worker count for all internal parallelism (CLI --threads).
int thread_count();
void set_thread_count(int n);

// Runs f(begin, end) over disjoint subranges of [begin, end). Results must be
// written to disjoint memory; the partition depends only on `grain`, never on
// the worker count, so any data written per index is thread-count invariant.
void parallel_for(std::int64_t begin, std::int64_t end, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& f);

// Deterministic reductions: fixed-size chunks are reduced independently and
// the partials are summed in chunk order, so the result is bitwise identical
// for any thread count.
double det_dot(const double* x, const double* y, std::size_t n);
double det_sum(const double* x, std::size_t n);

// Deterministic sum over an indexed range: partial(i0,i1) must return the
// serial sum over [i0,i1). Chunk size fixed by `grain`.
double det_range_sum(std::int64_t begin, std::int64_t end, std::int64_t grain,
                     const std::function<double(std::int64_t, std::int64_t)>& partial);

}  // namespace xv
