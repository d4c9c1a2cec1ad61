#include "xvoxel/parallel.hpp"

#include <algorithm>

namespace xv {

namespace {
std::atomic<int> g_threads{1};
constexpr std::int64_t kDotChunk = 4096;
}  // namespace

int thread_count() { return g_threads.load(std::memory_order_relaxed); }

void set_thread_count(int n) { g_threads.store(std::max(1, n), std::memory_order_relaxed); }

void parallel_for(std::int64_t begin, std::int64_t end, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& f) {
  if (end <= begin) return;
  grain = std::max<std::int64_t>(1, grain);
  const std::int64_t tasks = (end - begin + grain - 1) / grain;
  const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), tasks));
  if (workers <= 1) {
    f(begin, end);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto body = [&]() {
    for (;;) {
      const std::int64_t t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= tasks) return;
      const std::int64_t lo = begin + t * grain;
      const std::int64_t hi = std::min(end, lo + grain);
      f(lo, hi);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 0; i < workers - 1; ++i) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

double det_range_sum(std::int64_t begin, std::int64_t end, std::int64_t grain,
                     const std::function<double(std::int64_t, std::int64_t)>& partial) {
  if (end <= begin) return 0.0;
  grain = std::max<std::int64_t>(1, grain);
  const std::int64_t tasks = (end - begin + grain - 1) / grain;
  std::vector<double> partials(static_cast<std::size_t>(tasks), 0.0);
  parallel_for(0, tasks, 1, [&](std::int64_t t0, std::int64_t t1) {
    for (std::int64_t t = t0; t < t1; ++t) {
      const std::int64_t lo = begin + t * grain;
      const std::int64_t hi = std::min(end, lo + grain);
      partials[static_cast<std::size_t>(t)] = partial(lo, hi);
    }
  });
  double acc = 0.0;
  for (double p : partials) acc += p;
  return acc;
}

double det_dot(const double* x, const double* y, std::size_t n) {
  const auto& k = kern::active();
  return det_range_sum(0, static_cast<std::int64_t>(n), kDotChunk,
                       [&](std::int64_t lo, std::int64_t hi) {
                         return k.dot(x + lo, y + lo, static_cast<std::size_t>(hi - lo));
                       });
}

double det_sum(const double* x, std::size_t n) {
  const auto& k = kern::active();
  return det_range_sum(0, static_cast<std::int64_t>(n), kDotChunk,
                       [&](std::int64_t lo, std::int64_t hi) {
                         return k.sum(x + lo, static_cast<std::size_t>(hi - lo));
                       });
}

}  // namespace xv
