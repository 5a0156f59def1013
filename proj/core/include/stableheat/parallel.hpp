#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stableheat {

/// Runs job(0..n_jobs-1) on up to `threads` workers (0 = hardware count).
/// Work items are claimed from an atomic counter; callers that need
/// scheduling-independent results must write to per-job slots and reduce in
/// job order afterwards.
inline void parallel_for(int n_jobs, int threads, const std::function<void(int)>& job) {
  if (n_jobs <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n_jobs) workers = n_jobs;

  if (workers == 1) {
    for (int i = 0; i < n_jobs; ++i) job(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Compensated (Kahan) accumulator. Merging another accumulator adds its sum
/// and its compensation as two ordinary terms, so a fixed merge order gives
/// results independent of where partial sums were computed.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }

  void merge(const KahanSum& o) {
    add(o.sum);
    add(-o.comp);
  }

  double value() const { return sum; }
};

}  // namespace stableheat
