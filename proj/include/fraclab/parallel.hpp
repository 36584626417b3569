#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fraclab {

/// Worker cap used by every parallel loop. Defaults to FRACLAB_THREADS when
/// set, else the hardware concurrency. Never changes results.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs job(i, worker) for i in [0, n_jobs). Jobs are claimed dynamically, so
/// callers must key all randomness and output slots by the job index.
template <class Job>
void parallel_for(std::size_t n_jobs, Job&& job) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n_jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) job(i, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&](std::size_t worker) {
    try {
      for (std::size_t i = next++; i < n_jobs; i = next++) job(i, worker);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n_jobs;
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fraclab
