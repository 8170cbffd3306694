#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dpd/errors.hpp"

namespace dpd {

inline constexpr const char* kWorkersEnvVar = "DPD_WORKERS";

// Resolves a worker count: an explicit positive request wins, then the
// DPD_WORKERS environment variable, then hardware concurrency (at least 1).
inline unsigned resolve_worker_count(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv(kWorkersEnvVar)) {
    try {
      std::size_t pos = 0;
      long value = std::stol(env, &pos);
      if (pos != std::string(env).size() || value <= 0) {
        throw ConfigError(std::string(kWorkersEnvVar) + ": expected a positive integer, got \"" +
                          env + "\"");
      }
      return static_cast<unsigned>(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(std::string(kWorkersEnvVar) + ": expected a positive integer, got \"" +
                        std::string(env) + "\"");
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs body(i) for every i in [0, n) across at most `workers` threads.
// Indices are handed out through a shared counter; the caller is responsible
// for writing results into index-addressed slots so that the merged output is
// independent of scheduling. The first exception thrown by any body is
// rethrown on the calling thread after all workers finish.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  workers = resolve_worker_count(workers);
  if (workers > n) workers = static_cast<unsigned>(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dpd
