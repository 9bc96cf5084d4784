#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include "completest/backend/types.hpp"

namespace completest::backend {

struct DispatchOptions {
  std::size_t concurrency = 4;
  /// Requests started per second across all workers; 0 disables the limit.
  double rate_limit = 0.0;
};

namespace detail {

class RateLimiter {
 public:
  explicit RateLimiter(double per_second)
      : interval_(per_second > 0.0 ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                         std::chrono::duration<double>(1.0 / per_second))
                                   : std::chrono::steady_clock::duration::zero()) {}

  void acquire() {
    if (interval_ == std::chrono::steady_clock::duration::zero()) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      slot = std::max(std::chrono::steady_clock::now(), next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_{};
  std::mutex mutex_;
};

}  // namespace detail

/// Runs every request through `backend` with at most `concurrency` in flight.
/// Result i always answers request i. A throwing backend yields HttpError(0).
[[nodiscard]] inline std::vector<CompletionOutcome> dispatch(Backend& backend,
                                                             const std::vector<CompletionRequest>& requests,
                                                             const DispatchOptions& options = {}) {
  std::vector<CompletionOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  detail::RateLimiter limiter(options.rate_limit);
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
      limiter.acquire();
      try {
        out[i] = backend.complete(requests[i]);
      } catch (const std::exception&) {
        out[i] = CompletionOutcome::failure(requests[i].case_ref, NoResultReason::HttpError);
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(requests.size(), 1));
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace completest::backend
