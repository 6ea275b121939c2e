#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <string>

namespace qalam {

struct RetryPolicy {
  std::size_t max_in_flight = 4;
  // Additional attempts after the first failure.
  std::size_t max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30'000};
  // Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds backoff_for(std::size_t retry) const;
};

struct RetryEvent {
  std::string item_id;
  std::size_t attempt = 0;  // 1-based attempt that failed
  std::string error;
  std::chrono::milliseconds delay{0};
};

using RetryListener = std::function<void(const RetryEvent&)>;

struct RetryOutcome {
  std::size_t attempts = 0;
  std::string last_error;
  bool ok = false;
};

// Calls `attempt` until it returns without throwing TransportError or the
// retry budget is spent. AuthError and any other exception propagate
// immediately. Returns the attempt count and the last transport error.
RetryOutcome retry_call(const RetryPolicy& policy, const std::string& item_id, const std::function<void()>& attempt,
                        const RetryListener& on_retry = {});

}  // namespace qalam
