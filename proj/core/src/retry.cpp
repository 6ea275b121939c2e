#include "qalam/retry.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "qalam/error.hpp"

namespace qalam {

std::chrono::milliseconds RetryPolicy::backoff_for(std::size_t retry) const {
  const double scaled = static_cast<double>(initial_backoff.count()) * std::pow(backoff_multiplier, double(retry));
  const double capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

RetryOutcome retry_call(const RetryPolicy& policy, const std::string& item_id, const std::function<void()>& attempt,
                        const RetryListener& on_retry) {
  RetryOutcome out;
  for (;;) {
    ++out.attempts;
    try {
      attempt();
      out.ok = true;
      return out;
    } catch (const TransportError& e) {
      out.last_error = e.what();
    }
    const std::size_t retries_used = out.attempts - 1;
    if (retries_used >= policy.max_retries) return out;
    const auto delay = policy.backoff_for(retries_used);
    if (on_retry) on_retry({item_id, out.attempts, out.last_error, delay});
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
}

}  // namespace qalam
