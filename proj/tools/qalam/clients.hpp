#pragma once

#include <memory>

#include "context.hpp"
#include "qalam/error.hpp"
#include "qalam/eval.hpp"
#include "qalam/http_client.hpp"
#include "qalam/retry.hpp"
#include "qalam/teacher.hpp"

namespace qalam::cli {

// Serves recorded completions by item id; lets batch and eval runs work offline.
class ReplayTeacher : public cot::TeacherEndpoint {
 public:
  explicit ReplayTeacher(eval::ReplayClient client) : client_(std::move(client)) {}
  cot::Completion complete(const cot::TeacherRequest& r) override { return {client_.complete(r.item_id, r.prompt), "stop"}; }

 private:
  eval::ReplayClient client_;
};

// "retry": {"max_in_flight", "max_retries", "initial_backoff_ms", "backoff_multiplier", "max_backoff_ms"}.
// max_in_flight defaults to --jobs.
inline RetryPolicy policy_from_json(const json& j, unsigned jobs) {
  RetryPolicy p;
  p.max_in_flight = j.value("max_in_flight", static_cast<std::size_t>(jobs));
  p.max_retries = j.value("max_retries", p.max_retries);
  p.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", p.initial_backoff.count()));
  p.backoff_multiplier = j.value("backoff_multiplier", p.backoff_multiplier);
  p.max_backoff = std::chrono::milliseconds(j.value("max_backoff_ms", p.max_backoff.count()));
  if (p.max_in_flight == 0) throw Error("invalid_config", "max_in_flight must be at least 1");
  return p;
}

inline json to_json(const RetryPolicy& p) {
  return {{"max_in_flight", p.max_in_flight},
          {"max_retries", p.max_retries},
          {"initial_backoff_ms", p.initial_backoff.count()},
          {"backoff_multiplier", p.backoff_multiplier},
          {"max_backoff_ms", p.max_backoff.count()}};
}

}  // namespace qalam::cli
