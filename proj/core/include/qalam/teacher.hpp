#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qalam/cot.hpp"
#include "qalam/retry.hpp"
#include "qalam/types.hpp"

namespace qalam::cot {

struct Decoding {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 4096;
};

nlohmann::json to_json(const Decoding& d);
Decoding decoding_from_json(const nlohmann::json& j);

struct TeacherRequest {
  std::string item_id;
  std::string prompt;
  Decoding decoding;
};

struct TeacherResponse {
  std::string item_id;
  std::string text;
  // Endpoint-reported finish reason ("stop", "length", ...), or "failed"
  // when every attempt hit a transport error.
  std::string finish_status;
  bool ok = false;
  std::size_t attempts = 0;
  std::string error;
};

nlohmann::json to_json(const TeacherRequest& r);
nlohmann::json to_json(const TeacherResponse& r);
TeacherResponse response_from_json(const nlohmann::json& j);

struct Completion {
  std::string text;
  std::string finish_status = "stop";
};

// Anything that turns a request into text. Implementations throw
// TransportError for retryable failures and AuthError for rejected credentials.
class TeacherEndpoint {
 public:
  virtual ~TeacherEndpoint() = default;
  virtual Completion complete(const TeacherRequest& request) = 0;
};

// Called once per finished request, in completion order, under a lock.
using ResponseSink = std::function<void(const TeacherResponse&)>;

// Runs every request with at most policy.max_in_flight outstanding. The
// result is in request order. Transport failures that outlive the retry
// budget become failed responses; an AuthError stops the batch and is
// rethrown once in-flight requests drain.
std::vector<TeacherResponse> run_batch(std::span<const TeacherRequest> requests, TeacherEndpoint& endpoint,
                                       const RetryPolicy& policy, const ResponseSink& sink = {},
                                       const RetryListener& on_retry = {});

std::vector<TeacherRequest> make_requests(std::span<const BenchmarkItem> items, const PromptTemplate& tmpl,
                                          const Decoding& decoding);

struct DistillSplit {
  std::vector<TraceRecord> valid;
  std::vector<TraceRecord> rejected;
};

// Validates each successful response against its item; failed requests land
// in `rejected` with the single violation "RequestFailed".
DistillSplit split_responses(std::span<const TeacherResponse> responses, std::span<const BenchmarkItem> items,
                             const TraceFormat& format = {});

}  // namespace qalam::cot
