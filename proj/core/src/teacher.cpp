#include "qalam/teacher.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "qalam/error.hpp"

namespace qalam::cot {

using nlohmann::json;

json to_json(const Decoding& d) {
  return {{"model", d.model}, {"temperature", d.temperature}, {"max_tokens", d.max_tokens}};
}

Decoding decoding_from_json(const json& j) {
  Decoding d;
  d.model = j.value("model", d.model);
  d.temperature = j.value("temperature", d.temperature);
  d.max_tokens = j.value("max_tokens", d.max_tokens);
  if (d.max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
  return d;
}

json to_json(const TeacherRequest& r) {
  return {{"item_id", r.item_id}, {"prompt", r.prompt}, {"decoding", to_json(r.decoding)}};
}

json to_json(const TeacherResponse& r) {
  return {{"item_id", r.item_id}, {"text", r.text},         {"finish_status", r.finish_status},
          {"ok", r.ok},           {"attempts", r.attempts}, {"error", r.error}};
}

TeacherResponse response_from_json(const json& j) {
  TeacherResponse r;
  r.item_id = j.at("item_id").get<std::string>();
  r.text = j.value("text", "");
  r.finish_status = j.value("finish_status", "stop");
  r.ok = j.value("ok", true);
  r.attempts = j.value("attempts", std::size_t{1});
  r.error = j.value("error", "");
  return r;
}

std::vector<TeacherResponse> run_batch(std::span<const TeacherRequest> requests, TeacherEndpoint& endpoint,
                                       const RetryPolicy& policy, const ResponseSink& sink,
                                       const RetryListener& on_retry) {
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& r : requests) {
      if (!seen.insert(r.item_id).second) throw InvalidArgument("duplicate request item_id '" + r.item_id + "'");
    }
  }
  std::vector<TeacherResponse> out(requests.size());
  if (requests.empty()) return out;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::exception_ptr fatal;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      const TeacherRequest& req = requests[i];
      TeacherResponse resp;
      resp.item_id = req.item_id;
      try {
        const RetryOutcome outcome = retry_call(
            policy, req.item_id,
            [&] {
              Completion c = endpoint.complete(req);
              resp.text = std::move(c.text);
              resp.finish_status = std::move(c.finish_status);
            },
            [&](const RetryEvent& e) {
              if (on_retry) {
                std::lock_guard lock(mu);
                on_retry(e);
              }
            });
        resp.ok = outcome.ok;
        resp.attempts = outcome.attempts;
        if (!outcome.ok) {
          resp.finish_status = "failed";
          resp.error = outcome.last_error;
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
      std::lock_guard lock(mu);
      if (sink) sink(resp);
      out[i] = std::move(resp);
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(policy.max_in_flight, requests.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);
  return out;
}

std::vector<TeacherRequest> make_requests(std::span<const BenchmarkItem> items, const PromptTemplate& tmpl,
                                          const Decoding& decoding) {
  std::vector<TeacherRequest> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({item.task_id, render_teacher_prompt(item, tmpl), decoding});
  return out;
}

DistillSplit split_responses(std::span<const TeacherResponse> responses, std::span<const BenchmarkItem> items,
                             const TraceFormat& format) {
  std::unordered_map<std::string_view, const BenchmarkItem*> by_id;
  for (const auto& item : items) by_id.emplace(item.task_id, &item);
  DistillSplit split;
  for (const auto& r : responses) {
    const auto it = by_id.find(r.item_id);
    if (it == by_id.end()) throw InvalidArgument("response for unknown item '" + r.item_id + "'");
    if (!r.ok) {
      TraceRecord rec;
      rec.item_id = r.item_id;
      rec.raw = r.text;
      rec.violations = {"RequestFailed"};
      split.rejected.push_back(std::move(rec));
      continue;
    }
    TraceRecord rec = make_record(r.item_id, r.text, it->second->options.size(), format);
    (rec.valid ? split.valid : split.rejected).push_back(std::move(rec));
  }
  return split;
}

}  // namespace qalam::cot
