#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "qalam/eval.hpp"
#include "qalam/teacher.hpp"

namespace qalam {

struct EndpointConfig {
  std::string base_url;  // "http://host:port" or "https://host"
  std::string completion_path = "/v1/chat/completions";
  std::string logprob_path = "/v1/logprob";
  // Name of the environment variable holding the bearer key; empty for none.
  std::string api_key_env;
  cot::Decoding decoding;
  int timeout_seconds = 120;
};

nlohmann::json to_json(const EndpointConfig& c);
EndpointConfig endpoint_from_json(const nlohmann::json& j);

// Chat-completion style client. Completion requests send
// {model, messages, temperature, max_tokens}; responses may be OpenAI-shaped
// (choices[0].message.content, finish_reason) or {text, finish_status}.
// Logprob requests send {prompt, continuation} and expect
// {logprob, bytes, tokens}.
//
// 401/403 raise AuthError; 408, 429, 5xx and connection failures raise
// TransportError; anything else is Error("endpoint_error").
class HttpEndpoint : public cot::TeacherEndpoint, public eval::ModelClient {
 public:
  explicit HttpEndpoint(EndpointConfig config);
  ~HttpEndpoint() override;

  cot::Completion complete(const cot::TeacherRequest& request) override;
  std::string complete(const std::string& item_id, const std::string& prompt) override;
  eval::LogProb logprob(const std::string& prompt, const std::string& continuation) override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  EndpointConfig config_;
  std::string token_;
};

}  // namespace qalam
