#include "qalam/http_client.hpp"

#include <cstdlib>

#include <httplib.h>

#include "qalam/error.hpp"

namespace qalam {

using nlohmann::json;

json to_json(const EndpointConfig& c) {
  return {{"base_url", c.base_url},
          {"completion_path", c.completion_path},
          {"logprob_path", c.logprob_path},
          {"api_key_env", c.api_key_env},
          {"decoding", cot::to_json(c.decoding)},
          {"timeout_seconds", c.timeout_seconds}};
}

EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.completion_path = j.value("completion_path", c.completion_path);
  c.logprob_path = j.value("logprob_path", c.logprob_path);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (j.contains("decoding")) c.decoding = cot::decoding_from_json(j["decoding"]);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  return c;
}

HttpEndpoint::HttpEndpoint(EndpointConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw InvalidArgument("endpoint base_url is empty");
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw AuthError("environment variable " + config_.api_key_env + " is not set");
    token_ = key;
  }
}

HttpEndpoint::~HttpEndpoint() = default;

json HttpEndpoint::post(const std::string& path, const json& body) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  client.set_write_timeout(config_.timeout_seconds);
  if (!token_.empty()) client.set_bearer_token_auth(token_);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw TransportError("request to " + config_.base_url + path + " failed: " + httplib::to_string(res.error()));
  const int status = res->status;
  if (status == 401 || status == 403) throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError("HTTP " + std::to_string(status) + " from " + path);
  }
  if (status < 200 || status >= 300) {
    throw Error("endpoint_error", "HTTP " + std::to_string(status) + " from " + path + ": " + res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error("endpoint_error", std::string("response is not JSON: ") + e.what());
  }
}

cot::Completion HttpEndpoint::complete(const cot::TeacherRequest& request) {
  const json body = {{"model", request.decoding.model},
                     {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                     {"temperature", request.decoding.temperature},
                     {"max_tokens", request.decoding.max_tokens}};
  const json res = post(config_.completion_path, body);
  cot::Completion c;
  try {
    if (res.contains("choices")) {
      const json& choice = res.at("choices").at(0);
      c.text = choice.at("message").at("content").get<std::string>();
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        c.finish_status = choice["finish_reason"].get<std::string>();
      }
    } else {
      c.text = res.at("text").get<std::string>();
      c.finish_status = res.value("finish_status", c.finish_status);
    }
  } catch (const json::exception& e) {
    throw Error("endpoint_error", std::string("unexpected completion response: ") + e.what());
  }
  return c;
}

std::string HttpEndpoint::complete(const std::string& item_id, const std::string& prompt) {
  return complete(cot::TeacherRequest{item_id, prompt, config_.decoding}).text;
}

eval::LogProb HttpEndpoint::logprob(const std::string& prompt, const std::string& continuation) {
  const json res = post(config_.logprob_path, {{"prompt", prompt}, {"continuation", continuation}});
  try {
    return {res.at("logprob").get<double>(), res.at("bytes").get<std::size_t>(), res.at("tokens").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw Error("endpoint_error", std::string("unexpected logprob response: ") + e.what());
  }
}

}  // namespace qalam
