// SPDX-License-Identifier: Apache-2.0
#include "vidlm/chat_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vidlm/errors.hpp"

namespace vidlm {

using json = nlohmann::json;

RetryingChatClient::RetryingChatClient(ChatClient& inner, RetryPolicy policy)
    : inner_(inner), policy_(std::move(policy)) {
  if (policy_.max_attempts < 1) throw std::invalid_argument("retry policy needs at least one attempt");
}

std::string RetryingChatClient::complete(const std::vector<ChatMessage>& messages) {
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_.complete(messages);
    } catch (const TransientError&) {
      if (attempt >= policy_.max_attempts) throw;
      const auto delay = policy_.base_delay * (1LL << (attempt - 1));
      if (policy_.sleep) {
        policy_.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

HttpChatClient::HttpChatClient(HttpChatOptions options) : options_(std::move(options)) {
  const auto scheme_end = options_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL");
  const auto path_start = options_.endpoint.find('/', scheme_end + 3);
  origin_ = options_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = options_.model;
  body["messages"] = json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(origin_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransientError("request to " + options_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw std::runtime_error("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  return extract_reply(res->body);
}

std::string extract_reply(const std::string& response_body) {
  json parsed = json::parse(response_body, nullptr, false);
  if (parsed.is_discarded()) throw ContractViolation("chat response is not JSON");
  const json* message = nullptr;
  if (parsed.is_object() && parsed.contains("choices") && parsed["choices"].is_array() &&
      !parsed["choices"].empty()) {
    message = &parsed["choices"][0]["message"];
  } else if (parsed.is_array() && !parsed.empty()) {
    message = &parsed.back();
  } else if (parsed.is_object()) {
    message = &parsed;
  }
  if (message == nullptr || !message->is_object() || !message->contains("content") ||
      !(*message)["content"].is_string()) {
    throw ContractViolation("chat response carries no message content");
  }
  return (*message)["content"].get<std::string>();
}

std::string token_from_env(const char* variable) {
  const char* value = std::getenv(variable);
  return value ? std::string(value) : std::string();
}

}  // namespace vidlm
