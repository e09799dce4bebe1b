// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vidlm {

inline constexpr const char* kApiTokenEnv = "VIDLM_API_TOKEN";

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// Implementations must be safe to call from several threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

// Failure worth retrying: connection errors, timeouts, 429 and 5xx.
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{2000};  // delay before retry k is base * 2^(k-1)
  std::function<void(std::chrono::milliseconds)> sleep;  // std::this_thread::sleep_for when empty
};

class RetryingChatClient final : public ChatClient {
 public:
  RetryingChatClient(ChatClient& inner, RetryPolicy policy);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  ChatClient& inner_;
  RetryPolicy policy_;
};

class StubChatClient final : public ChatClient {
 public:
  using Responder = std::function<std::string(const std::vector<ChatMessage>&)>;
  explicit StubChatClient(Responder responder) : responder_(std::move(responder)) {}
  std::string complete(const std::vector<ChatMessage>& messages) override { return responder_(messages); }

 private:
  Responder responder_;
};

struct HttpChatOptions {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model;
  std::string token;     // sent as a bearer token when non-empty
  std::chrono::seconds timeout{60};
};

// POSTs {"model", "messages"} as JSON. Accepts either an OpenAI-style
// {"choices": [{"message": {...}}]} body, a single message object, or a
// message list whose last entry is the reply.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatOptions options);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  HttpChatOptions options_;
  std::string origin_;
  std::string path_;
};

// Reads the bearer token from the environment; empty when unset.
std::string token_from_env(const char* variable = kApiTokenEnv);

std::string extract_reply(const std::string& response_body);

}  // namespace vidlm
