#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace recdenoise {

struct RetryPolicy {
  int max_attempts = 4;
  int base_delay_ms = 250;
  int max_delay_ms = 4000;
  double jitter = 0.25;          // +/- fraction of the backoff delay
  int timeout_ms = 60000;        // per-attempt connect/read timeout
  std::uint64_t jitter_seed = 0;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  std::string user_tag;  // "u<user>-r<run>"; keeps repeated runs distinct samples
  nlohmann::json decoding_overrides;  // null -> provider defaults
};

struct ChatExchange {
  bool ok = false;
  bool config_error = false;  // non-retryable 4xx: bad key, bad model, ...
  std::string text;
  std::string finish_reason;
  std::string error;
  int attempts = 0;
  double latency_ms = 0.0;
};

// OpenAI-compatible chat-completions client. Retries transport failures,
// 5xx and 429 with exponential backoff and jitter; other 4xx fail fast.
// Safe for concurrent use (one connection per call).
class ChatClient {
 public:
  ChatClient(std::string base_url, std::string api_key, RetryPolicy retry);

  ChatExchange complete(const ChatRequest& request) const;

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  std::string api_key_;
  RetryPolicy retry_;
};

}  // namespace recdenoise
