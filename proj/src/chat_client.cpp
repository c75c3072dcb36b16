#include "recdenoise/chat_client.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "recdenoise/hashing.hpp"
#include "recdenoise/rng.hpp"

namespace recdenoise {

using json = nlohmann::json;

ChatClient::ChatClient(std::string base_url, std::string api_key, RetryPolicy retry)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), retry_(retry) {}

ChatExchange ChatClient::complete(const ChatRequest& request) const {
  ChatExchange ex;
  const auto t0 = std::chrono::steady_clock::now();

  json body;
  body["model"] = request.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
  if (!request.user_tag.empty()) body["user"] = request.user_tag;
  if (!request.decoding_overrides.is_null())
    for (auto& [key, value] : request.decoding_overrides.items()) body[key] = value;
  const std::string payload = body.dump();

  Rng jitter_rng(derive_seed(retry_.jitter_seed, fnv1a(request.user_tag)));

  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    ex.attempts = attempt;
    if (attempt > 1) {
      double delay = retry_.base_delay_ms * std::pow(2.0, attempt - 2);
      delay = std::min(delay, static_cast<double>(retry_.max_delay_ms));
      delay *= 1.0 + retry_.jitter * (2.0 * jitter_rng.next_double() - 1.0);
      std::this_thread::sleep_for(std::chrono::milliseconds(std::max(0, static_cast<int>(delay))));
    }

    httplib::Client cli(base_url_);
    cli.set_connection_timeout(retry_.timeout_ms / 1000, (retry_.timeout_ms % 1000) * 1000);
    cli.set_read_timeout(retry_.timeout_ms / 1000, (retry_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = cli.Post("/v1/chat/completions", headers, payload, "application/json");
    if (!res) {
      ex.error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      ex.error = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      ex.config_error = true;
      ex.error = "non-retryable status " + std::to_string(res->status) + ": " + res->body;
      break;
    }

    try {
      json doc = json::parse(res->body);
      const json& msg = doc.at("choices").at(0).at("message");
      ex.text = msg.at("content").get<std::string>();
      ex.finish_reason = doc.at("choices").at(0).value("finish_reason", "");
      ex.ok = true;
      ex.error.clear();
      break;
    } catch (const std::exception& e) {
      ex.error = std::string("malformed response: ") + e.what();
      continue;  // counted as a transport failure
    }
  }

  ex.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return ex;
}

}  // namespace recdenoise
