#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "recdenoise/chat_client.hpp"
#include "recdenoise/denoiser.hpp"
#include "recdenoise/parse.hpp"
#include "recdenoise/prompt.hpp"

namespace recdenoise {

// Denoiser over any text source routed through the real response parser:
// the shared path for mocks and for the wire client below.
class TextDenoiser : public Denoiser {
 public:
  using TextFn = std::function<std::string(const UserContext&, int, std::uint64_t)>;

  TextDenoiser(std::string id, TextFn fn, ContextNeeds needs = {}, bool deterministic = false)
      : id_(std::move(id)), fn_(std::move(fn)), needs_(needs), deterministic_(deterministic) {}

  std::string id() const override { return id_; }
  ContextNeeds needs() const override { return needs_; }
  bool deterministic() const override { return deterministic_; }

  RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) override {
    RemovalProposal p = parse_response(fn_(ctx, k, run), ctx.window, ctx.window_titles, k);
    p.source = id_;
    p.run = run;
    return p;
  }

 private:
  std::string id_;
  TextFn fn_;
  ContextNeeds needs_;
  bool deterministic_;
};

// The real thing: build_prompt -> chat completion -> parse_response.
// Exhausted transport retries become formatting-error proposals so a flaky
// endpoint degrades instead of aborting the campaign.
class LlmDenoiser : public Denoiser {
 public:
  LlmDenoiser(std::string id, PromptSpec spec, ChatClient client, std::string model,
              std::string transcript_path = {});

  std::string id() const override { return id_; }
  ContextNeeds needs() const override;
  bool deterministic() const override { return false; }
  RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) override;

 private:
  std::string id_;
  PromptSpec spec_;
  ChatClient client_;
  std::string model_;
  std::string transcript_path_;
  std::unique_ptr<std::mutex> transcript_mutex_;
};

}  // namespace recdenoise
