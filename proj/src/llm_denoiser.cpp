#include "recdenoise/llm_denoiser.hpp"

#include <fstream>

namespace recdenoise {

using json = nlohmann::json;

LlmDenoiser::LlmDenoiser(std::string id, PromptSpec spec, ChatClient client, std::string model,
                         std::string transcript_path)
    : id_(std::move(id)),
      spec_(std::move(spec)),
      client_(std::move(client)),
      model_(std::move(model)),
      transcript_path_(std::move(transcript_path)),
      transcript_mutex_(std::make_unique<std::mutex>()) {}

ContextNeeds LlmDenoiser::needs() const {
  ContextNeeds n;
  n.examples = spec_.variant == PromptVariant::FewShot;
  n.top_recs = spec_.variant == PromptVariant::ZeroShotRecs;
  return n;
}

RemovalProposal LlmDenoiser::propose(const UserContext& ctx, int k, std::uint64_t run) {
  PromptSpec spec = spec_;
  spec.k = k;
  const std::string prompt = build_prompt(spec, ctx);

  ChatRequest req;
  req.model = model_;
  req.prompt = prompt;
  req.user_tag = "u" + std::to_string(ctx.user) + "-r" + std::to_string(run);
  const ChatExchange ex = client_.complete(req);

  if (!transcript_path_.empty()) {
    std::lock_guard<std::mutex> lock(*transcript_mutex_);
    std::ofstream out(transcript_path_, std::ios::binary | std::ios::app);
    json rec = {{"user", ctx.user},       {"run", run},
                {"model", model_},        {"prompt", prompt},
                {"ok", ex.ok},            {"text", ex.text},
                {"attempts", ex.attempts}, {"latency_ms", ex.latency_ms},
                {"error", ex.error}};
    out << rec.dump() << "\n";
  }

  if (ex.config_error) throw ConfigError("chat endpoint rejected the request: " + ex.error);
  if (!ex.ok) {
    RemovalProposal p;
    p.source = id_;
    p.run = run;
    p.error = ProposalError::Formatting;
    p.transport_failure = true;
    p.raw_texts = {ex.error};
    return p;
  }

  RemovalProposal p = parse_response(ex.text, ctx.window, ctx.window_titles, k);
  p.source = id_;
  p.run = run;
  return p;
}

}  // namespace recdenoise
