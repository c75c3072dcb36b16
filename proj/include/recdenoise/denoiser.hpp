#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recdenoise/scorer.hpp"
#include "recdenoise/types.hpp"

namespace recdenoise {

// Best/worst single removals mined on the second validation item, shown to
// the LLM as a worked example.
struct FewShotExemplar {
  std::string candidate_title;  // the user's val2 item
  std::string best_title;
  int best_rank_before = 0;
  int best_rank_after = 0;
  std::string worst_title;
  int worst_rank_before = 0;
  int worst_rank_after = 0;
};

// Everything a denoiser may see for one user. Denoisers must only consult
// the window; `history` is carried for the acceptance gate, which edits the
// full training row.
struct UserContext {
  UserId user = -1;
  std::vector<ItemId> window;             // ordered oldest -> newest
  std::vector<std::string> window_titles;  // aligned with window
  ItemId candidate = -1;                  // validation item
  std::string candidate_title;
  int candidate_rank = 0;                 // by the scorer on the full training row
  std::vector<ItemId> history;            // full training row, temporal order
  std::optional<FewShotExemplar> examples;
  std::optional<std::vector<std::string>> top_recs;  // 10 titles, best first
  std::string model_name = "MultiVAE";    // used verbatim in prompts
};

enum class ProposalError { None, Formatting, Hallucination };

struct RemovalProposal {
  std::vector<ItemId> removals;       // resolved window members when error == None
  std::vector<std::string> raw_texts;  // what the denoiser actually named
  std::string source;                  // denoiser id
  std::uint64_t run = 0;
  ProposalError error = ProposalError::None;
  bool transport_failure = false;  // retries exhausted; counted as formatting
};

struct DenoiseOutcome {
  UserId user = -1;
  RemovalProposal proposal;
  int rank_before = 0;
  int rank_after = 0;
  bool accepted = false;
  std::vector<ItemId> final_profile;  // training row used at test time
  double wall_time_ms = 0.0;
};

// What a denoiser needs in its UserContext beyond window + candidate.
struct ContextNeeds {
  bool examples = false;
  bool top_recs = false;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual std::string id() const = 0;
  virtual ContextNeeds needs() const { return {}; }
  virtual bool deterministic() const { return true; }

  // Never throws on malformed model output: failures are encoded in the
  // proposal's error field. `run` distinguishes repeated stochastic runs.
  virtual RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) = 0;
};

// The acceptance gate: keep the removal only if the validation candidate's
// rank strictly improves; otherwise the original profile stands. Proposals
// with errors are rejected without touching the scorer.
DenoiseOutcome apply_and_gate(const UserContext& ctx, const RemovalProposal& proposal,
                              const Scorer& scorer);

}  // namespace recdenoise
