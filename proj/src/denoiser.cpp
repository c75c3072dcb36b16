#include "recdenoise/denoiser.hpp"

#include <algorithm>

namespace recdenoise {

DenoiseOutcome apply_and_gate(const UserContext& ctx, const RemovalProposal& proposal,
                              const Scorer& scorer) {
  DenoiseOutcome out;
  out.user = ctx.user;
  out.proposal = proposal;
  out.rank_before = ctx.candidate_rank;
  out.final_profile = ctx.history;

  if (proposal.error != ProposalError::None) {
    out.rank_after = out.rank_before;
    out.accepted = false;
    return out;
  }

  out.rank_after =
      rescore_with_removals(scorer, ctx.history, proposal.removals, ctx.candidate, ctx.history);
  out.accepted = out.rank_after < out.rank_before;
  if (out.accepted) {
    std::vector<ItemId> kept;
    kept.reserve(ctx.history.size());
    for (ItemId i : ctx.history)
      if (std::find(proposal.removals.begin(), proposal.removals.end(), i) ==
          proposal.removals.end())
        kept.push_back(i);
    out.final_profile = std::move(kept);
  }
  return out;
}

}  // namespace recdenoise
