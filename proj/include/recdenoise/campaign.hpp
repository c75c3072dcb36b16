#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recdenoise/dataset.hpp"
#include "recdenoise/denoiser.hpp"
#include "recdenoise/scorer.hpp"

namespace recdenoise {

struct CampaignConfig {
  int k = 1;
  int runs = 1;      // stochastic denoisers only; deterministic ones collapse to 1
  int threads = 1;   // per-user work is independent; collection order stays canonical
  std::string model_name = "MultiVAE";
};

// Assembles what a denoiser sees for one user: prompt window with titles,
// the validation candidate and its rank, plus exemplars / top-10
// recommendations when the denoiser asks for them.
UserContext build_user_context(const SplitDataset& ds, const Scorer& scorer, UserId user,
                               const ContextNeeds& needs, const std::string& model_name);

// Proposes and gates for every (user, run). Outcomes are ordered by (user
// position, run) regardless of thread count.
std::vector<DenoiseOutcome> run_campaign(const SplitDataset& ds, const Scorer& scorer,
                                         Denoiser& denoiser, const std::vector<UserId>& users,
                                         const CampaignConfig& config);

// Outcome log: JSON lines, one record per (user, run), external ids.
void save_outcomes(const std::vector<DenoiseOutcome>& outcomes, const SplitDataset& ds,
                   const std::string& denoiser_id, int k, const std::string& path);
std::vector<DenoiseOutcome> load_outcomes(const std::string& path, const SplitDataset& ds);

// Content hash over the log with volatile fields (wall time) excluded, so
// identical campaigns hash identically.
std::uint64_t outcome_log_hash(const std::string& path);

// True for proposals that exhausted LLM transport retries (campaign-level
// failure accounting).
bool is_transport_failure(const DenoiseOutcome& o);

}  // namespace recdenoise
