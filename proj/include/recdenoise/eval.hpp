#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recdenoise/campaign.hpp"
#include "recdenoise/dataset.hpp"
#include "recdenoise/denoiser.hpp"
#include "recdenoise/metrics.hpp"
#include "recdenoise/scorer.hpp"

namespace recdenoise {

// Everything the report stage needs for one (user, run); once these are
// persisted the checkpoint can be deleted.
struct EvalRecord {
  UserId user = -1;
  std::uint64_t run = 0;
  int test_rank = 0;           // final (possibly denoised) profile
  int test_rank_original = 0;  // untouched profile
  int val_rank_before = 0;
  int val_rank_after = 0;
  bool accepted = false;
  ProposalError error = ProposalError::None;
  std::vector<ItemId> removals;
  std::vector<int> removal_ratings;
  int profile_len = 0;  // full training-history length
};

// Ranks the test item with final_profile as input and mask; the validation
// item is never added to the input row. Requires a complete campaign: every
// sampled user with the same number of runs.
std::vector<EvalRecord> evaluate_campaign(const std::vector<DenoiseOutcome>& outcomes,
                                          const Scorer& scorer, const SplitDataset& ds,
                                          const std::vector<UserId>& users);

void save_eval_records(const std::vector<EvalRecord>& records, const SplitDataset& ds,
                       const std::string& method, const std::string& path);
std::vector<EvalRecord> load_eval_records(const std::string& path, const SplitDataset& ds,
                                          std::string* method = nullptr);

struct MetricCell {
  double mean = 0.0;
  double original_mean = 0.0;
  std::optional<double> rel_change_pct;
  TTestResult test;
};

struct MethodReport {
  std::string method;
  bool denoised_subset = false;  // metrics restricted to users with an accepted run
  int n_users = 0;
  // Keyed by (metric name, cutoff); insertion order ndcg/hr/mrr x cutoffs.
  std::vector<std::pair<std::pair<std::string, int>, MetricCell>> cells;
  double formatting_pct = 0.0;
  double hallucination_pct = 0.0;
  double users_denoised_pct = 0.0;
};

// Per-user value = mean over runs, then mean over users; the paired t-test
// pairs per-user means against the original profiles.
MethodReport aggregate_method(const std::string& method, const std::vector<EvalRecord>& records,
                              const std::vector<int>& cutoffs, bool denoised_only);

// (formatting %, hallucination %) over all (user, run) proposals.
std::pair<double, double> error_rates(const std::vector<DenoiseOutcome>& outcomes);

struct RatingBucketRow {
  int rating = 0;
  std::optional<double> positive_change_pct;  // users whose NDCG@20 improved
  std::optional<double> negative_change_pct;  // users whose NDCG@20 dropped
  int users = 0;
  int removals = 0;
};

// Accepted removals grouped by the removed item's original rating; each item
// of a pair removal lands in its own bucket.
std::vector<RatingBucketRow> breakdown_by_rating(const std::vector<EvalRecord>& records);

struct LengthBucketRow {
  int len_lo = 0;
  int len_hi = 0;
  std::optional<double> change_pct;  // relative NDCG@20 change in the bucket
  int improved = 0;                  // by best-run validation rank delta
  int unchanged = 0;
  int worsened = 0;
  int users = 0;
};

// Quartile buckets of full training-history length over the campaign users.
std::vector<LengthBucketRow> breakdown_by_profile_length(const std::vector<EvalRecord>& records);

// Table rendering: one markdown table per scope with significance markers,
// and flat CSV (method,metric,cutoff rows).
std::string render_markdown_report(const std::vector<MethodReport>& reports,
                                   const std::vector<int>& cutoffs, const std::string& title);
void write_report_csv(const std::vector<MethodReport>& reports, const std::string& path);
void write_rating_breakdown_csv(const std::vector<RatingBucketRow>& rows, const std::string& path);
void write_length_breakdown_csv(const std::vector<LengthBucketRow>& rows, const std::string& path);

}  // namespace recdenoise
