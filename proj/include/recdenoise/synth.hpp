#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "recdenoise/dataset.hpp"
#include "recdenoise/denoiser.hpp"

namespace recdenoise {

// Cluster-structured interactions with planted out-of-cluster noise, so
// denoisers can be judged against known labels offline.
struct SynthSpec {
  int n_users = 200;
  int n_items = 80;
  int n_clusters = 4;
  int profile_len_min = 10;  // total interactions per user, holdouts included
  int profile_len_max = 14;
  double noise_rate = 0.2;   // fraction of each profile drawn out-of-cluster
  std::uint64_t seed = 0;

  void validate() const;
};

struct NoiseLabels {
  std::set<std::pair<std::string, std::string>> noisy;  // (user, item) external ids

  bool is_noise(const std::string& user, const std::string& item) const {
    return noisy.count({user, item}) > 0;
  }
};

struct SynthOutput {
  std::vector<Interaction> interactions;
  TitleMap titles;  // "Item-<cluster>-<index>"
  NoiseLabels labels;
};

// Deterministic under seed. In-cluster items come from the user's cluster
// (rated 4-5), noise uniformly from other clusters (rated 1-3) at positions
// spread over the whole profile. Timestamps strictly increase per user.
SynthOutput synth_generate(const SynthSpec& spec);

// Writes the same CSV + title sidecar `dataset` ingests, plus labels JSON.
void save_synth(const SynthOutput& out, const std::string& data_path,
                const std::string& titles_path, const std::string& labels_path);
NoiseLabels load_labels(const std::string& labels_path);

enum class MockMode { Oracle, ValidRandom, Malformed, Hallucinating };

MockMode parse_mock_mode(const std::string& name);

// Scripted LLM stand-ins that emit raw text through the real parser.
// Oracle wraps the exhaustive validation sweep and answers "[title]"; the
// bad modes produce deterministic malformed / off-window output.
std::unique_ptr<Denoiser> make_mock_denoiser(MockMode mode, const Scorer* scorer,
                                             std::uint64_t seed);

// Replays a fixture transcript keyed by (user, run); a missing key is a
// hard error (incomplete fixture).
std::unique_ptr<Denoiser> make_scripted_denoiser(
    std::string id, std::map<std::pair<UserId, std::uint64_t>, std::string> script);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  int removed = 0;  // distinct removed (user, item) pairs
};

// Removal quality against planted noise, over accepted outcomes only.
// Recall counts noise among the denoised users' training histories (the
// only removable interactions). Not-applicable when nothing was removed.
std::optional<PrecisionRecall> noise_precision(const std::vector<DenoiseOutcome>& outcomes,
                                               const SplitDataset& ds, const NoiseLabels& labels);

}  // namespace recdenoise
