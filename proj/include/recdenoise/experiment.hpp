#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recdenoise/dataset.hpp"
#include "recdenoise/multivae.hpp"
#include "recdenoise/synth.hpp"

namespace recdenoise {

inline constexpr const char* kToolVersion = "0.1.0";

class TransportExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DenoiserSpec {
  std::string id;    // unique within the roster
  std::string kind;  // random | top-pop | semantic | upper-bound | llm | mock-*
  int k = 1;
  std::uint64_t seed = 0;
  std::optional<int> runs;  // overrides the experiment-level run count
  // llm only:
  std::string variant = "zero_shot";
  std::string endpoint;
  std::string api_key_env = "LLM_API_KEY";
  std::string model;
  std::string model_label;
  int max_attempts = 4;
  int timeout_ms = 60000;
};

struct ExperimentConfig {
  // dataset
  std::string source;
  std::string format = "csv";
  std::string titles_path;
  std::string labels_path;  // synth noise labels, when present
  std::string domain_label = "movie";
  int kcore_user_min = 4;
  int kcore_item_min = 1;
  int sample_n = 0;  // 0 -> all users
  std::uint64_t sample_seed = 0;

  TrainConfig train;
  std::string checkpoint;  // non-empty -> skip training, use this model

  std::vector<DenoiserSpec> denoisers;
  int runs = 3;
  int threads = 1;
  std::vector<int> cutoffs = {10, 20, 100};
  std::string out_dir = "runs/exp";
  std::string model_name = "MultiVAE";  // name dropped into prompts

  SynthSpec synth;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json canonical() const;
  std::uint64_t hash() const;
  const DenoiserSpec& find_denoiser(const std::string& id) const;
};

// Per-run bookkeeping: config hash, tool version, per-stage content hashes.
// Any stage rerun over identical upstream artifacts reproduces its hashes.
class RunManifest {
 public:
  static RunManifest load_or_create(const std::string& out_dir, std::uint64_t config_hash,
                                    bool force);

  bool has_stage(const std::string& stage) const;
  void require_stage(const std::string& stage) const;
  void record_stage(const std::string& stage,
                    const std::map<std::string, std::string>& file_hashes);
  std::map<std::string, std::string> stage_files(const std::string& stage) const;
  void save() const;

 private:
  std::string path_;
  nlohmann::json doc_;
};

std::string file_hash_hex(const std::string& path);

// Pipeline stages; each writes artifacts plus a manifest entry and throws
// ConfigError / DependencyError / TransportExhaustedError on failure.
void cmd_synth(const ExperimentConfig& cfg, bool force);
DatasetStats cmd_prepare(const ExperimentConfig& cfg, bool force);
void cmd_train(const ExperimentConfig& cfg, bool force);
void cmd_denoise(const ExperimentConfig& cfg, const std::string& denoiser_id, bool force);
void cmd_evaluate(const ExperimentConfig& cfg, const std::string& denoiser_id, bool force);
void cmd_report(const ExperimentConfig& cfg);

}  // namespace recdenoise
