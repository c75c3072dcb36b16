#include "recdenoise/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "recdenoise/baselines.hpp"
#include "recdenoise/campaign.hpp"
#include "recdenoise/eval.hpp"
#include "recdenoise/hashing.hpp"
#include "recdenoise/llm_denoiser.hpp"

namespace recdenoise {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ${VAR} interpolation over every string value; unset variables stay empty
// so secrets never land in configs.
std::string interpolate_env(std::string s) {
  size_t pos = 0;
  while ((pos = s.find("${", pos)) != std::string::npos) {
    const size_t end = s.find('}', pos);
    if (end == std::string::npos) break;
    const std::string var = s.substr(pos + 2, end - pos - 2);
    const char* val = std::getenv(var.c_str());
    s.replace(pos, end - pos + 1, val ? val : "");
    pos += val ? std::strlen(val) : 0;
  }
  return s;
}

void interpolate_json(json& doc) {
  if (doc.is_string()) doc = interpolate_env(doc.get<std::string>());
  else if (doc.is_object() || doc.is_array())
    for (auto& el : doc) interpolate_json(el);
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}
}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(doc);
}

ExperimentConfig ExperimentConfig::from_json(const json& raw) {
  json doc = raw;
  interpolate_json(doc);
  ExperimentConfig cfg;
  try {
    if (doc.contains("dataset")) {
      const json& d = doc.at("dataset");
      cfg.source = d.value("source", "");
      cfg.format = d.value("format", "csv");
      cfg.titles_path = d.value("titles", "");
      cfg.labels_path = d.value("labels", "");
      cfg.domain_label = d.value("domain_label", "movie");
    }
    if (doc.contains("kcore")) {
      cfg.kcore_user_min = doc.at("kcore").value("user_min", 4);
      cfg.kcore_item_min = doc.at("kcore").value("item_min", 1);
    }
    if (doc.contains("sample")) {
      cfg.sample_n = doc.at("sample").value("n", 0);
      cfg.sample_seed = doc.at("sample").value("seed", 0ULL);
    }
    if (doc.contains("train")) {
      const json& t = doc.at("train");
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
      cfg.train.dropout = t.value("dropout", cfg.train.dropout);
      cfg.train.beta_max = t.value("beta_max", cfg.train.beta_max);
      cfg.train.anneal_steps = t.value("anneal_steps", cfg.train.anneal_steps);
      cfg.train.hidden = t.value("hidden", cfg.train.hidden);
      cfg.train.latent = t.value("latent", cfg.train.latent);
      cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    cfg.checkpoint = doc.value("checkpoint", "");
    cfg.runs = doc.value("runs", 3);
    cfg.threads = doc.value("threads", 1);
    if (doc.contains("cutoffs")) cfg.cutoffs = doc.at("cutoffs").get<std::vector<int>>();
    cfg.out_dir = doc.value("out", cfg.out_dir);
    cfg.model_name = doc.value("model_name", cfg.model_name);
    if (doc.contains("denoisers")) {
      for (const json& d : doc.at("denoisers")) {
        DenoiserSpec spec;
        spec.id = d.at("id").get<std::string>();
        spec.kind = d.at("kind").get<std::string>();
        spec.k = d.value("k", 1);
        spec.seed = d.value("seed", 0ULL);
        if (d.contains("runs")) spec.runs = d.at("runs").get<int>();
        spec.variant = d.value("variant", "zero_shot");
        spec.endpoint = d.value("endpoint", "");
        spec.api_key_env = d.value("api_key_env", "LLM_API_KEY");
        spec.model = d.value("model", "");
        spec.model_label = d.value("model_label", "");
        spec.max_attempts = d.value("max_attempts", 4);
        spec.timeout_ms = d.value("timeout_ms", 60000);
        cfg.denoisers.push_back(std::move(spec));
      }
    }
    if (doc.contains("synth")) {
      const json& s = doc.at("synth");
      cfg.synth.n_users = s.value("n_users", cfg.synth.n_users);
      cfg.synth.n_items = s.value("n_items", cfg.synth.n_items);
      cfg.synth.n_clusters = s.value("n_clusters", cfg.synth.n_clusters);
      cfg.synth.profile_len_min = s.value("profile_len_min", cfg.synth.profile_len_min);
      cfg.synth.profile_len_max = s.value("profile_len_max", cfg.synth.profile_len_max);
      cfg.synth.noise_rate = s.value("noise_rate", cfg.synth.noise_rate);
      cfg.synth.seed = s.value("seed", cfg.synth.seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad config field: " + std::string(e.what()));
  }

  std::set<std::string> ids;
  for (const auto& d : cfg.denoisers)
    if (!ids.insert(d.id).second) throw ConfigError("duplicate denoiser id: " + d.id);
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  return cfg;
}

json ExperimentConfig::canonical() const {
  json doc;
  doc["dataset"] = {{"source", source},           {"format", format},
                    {"titles", titles_path},      {"labels", labels_path},
                    {"domain_label", domain_label}};
  doc["kcore"] = {{"user_min", kcore_user_min}, {"item_min", kcore_item_min}};
  doc["sample"] = {{"n", sample_n}, {"seed", sample_seed}};
  doc["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"learning_rate", train.learning_rate},
                  {"dropout", train.dropout},
                  {"beta_max", train.beta_max},
                  {"anneal_steps", train.anneal_steps},
                  {"hidden", train.hidden},
                  {"latent", train.latent},
                  {"seed", train.seed}};
  doc["checkpoint"] = checkpoint;
  doc["runs"] = runs;
  doc["cutoffs"] = cutoffs;
  doc["out"] = out_dir;
  doc["model_name"] = model_name;
  json roster = json::array();
  for (const auto& d : denoisers) {
    json spec = {{"id", d.id},         {"kind", d.kind},           {"k", d.k},
                 {"seed", d.seed},     {"variant", d.variant},     {"endpoint", d.endpoint},
                 {"model", d.model},   {"model_label", d.model_label}};
    if (d.runs) spec["runs"] = *d.runs;
    roster.push_back(spec);
  }
  doc["denoisers"] = roster;
  doc["synth"] = {{"n_users", synth.n_users},
                  {"n_items", synth.n_items},
                  {"n_clusters", synth.n_clusters},
                  {"profile_len_min", synth.profile_len_min},
                  {"profile_len_max", synth.profile_len_max},
                  {"noise_rate", synth.noise_rate},
                  {"seed", synth.seed}};
  return doc;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical().dump()); }

const DenoiserSpec& ExperimentConfig::find_denoiser(const std::string& id) const {
  for (const auto& d : denoisers)
    if (d.id == id) return d;
  throw ConfigError("no denoiser with id '" + id + "' in the config");
}

RunManifest RunManifest::load_or_create(const std::string& out_dir, std::uint64_t config_hash,
                                        bool force) {
  RunManifest m;
  m.path_ = out_dir + "/manifest.json";
  const std::string hash_hex = hex64(config_hash);
  std::ifstream in(m.path_, std::ios::binary);
  if (in) {
    m.doc_ = json::parse(in);
    if (m.doc_.value("config_hash", "") != hash_hex) {
      if (!force)
        throw DependencyError(
            "artifacts in " + out_dir +
            " were produced by a different config; rerun with --force to overwrite");
      m.doc_["config_hash"] = hash_hex;
      m.doc_["stages"] = json::object();
    }
  } else {
    m.doc_ = {{"config_hash", hash_hex}, {"tool_version", kToolVersion}, {"stages", json::object()}};
  }
  return m;
}

bool RunManifest::has_stage(const std::string& stage) const {
  return doc_.at("stages").contains(stage);
}

void RunManifest::require_stage(const std::string& stage) const {
  if (!has_stage(stage))
    throw DependencyError("stage '" + stage + "' has not produced artifacts yet");
}

void RunManifest::record_stage(const std::string& stage,
                               const std::map<std::string, std::string>& file_hashes) {
  json files = json::object();
  for (const auto& [f, h] : file_hashes) files[f] = h;
  doc_["stages"][stage] = {{"files", files},
                           {"completed_at", static_cast<std::int64_t>(std::time(nullptr))}};
}

std::map<std::string, std::string> RunManifest::stage_files(const std::string& stage) const {
  require_stage(stage);
  std::map<std::string, std::string> out;
  for (const auto& [f, h] : doc_.at("stages").at(stage).at("files").items())
    out[f] = h.get<std::string>();
  return out;
}

void RunManifest::save() const {
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest: " + path_);
  out << doc_.dump(2) << "\n";
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing artifact: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

namespace {

SplitDataset load_prepared(const ExperimentConfig& cfg, std::vector<UserId>* sample) {
  return load_split(cfg.out_dir + "/split", sample);
}

std::unique_ptr<Denoiser> build_denoiser(const ExperimentConfig& cfg, const DenoiserSpec& spec,
                                         const SplitDataset& ds, const Scorer& scorer) {
  if (spec.kind == "random") return std::make_unique<RandomDenoiser>(spec.seed);
  if (spec.kind == "top-pop") return std::make_unique<TopPopDenoiser>(ds.popularity());
  if (spec.kind == "semantic")
    return std::make_unique<SemanticDenoiser>(scorer.item_embeddings());
  if (spec.kind == "upper-bound") return std::make_unique<UpperBoundDenoiser>(scorer);
  if (spec.kind.rfind("mock-", 0) == 0)
    return make_mock_denoiser(parse_mock_mode(spec.kind.substr(5)), &scorer, spec.seed);
  if (spec.kind == "llm") {
    if (spec.endpoint.empty())
      throw ConfigError("denoiser '" + spec.id + "' has no endpoint configured");
    const char* key = std::getenv(spec.api_key_env.c_str());
    RetryPolicy retry;
    retry.max_attempts = spec.max_attempts;
    retry.timeout_ms = spec.timeout_ms;
    retry.jitter_seed = spec.seed;
    PromptSpec prompt{parse_prompt_variant(spec.variant), spec.k, cfg.domain_label,
                      spec.model_label};
    fs::create_directories(cfg.out_dir + "/transcripts");
    return std::make_unique<LlmDenoiser>(spec.id, prompt,
                                         ChatClient(spec.endpoint, key ? key : "", retry),
                                         spec.model, cfg.out_dir + "/transcripts/" + spec.id +
                                                         ".jsonl");
  }
  throw ConfigError("unknown denoiser kind '" + spec.kind + "'");
}

}  // namespace

void cmd_synth(const ExperimentConfig& cfg, bool force) {
  if (cfg.source.empty()) throw ConfigError("synth needs dataset.source as its output path");
  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.source).parent_path().string().empty()
                             ? "."
                             : fs::path(cfg.source).parent_path().string());
  const std::string titles = cfg.titles_path.empty()
                                 ? (fs::path(cfg.source).parent_path() / "titles.csv").string()
                                 : cfg.titles_path;
  const std::string labels = cfg.labels_path.empty()
                                 ? (fs::path(cfg.source).parent_path() / "labels.json").string()
                                 : cfg.labels_path;
  SynthOutput out = synth_generate(cfg.synth);
  save_synth(out, cfg.source, titles, labels);

  RunManifest manifest = RunManifest::load_or_create(cfg.out_dir, cfg.hash(), force);
  manifest.record_stage("synth", {{cfg.source, file_hash_hex(cfg.source)},
                                  {titles, file_hash_hex(titles)},
                                  {labels, file_hash_hex(labels)}});
  manifest.save();
  std::cout << "synth: " << out.interactions.size() << " interactions, " << cfg.synth.n_users
            << " users, " << cfg.synth.n_items << " items -> " << cfg.source << "\n";
}

DatasetStats cmd_prepare(const ExperimentConfig& cfg, bool force) {
  if (cfg.source.empty()) throw ConfigError("dataset.source is required");
  fs::create_directories(cfg.out_dir + "/split");
  RunManifest manifest = RunManifest::load_or_create(cfg.out_dir, cfg.hash(), force);

  const SourceFormat format = parse_source_format(cfg.format);
  std::vector<Interaction> interactions = load_interactions(cfg.source, format);
  TitleMap titles;
  if (!cfg.titles_path.empty()) titles = load_titles(cfg.titles_path, format);
  const DatasetStats stats = dataset_stats(interactions, cfg.titles_path.empty() ? nullptr : &titles);
  std::cout << "loaded " << stats.interactions << " interactions, " << stats.users << " users, "
            << stats.items << " items, sparsity " << stats.sparsity_pct << "%\n";

  interactions = kcore_filter(std::move(interactions), cfg.kcore_user_min, cfg.kcore_item_min);
  SplitDataset ds = temporal_split(interactions, cfg.titles_path.empty() ? nullptr : &titles);
  const int n = cfg.sample_n > 0 ? cfg.sample_n : ds.num_users();
  const std::vector<UserId> sample = stratified_sample(ds, n, cfg.sample_seed);
  save_split(ds, sample, cfg.out_dir + "/split");

  manifest.record_stage(
      "prepare",
      {{"split/split_manifest.jsonl", file_hash_hex(cfg.out_dir + "/split/split_manifest.jsonl")},
       {"split/train_matrix.txt", file_hash_hex(cfg.out_dir + "/split/train_matrix.txt")},
       {"split/catalog.jsonl", file_hash_hex(cfg.out_dir + "/split/catalog.jsonl")}});
  manifest.save();
  std::cout << "prepare: " << ds.num_users() << " users, " << ds.num_items()
            << " items after k-core, window " << ds.window_len << ", sample " << sample.size()
            << "\n";
  return stats;
}

void cmd_train(const ExperimentConfig& cfg, bool force) {
  RunManifest manifest = RunManifest::load_or_create(cfg.out_dir, cfg.hash(), force);
  manifest.require_stage("prepare");
  SplitDataset ds = load_prepared(cfg, nullptr);

  const std::string model_path = cfg.out_dir + "/model.json";
  if (!cfg.checkpoint.empty()) {
    if (!fs::exists(cfg.checkpoint))
      throw ConfigError("configured checkpoint does not exist: " + cfg.checkpoint);
    fs::copy_file(cfg.checkpoint, model_path, fs::copy_options::overwrite_existing);
  } else {
    std::vector<std::vector<ItemId>> rows;
    rows.reserve(static_cast<size_t>(ds.num_users()));
    for (const auto& us : ds.users) rows.push_back(us.history);
    ModelParams params = multivae_train(rows, ds.num_items(), cfg.train);
    save_model(params, cfg.train, model_path);
  }
  manifest.record_stage("train", {{"model.json", file_hash_hex(model_path)}});
  manifest.save();
  std::cout << "train: checkpoint at " << model_path << "\n";
}

void cmd_denoise(const ExperimentConfig& cfg, const std::string& denoiser_id, bool force) {
  RunManifest manifest = RunManifest::load_or_create(cfg.out_dir, cfg.hash(), force);
  manifest.require_stage("prepare");
  manifest.require_stage("train");

  std::vector<UserId> sample;
  SplitDataset ds = load_prepared(cfg, &sample);
  MultiVae scorer(load_model(cfg.out_dir + "/model.json"));
  fs::create_directories(cfg.out_dir + "/outcomes");

  std::vector<const DenoiserSpec*> roster;
  for (const auto& d : cfg.denoisers)
    if (denoiser_id.empty() || d.id == denoiser_id) roster.push_back(&d);
  if (roster.empty()) throw ConfigError("no denoiser matches '" + denoiser_id + "'");

  for (const DenoiserSpec* spec : roster) {
    std::unique_ptr<Denoiser> denoiser = build_denoiser(cfg, *spec, ds, scorer);
    CampaignConfig cc;
    cc.k = spec->k;
    cc.runs = spec->runs.value_or(cfg.runs);
    cc.threads = cfg.threads;
    cc.model_name = cfg.model_name;
    std::vector<DenoiseOutcome> outcomes = run_campaign(ds, scorer, *denoiser, sample, cc);

    bool any_completed = false;
    for (const auto& o : outcomes)
      if (!is_transport_failure(o)) any_completed = true;
    const std::string path = cfg.out_dir + "/outcomes/" + spec->id + ".jsonl";
    save_outcomes(outcomes, ds, spec->id, spec->k, path);
    manifest.record_stage("denoise:" + spec->id,
                          {{"outcomes/" + spec->id + ".jsonl", hex64(outcome_log_hash(path))}});
    manifest.save();
    auto [fmt_pct, hal_pct] = error_rates(outcomes);
    std::cout << "denoise " << spec->id << ": " << outcomes.size() << " outcomes, formatting "
              << fmt_pct << "%, hallucination " << hal_pct << "%\n";
    if (!any_completed)
      throw TransportExhaustedError("denoiser '" + spec->id +
                                    "' completed zero users (transport retries exhausted)");
  }
}

void cmd_evaluate(const ExperimentConfig& cfg, const std::string& denoiser_id, bool force) {
  RunManifest manifest = RunManifest::load_or_create(cfg.out_dir, cfg.hash(), force);
  manifest.require_stage("prepare");
  manifest.require_stage("train");

  std::vector<UserId> sample;
  SplitDataset ds = load_prepared(cfg, &sample);
  MultiVae scorer(load_model(cfg.out_dir + "/model.json"));
  fs::create_directories(cfg.out_dir + "/eval");

  bool any = false;
  for (const auto& spec : cfg.denoisers) {
    if (!denoiser_id.empty() && spec.id != denoiser_id) continue;
    const std::string outcome_path = cfg.out_dir + "/outcomes/" + spec.id + ".jsonl";
    if (!fs::exists(outcome_path)) {
      if (!denoiser_id.empty())
        throw DependencyError("no outcome log for '" + spec.id + "'; run denoise first");
      continue;
    }
    manifest.require_stage("denoise:" + spec.id);
    std::vector<DenoiseOutcome> outcomes = load_outcomes(outcome_path, ds);
    std::vector<EvalRecord> records = evaluate_campaign(outcomes, scorer, ds, sample);
    const std::string eval_path = cfg.out_dir + "/eval/" + spec.id + ".jsonl";
    save_eval_records(records, ds, spec.id, eval_path);
    manifest.record_stage("evaluate:" + spec.id,
                          {{"eval/" + spec.id + ".jsonl", file_hash_hex(eval_path)}});
    any = true;
    std::cout << "evaluate " << spec.id << ": " << records.size() << " records\n";
  }
  if (!any) throw DependencyError("no outcome logs found; run denoise first");
  manifest.save();
}

void cmd_report(const ExperimentConfig& cfg) {
  RunManifest manifest = RunManifest::load_or_create(cfg.out_dir, cfg.hash(), false);
  manifest.require_stage("prepare");
  SplitDataset ds = load_prepared(cfg, nullptr);
  fs::create_directories(cfg.out_dir + "/reports");

  std::vector<MethodReport> all_users, denoised_only;
  bool first = true;
  for (const auto& spec : cfg.denoisers) {
    const std::string eval_path = cfg.out_dir + "/eval/" + spec.id + ".jsonl";
    if (!fs::exists(eval_path)) continue;
    manifest.require_stage("evaluate:" + spec.id);
    std::string method;
    std::vector<EvalRecord> records = load_eval_records(eval_path, ds, &method);
    if (first) {
      // Reference row: the untouched profiles scored once.
      std::vector<EvalRecord> original = records;
      for (auto& r : original) {
        r.test_rank = r.test_rank_original;
        r.accepted = false;
        r.error = ProposalError::None;
        r.removals.clear();
        r.removal_ratings.clear();
      }
      all_users.push_back(aggregate_method("original", original, cfg.cutoffs, false));
      first = false;
    }
    all_users.push_back(aggregate_method(method, records, cfg.cutoffs, false));
    denoised_only.push_back(aggregate_method(method, records, cfg.cutoffs, true));
    write_rating_breakdown_csv(breakdown_by_rating(records),
                               cfg.out_dir + "/reports/rating_breakdown_" + spec.id + ".csv");
    write_length_breakdown_csv(breakdown_by_profile_length(records),
                               cfg.out_dir + "/reports/length_breakdown_" + spec.id + ".csv");
  }
  if (all_users.empty()) throw DependencyError("no evaluation records found; run evaluate first");

  std::ofstream md(cfg.out_dir + "/reports/report.md", std::ios::binary);
  md << render_markdown_report(all_users, cfg.cutoffs,
                               "Relative change over original profiles, all users");
  md << "\n";
  md << render_markdown_report(denoised_only, cfg.cutoffs,
                               "Relative change over original profiles, denoised users");
  write_report_csv(all_users, cfg.out_dir + "/reports/all_users.csv");
  write_report_csv(denoised_only, cfg.out_dir + "/reports/denoised_users.csv");

  std::map<std::string, std::string> hashes;
  hashes["reports/report.md"] = file_hash_hex(cfg.out_dir + "/reports/report.md");
  hashes["reports/all_users.csv"] = file_hash_hex(cfg.out_dir + "/reports/all_users.csv");
  hashes["reports/denoised_users.csv"] = file_hash_hex(cfg.out_dir + "/reports/denoised_users.csv");
  manifest.record_stage("report", hashes);
  manifest.save();
  std::cout << "report: tables under " << cfg.out_dir << "/reports\n";
}

}  // namespace recdenoise
