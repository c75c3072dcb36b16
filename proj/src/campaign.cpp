#include "recdenoise/campaign.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "recdenoise/hashing.hpp"
#include "recdenoise/prompt.hpp"

namespace recdenoise {

using json = nlohmann::json;

UserContext build_user_context(const SplitDataset& ds, const Scorer& scorer, UserId user,
                               const ContextNeeds& needs, const std::string& model_name) {
  const UserSplit& us = ds.users.at(static_cast<size_t>(user));
  UserContext ctx;
  ctx.user = user;
  ctx.history = us.history;
  ctx.window = ds.prompt_window(user);
  ctx.window_titles.reserve(ctx.window.size());
  for (ItemId i : ctx.window) ctx.window_titles.push_back(ds.catalog.titles[static_cast<size_t>(i)]);
  ctx.candidate = us.val_item;
  ctx.candidate_title = ds.catalog.titles[static_cast<size_t>(us.val_item)];
  ctx.candidate_rank = rank_of(scorer, ctx.history, ctx.candidate, ctx.history);
  ctx.model_name = model_name;
  if (needs.examples) ctx.examples = build_fewshot_examples(ds, scorer, user);
  if (needs.top_recs) {
    std::vector<std::string> titles;
    for (ItemId i : top_unmasked_items(scorer, ctx.history, ctx.history, 10))
      titles.push_back(ds.catalog.titles[static_cast<size_t>(i)]);
    ctx.top_recs = std::move(titles);
  }
  return ctx;
}

std::vector<DenoiseOutcome> run_campaign(const SplitDataset& ds, const Scorer& scorer,
                                         Denoiser& denoiser, const std::vector<UserId>& users,
                                         const CampaignConfig& config) {
  if (config.runs < 1) throw ConfigError("campaign runs must be >= 1");
  const int runs = denoiser.deterministic() ? 1 : config.runs;
  const ContextNeeds needs = denoiser.needs();

  std::vector<DenoiseOutcome> outcomes(users.size() * static_cast<size_t>(runs));
  auto work_user = [&](size_t upos) {
    const UserContext ctx =
        build_user_context(ds, scorer, users[upos], needs, config.model_name);
    for (int r = 0; r < runs; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      RemovalProposal prop = denoiser.propose(ctx, config.k, static_cast<std::uint64_t>(r));
      DenoiseOutcome out = apply_and_gate(ctx, prop, scorer);
      out.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      outcomes[upos * static_cast<size_t>(runs) + static_cast<size_t>(r)] = std::move(out);
    }
  };

  if (config.threads <= 1) {
    for (size_t upos = 0; upos < users.size(); ++upos) work_user(upos);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto runner = [&] {
      while (true) {
        const size_t upos = next.fetch_add(1);
        if (upos >= users.size()) return;
        try {
          work_user(upos);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(config.threads, static_cast<int>(users.size()));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(runner);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return outcomes;
}

namespace {
const char* error_name(ProposalError e) {
  switch (e) {
    case ProposalError::Formatting: return "formatting";
    case ProposalError::Hallucination: return "hallucination";
    default: return "none";
  }
}

ProposalError error_from_name(const std::string& s) {
  if (s == "formatting") return ProposalError::Formatting;
  if (s == "hallucination") return ProposalError::Hallucination;
  return ProposalError::None;
}
}  // namespace

void save_outcomes(const std::vector<DenoiseOutcome>& outcomes, const SplitDataset& ds,
                   const std::string& denoiser_id, int k, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write outcome log: " + path);
  json header = {{"denoiser", denoiser_id}, {"k", k}};
  out << header.dump() << "\n";
  for (const auto& o : outcomes) {
    json rec;
    rec["user"] = ds.catalog.users.at(static_cast<size_t>(o.user));
    rec["run"] = o.proposal.run;
    rec["source"] = o.proposal.source;
    rec["error"] = error_name(o.proposal.error);
    rec["transport_failure"] = o.proposal.transport_failure;
    rec["raw"] = o.proposal.raw_texts;
    json removals = json::array();
    for (ItemId i : o.proposal.removals)
      removals.push_back(ds.catalog.items.at(static_cast<size_t>(i)));
    rec["removals"] = removals;
    rec["rank_before"] = o.rank_before;
    rec["rank_after"] = o.rank_after;
    rec["accepted"] = o.accepted;
    json profile = json::array();
    for (ItemId i : o.final_profile) profile.push_back(ds.catalog.items.at(static_cast<size_t>(i)));
    rec["final_profile"] = profile;
    rec["wall_time_ms"] = o.wall_time_ms;
    out << rec.dump() << "\n";
  }
}

std::vector<DenoiseOutcome> load_outcomes(const std::string& path, const SplitDataset& ds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing outcome log: " + path);

  std::unordered_map<std::string, UserId> umap;
  std::unordered_map<std::string, ItemId> imap;
  for (size_t i = 0; i < ds.catalog.users.size(); ++i) umap[ds.catalog.users[i]] = static_cast<UserId>(i);
  for (size_t i = 0; i < ds.catalog.items.size(); ++i) imap[ds.catalog.items[i]] = static_cast<ItemId>(i);

  std::vector<DenoiseOutcome> outcomes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (rec.contains("denoiser")) continue;  // header
    DenoiseOutcome o;
    o.user = umap.at(rec.at("user").get<std::string>());
    o.proposal.run = rec.at("run").get<std::uint64_t>();
    o.proposal.source = rec.at("source").get<std::string>();
    o.proposal.error = error_from_name(rec.at("error").get<std::string>());
    o.proposal.transport_failure = rec.at("transport_failure").get<bool>();
    o.proposal.raw_texts = rec.at("raw").get<std::vector<std::string>>();
    for (const auto& r : rec.at("removals")) o.proposal.removals.push_back(imap.at(r.get<std::string>()));
    o.rank_before = rec.at("rank_before").get<int>();
    o.rank_after = rec.at("rank_after").get<int>();
    o.accepted = rec.at("accepted").get<bool>();
    for (const auto& f : rec.at("final_profile")) o.final_profile.push_back(imap.at(f.get<std::string>()));
    o.wall_time_ms = rec.at("wall_time_ms").get<double>();
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

std::uint64_t outcome_log_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing outcome log: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    rec.erase("wall_time_ms");
    h = fnv1a(rec.dump(), h);
    h = fnv1a("\n", h);
  }
  return h;
}

bool is_transport_failure(const DenoiseOutcome& o) { return o.proposal.transport_failure; }

}  // namespace recdenoise
