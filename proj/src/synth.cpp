#include "recdenoise/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "recdenoise/baselines.hpp"
#include "recdenoise/llm_denoiser.hpp"
#include "recdenoise/rng.hpp"

namespace recdenoise {

using json = nlohmann::json;

void SynthSpec::validate() const {
  if (n_users < 1) throw ConfigError("synth: n_users must be >= 1");
  if (n_clusters < 2) throw ConfigError("synth: n_clusters must be >= 2");
  if (n_items < n_clusters) throw ConfigError("synth: need at least one item per cluster");
  if (profile_len_min < 4) throw ConfigError("synth: profiles need >= 4 interactions");
  if (profile_len_max < profile_len_min) throw ConfigError("synth: bad profile length range");
  if (noise_rate < 0 || noise_rate >= 1) throw ConfigError("synth: noise_rate must be in [0, 1)");
  const int min_cluster = n_items / n_clusters;
  if (min_cluster < profile_len_max)
    throw ConfigError("synth: clusters smaller than the longest profile; add items or clusters");
  if (n_items - (n_items + n_clusters - 1) / n_clusters < profile_len_max)
    throw ConfigError("synth: not enough out-of-cluster items for noise draws");
}

SynthOutput synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SynthOutput out;

  // Items round-robin over clusters; titles carry the cluster for eyeballing.
  std::vector<std::vector<int>> cluster_items(static_cast<size_t>(spec.n_clusters));
  for (int i = 0; i < spec.n_items; ++i) {
    const int c = i % spec.n_clusters;
    cluster_items[static_cast<size_t>(c)].push_back(i);
    out.titles[std::to_string(i)] = "Item-" + std::to_string(c) + "-" + std::to_string(i);
  }

  auto sample_distinct = [&rng](const std::vector<int>& pool, int n) {
    std::vector<int> copy = pool;
    std::vector<int> picked;
    for (int i = 0; i < n; ++i) {
      const size_t j = static_cast<size_t>(i) +
                       static_cast<size_t>(rng.next_below(copy.size() - static_cast<size_t>(i)));
      std::swap(copy[static_cast<size_t>(i)], copy[j]);
      picked.push_back(copy[static_cast<size_t>(i)]);
    }
    return picked;
  };

  for (int u = 0; u < spec.n_users; ++u) {
    const int cluster = u % spec.n_clusters;
    const int total =
        spec.profile_len_min +
        static_cast<int>(rng.next_below(
            static_cast<std::uint64_t>(spec.profile_len_max - spec.profile_len_min + 1)));
    const int n_noise = static_cast<int>(std::lround(spec.noise_rate * total));
    const int n_in = total - n_noise;

    std::vector<int> others;
    for (int c = 0; c < spec.n_clusters; ++c)
      if (c != cluster)
        others.insert(others.end(), cluster_items[static_cast<size_t>(c)].begin(),
                      cluster_items[static_cast<size_t>(c)].end());

    const std::vector<int> in_items = sample_distinct(cluster_items[static_cast<size_t>(cluster)], n_in);
    const std::vector<int> noise_items = sample_distinct(others, n_noise);

    // Noise lands at uniform positions across the whole profile.
    std::vector<int> positions(static_cast<size_t>(total));
    for (int i = 0; i < total; ++i) positions[static_cast<size_t>(i)] = i;
    const std::vector<int> noise_pos = sample_distinct(positions, n_noise);
    std::vector<char> is_noise_pos(static_cast<size_t>(total), 0);
    for (int pos : noise_pos) is_noise_pos[static_cast<size_t>(pos)] = 1;

    const std::string user_id = std::to_string(u);
    size_t next_in = 0, next_noise = 0;
    for (int pos = 0; pos < total; ++pos) {
      Interaction r;
      r.user = user_id;
      r.timestamp = pos + 1;
      if (is_noise_pos[static_cast<size_t>(pos)]) {
        r.item = std::to_string(noise_items[next_noise++]);
        r.rating = 1 + static_cast<int>(rng.next_below(3));  // 1-3
        out.labels.noisy.insert({r.user, r.item});
      } else {
        r.item = std::to_string(in_items[next_in++]);
        r.rating = 4 + static_cast<int>(rng.next_below(2));  // 4-5
      }
      out.interactions.push_back(std::move(r));
    }
  }
  return out;
}

void save_synth(const SynthOutput& out, const std::string& data_path,
                const std::string& titles_path, const std::string& labels_path) {
  {
    std::ofstream f(data_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + data_path);
    f << "user,item,rating,timestamp\n";
    for (const auto& r : out.interactions)
      f << r.user << "," << r.item << "," << r.rating << "," << r.timestamp << "\n";
  }
  {
    std::ofstream f(titles_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + titles_path);
    f << "item,title\n";
    for (const auto& [item, title] : out.titles) f << item << "," << title << "\n";
  }
  {
    std::ofstream f(labels_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + labels_path);
    json arr = json::array();
    for (const auto& [user, item] : out.labels.noisy)
      arr.push_back({{"user", user}, {"item", item}});
    f << json{{"noise", arr}}.dump(2);
  }
}

NoiseLabels load_labels(const std::string& labels_path) {
  std::ifstream f(labels_path, std::ios::binary);
  if (!f) throw DependencyError("missing labels file: " + labels_path);
  json doc = json::parse(f);
  NoiseLabels labels;
  for (const auto& rec : doc.at("noise"))
    labels.noisy.insert({rec.at("user").get<std::string>(), rec.at("item").get<std::string>()});
  return labels;
}

MockMode parse_mock_mode(const std::string& name) {
  if (name == "oracle") return MockMode::Oracle;
  if (name == "valid-random") return MockMode::ValidRandom;
  if (name == "malformed") return MockMode::Malformed;
  if (name == "hallucinating") return MockMode::Hallucinating;
  throw ConfigError("unknown mock mode '" + name + "'");
}

namespace {
std::string bracketed_titles(const UserContext& ctx, const std::vector<ItemId>& items) {
  std::string text;
  for (size_t r = 0; r < items.size(); ++r) {
    if (r) text += ", ";
    for (size_t i = 0; i < ctx.window.size(); ++i) {
      if (ctx.window[i] == items[r]) {
        text += "[" + ctx.window_titles[i] + "]";
        break;
      }
    }
  }
  return text;
}
}  // namespace

std::unique_ptr<Denoiser> make_mock_denoiser(MockMode mode, const Scorer* scorer,
                                             std::uint64_t seed) {
  switch (mode) {
    case MockMode::Oracle: {
      if (!scorer) throw ConfigError("oracle mock needs a scorer");
      auto sweep = std::make_shared<UpperBoundDenoiser>(*scorer);
      return std::make_unique<TextDenoiser>(
          "mock-oracle",
          [sweep](const UserContext& ctx, int k, std::uint64_t run) {
            return bracketed_titles(ctx, sweep->propose(ctx, k, run).removals);
          });
    }
    case MockMode::ValidRandom:
      return std::make_unique<TextDenoiser>(
          "mock-valid-random",
          [seed](const UserContext& ctx, int k, std::uint64_t run) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ctx.user), run));
            std::vector<ItemId> pool = ctx.window;
            std::vector<ItemId> picked;
            for (int i = 0; i < k; ++i) {
              const size_t j =
                  static_cast<size_t>(i) +
                  static_cast<size_t>(rng.next_below(pool.size() - static_cast<size_t>(i)));
              std::swap(pool[static_cast<size_t>(i)], pool[j]);
              picked.push_back(pool[static_cast<size_t>(i)]);
            }
            return bracketed_titles(ctx, picked);
          });
    case MockMode::Malformed:
      return std::make_unique<TextDenoiser>(
          "mock-malformed",
          [](const UserContext&, int, std::uint64_t) { return std::string("I cannot decide."); });
    case MockMode::Hallucinating:
    default:
      return std::make_unique<TextDenoiser>(
          "mock-hallucinating", [](const UserContext& ctx, int k, std::uint64_t run) {
            std::string text;
            for (int i = 0; i < k; ++i) {
              if (i) text += ", ";
              text += "[No Such Item " + std::to_string(ctx.user) + " " + std::to_string(run) +
                      " " + std::to_string(i) + "]";
            }
            return text;
          });
  }
}

std::unique_ptr<Denoiser> make_scripted_denoiser(
    std::string id, std::map<std::pair<UserId, std::uint64_t>, std::string> script) {
  auto table = std::make_shared<std::map<std::pair<UserId, std::uint64_t>, std::string>>(
      std::move(script));
  return std::make_unique<TextDenoiser>(
      std::move(id), [table](const UserContext& ctx, int, std::uint64_t run) {
        auto it = table->find({ctx.user, run});
        if (it == table->end())
          throw std::runtime_error("scripted denoiser: fixture has no entry for user " +
                                   std::to_string(ctx.user) + ", run " + std::to_string(run));
        return it->second;
      });
}

std::optional<PrecisionRecall> noise_precision(const std::vector<DenoiseOutcome>& outcomes,
                                               const SplitDataset& ds,
                                               const NoiseLabels& labels) {
  std::set<std::pair<UserId, ItemId>> removed;
  std::set<UserId> denoised_users;
  for (const auto& o : outcomes) {
    if (!o.accepted) continue;
    denoised_users.insert(o.user);
    for (ItemId i : o.proposal.removals) removed.insert({o.user, i});
  }
  if (removed.empty()) return std::nullopt;

  int hits = 0;
  for (const auto& [u, i] : removed)
    if (labels.is_noise(ds.catalog.users.at(static_cast<size_t>(u)),
                        ds.catalog.items.at(static_cast<size_t>(i))))
      ++hits;

  int total_noise = 0;
  for (UserId u : denoised_users) {
    const auto& user_id = ds.catalog.users.at(static_cast<size_t>(u));
    for (ItemId i : ds.users.at(static_cast<size_t>(u)).history)
      if (labels.is_noise(user_id, ds.catalog.items.at(static_cast<size_t>(i)))) ++total_noise;
  }

  PrecisionRecall pr;
  pr.removed = static_cast<int>(removed.size());
  pr.precision = static_cast<double>(hits) / static_cast<double>(removed.size());
  pr.recall = total_noise > 0 ? static_cast<double>(hits) / static_cast<double>(total_noise) : 0.0;
  return pr;
}

}  // namespace recdenoise
