#include "recdenoise/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "recdenoise/rng.hpp"

namespace recdenoise {

using json = nlohmann::json;

namespace {

// Latin-1 bytes >= 0x80 become two-byte UTF-8 sequences. Input that is
// already valid UTF-8 multibyte gets mangled; MovieLens sidecars are latin-1.
std::string latin1_to_utf8(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::string strip_cr(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

std::string trim_ws(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_sep(const std::string& line, const std::string& sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

// Minimal RFC-4180 field splitting: quoted fields may contain the delimiter
// and doubled quotes.
std::vector<std::string> split_delim_quoted(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delim) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::int64_t parse_i64(const std::string& s, const std::string& path, int line) {
  try {
    size_t used = 0;
    std::int64_t v = std::stoll(trim_ws(s), &used);
    if (used != trim_ws(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, line, "expected integer, got '" + s + "'");
  }
}

int parse_rating(const std::string& s, const std::string& path, int line) {
  // Ratings arrive as "4" or "4.0"; unary datasets may omit a rating scale.
  std::string t = trim_ws(s);
  try {
    size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    int r = static_cast<int>(v + 0.5);
    if (r <= 0) r = 1;
    if (r > 5) r = 5;
    return r;
  } catch (const std::exception&) {
    throw ParseError(path, line, "expected rating, got '" + s + "'");
  }
}

std::vector<Interaction> dedup_latest(std::vector<Interaction> rows) {
  // Latest timestamp wins per (user, item); ties keep the later file row.
  std::map<std::pair<std::string, std::string>, size_t> last;
  for (size_t i = 0; i < rows.size(); ++i) {
    auto key = std::make_pair(rows[i].user, rows[i].item);
    auto it = last.find(key);
    if (it == last.end() || rows[i].timestamp >= rows[it->second].timestamp) {
      last[key] = i;
    }
  }
  std::vector<size_t> keep;
  keep.reserve(last.size());
  for (const auto& [k, idx] : last) keep.push_back(idx);
  std::sort(keep.begin(), keep.end());
  std::vector<Interaction> out;
  out.reserve(keep.size());
  for (size_t idx : keep) out.push_back(std::move(rows[idx]));
  return out;
}

struct ColumnIndex {
  int user = -1, item = -1, rating = -1, timestamp = -1;
};

ColumnIndex header_columns(const std::vector<std::string>& header, const std::string& path) {
  ColumnIndex ci;
  for (size_t i = 0; i < header.size(); ++i) {
    std::string h = trim_ws(header[i]);
    std::transform(h.begin(), h.end(), h.begin(), [](unsigned char c) { return std::tolower(c); });
    if (h == "user" || h == "user_id" || h == "userid") ci.user = static_cast<int>(i);
    else if (h == "item" || h == "item_id" || h == "itemid") ci.item = static_cast<int>(i);
    else if (h == "rating") ci.rating = static_cast<int>(i);
    else if (h == "timestamp" || h == "time") ci.timestamp = static_cast<int>(i);
  }
  if (ci.user < 0 || ci.item < 0 || ci.timestamp < 0)
    throw ParseError(path, 1, "header must name user, item, timestamp (rating optional)");
  return ci;
}

}  // namespace

SourceFormat parse_source_format(const std::string& name) {
  if (name == "movielens-dat") return SourceFormat::MovieLensDat;
  if (name == "csv") return SourceFormat::Csv;
  if (name == "tsv") return SourceFormat::Tsv;
  throw ConfigError("unknown dataset format '" + name + "'");
}

ParseError::ParseError(const std::string& path, int line, const std::string& what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

EmptyAfterKCoreError::EmptyAfterKCoreError(int user_min, int item_min)
    : std::runtime_error("k-core filtering with user_min=" + std::to_string(user_min) +
                         ", item_min=" + std::to_string(item_min) + " removed every interaction") {}

SplitPreconditionError::SplitPreconditionError(const std::vector<std::string>& users)
    : std::runtime_error([&users] {
        std::string msg = "temporal split requires >= 4 interactions per user; violated by: ";
        for (size_t i = 0; i < users.size() && i < 12; ++i) {
          if (i) msg += ", ";
          msg += users[i];
        }
        if (users.size() > 12) msg += ", ... (" + std::to_string(users.size()) + " total)";
        return msg;
      }()),
      users_(users) {}

std::vector<Interaction> load_interactions(const std::string& path, SourceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file: " + path);

  std::vector<Interaction> rows;
  std::string raw;
  int lineno = 0;

  if (format == SourceFormat::MovieLensDat) {
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip_cr(raw);
      if (line.empty()) continue;
      auto f = split_sep(line, "::");
      if (f.size() != 4) throw ParseError(path, lineno, "expected user::item::rating::timestamp");
      Interaction r;
      r.user = trim_ws(f[0]);
      r.item = trim_ws(f[1]);
      r.rating = parse_rating(f[2], path, lineno);
      r.timestamp = parse_i64(f[3], path, lineno);
      if (r.timestamp < 0) throw ParseError(path, lineno, "negative timestamp");
      rows.push_back(std::move(r));
    }
  } else {
    const char delim = format == SourceFormat::Csv ? ',' : '\t';
    std::string header_line;
    if (!std::getline(in, header_line)) return {};
    ++lineno;
    ColumnIndex ci = header_columns(split_delim_quoted(strip_cr(header_line), delim), path);
    const int max_col = std::max({ci.user, ci.item, ci.rating, ci.timestamp});
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip_cr(raw);
      if (line.empty()) continue;
      auto f = split_delim_quoted(line, delim);
      if (static_cast<int>(f.size()) <= max_col)
        throw ParseError(path, lineno, "row has fewer columns than the header");
      Interaction r;
      r.user = trim_ws(f[static_cast<size_t>(ci.user)]);
      r.item = trim_ws(f[static_cast<size_t>(ci.item)]);
      r.rating = ci.rating >= 0 ? parse_rating(f[static_cast<size_t>(ci.rating)], path, lineno) : 1;
      r.timestamp = parse_i64(f[static_cast<size_t>(ci.timestamp)], path, lineno);
      if (r.timestamp < 0) throw ParseError(path, lineno, "negative timestamp");
      if (r.user.empty() || r.item.empty()) throw ParseError(path, lineno, "empty user or item id");
      rows.push_back(std::move(r));
    }
  }
  return dedup_latest(std::move(rows));
}

TitleMap load_titles(const std::string& path, SourceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open title file: " + path);

  TitleMap titles;
  std::string raw;
  int lineno = 0;

  if (format == SourceFormat::MovieLensDat) {
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip_cr(raw);
      if (line.empty()) continue;
      auto f = split_sep(line, "::");
      if (f.size() < 2) throw ParseError(path, lineno, "expected item::title[::genres]");
      titles[trim_ws(f[0])] = trim_ws(latin1_to_utf8(f[1]));
    }
  } else {
    const char delim = format == SourceFormat::Csv ? ',' : '\t';
    std::string header_line;
    if (!std::getline(in, header_line)) return titles;
    ++lineno;
    auto header = split_delim_quoted(strip_cr(header_line), delim);
    int item_col = -1, title_col = -1;
    for (size_t i = 0; i < header.size(); ++i) {
      std::string h = trim_ws(header[i]);
      std::transform(h.begin(), h.end(), h.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (h == "item" || h == "item_id" || h == "itemid") item_col = static_cast<int>(i);
      else if (h == "title") title_col = static_cast<int>(i);
    }
    if (item_col < 0 || title_col < 0)
      throw ParseError(path, 1, "title file header must name item, title");
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip_cr(raw);
      if (line.empty()) continue;
      auto f = split_delim_quoted(line, delim);
      if (static_cast<int>(f.size()) <= std::max(item_col, title_col))
        throw ParseError(path, lineno, "row has fewer columns than the header");
      titles[trim_ws(f[static_cast<size_t>(item_col)])] =
          trim_ws(f[static_cast<size_t>(title_col)]);
    }
  }
  return titles;
}

DatasetStats dataset_stats(const std::vector<Interaction>& interactions, const TitleMap* titles) {
  std::set<std::string> users, items;
  for (const auto& r : interactions) {
    users.insert(r.user);
    items.insert(r.item);
  }
  DatasetStats s;
  s.interactions = static_cast<std::int64_t>(interactions.size());
  s.users = static_cast<int>(users.size());
  s.items = titles && !titles->empty() ? static_cast<int>(titles->size())
                                       : static_cast<int>(items.size());
  const double cells = static_cast<double>(s.users) * static_cast<double>(s.items);
  s.sparsity_pct = cells > 0 ? 100.0 * (1.0 - static_cast<double>(s.interactions) / cells) : 0.0;
  return s;
}

std::vector<Interaction> kcore_filter(std::vector<Interaction> interactions, int user_min,
                                      int item_min) {
  if (user_min < 1 || item_min < 1) throw ConfigError("k-core thresholds must be >= 1");
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, int> ucount, icount;
    for (const auto& r : interactions) {
      ++ucount[r.user];
      ++icount[r.item];
    }
    std::vector<Interaction> kept;
    kept.reserve(interactions.size());
    for (auto& r : interactions) {
      if (ucount[r.user] >= user_min && icount[r.item] >= item_min) {
        kept.push_back(std::move(r));
      } else {
        changed = true;
      }
    }
    interactions = std::move(kept);
  }
  if (interactions.empty()) throw EmptyAfterKCoreError(user_min, item_min);
  return interactions;
}

std::vector<ItemId> SplitDataset::prompt_window(UserId u) const {
  const auto& h = users[static_cast<size_t>(u)].history;
  std::vector<ItemId> w(h.end() - window_len, h.end());
  return w;
}

int SplitDataset::rating_of(UserId u, ItemId item) const {
  const auto& us = users[static_cast<size_t>(u)];
  for (size_t i = 0; i < us.history.size(); ++i)
    if (us.history[i] == item) return us.history_ratings[i];
  return 0;
}

std::vector<int> SplitDataset::popularity() const {
  std::vector<int> counts(static_cast<size_t>(num_items()), 0);
  for (const auto& us : users)
    for (ItemId i : us.history) ++counts[static_cast<size_t>(i)];
  return counts;
}

SplitDataset temporal_split(const std::vector<Interaction>& interactions, const TitleMap* titles) {
  // Dense ids in natural external-id order.
  std::set<std::string> user_ids, item_ids;
  for (const auto& r : interactions) {
    user_ids.insert(r.user);
    item_ids.insert(r.item);
  }
  SplitDataset ds;
  ds.catalog.users.assign(user_ids.begin(), user_ids.end());
  ds.catalog.items.assign(item_ids.begin(), item_ids.end());
  std::sort(ds.catalog.users.begin(), ds.catalog.users.end(), natural_id_less);
  std::sort(ds.catalog.items.begin(), ds.catalog.items.end(), natural_id_less);
  ds.catalog.titles.resize(ds.catalog.items.size());
  if (titles) {
    for (size_t i = 0; i < ds.catalog.items.size(); ++i) {
      auto it = titles->find(ds.catalog.items[i]);
      if (it != titles->end()) ds.catalog.titles[i] = it->second;
    }
  }

  std::unordered_map<std::string, UserId> umap;
  std::unordered_map<std::string, ItemId> imap;
  for (size_t i = 0; i < ds.catalog.users.size(); ++i) umap[ds.catalog.users[i]] = static_cast<UserId>(i);
  for (size_t i = 0; i < ds.catalog.items.size(); ++i) imap[ds.catalog.items[i]] = static_cast<ItemId>(i);

  struct Event {
    std::int64_t ts;
    ItemId item;
    int rating;
  };
  std::vector<std::vector<Event>> per_user(ds.catalog.users.size());
  for (const auto& r : interactions)
    per_user[static_cast<size_t>(umap[r.user])].push_back(
        {r.timestamp, imap[r.item], r.rating});

  std::vector<std::string> violators;
  for (size_t u = 0; u < per_user.size(); ++u)
    if (per_user[u].size() < 4) violators.push_back(ds.catalog.users[u]);
  if (!violators.empty()) throw SplitPreconditionError(violators);

  ds.users.resize(per_user.size());
  int window_len = -1;
  for (size_t u = 0; u < per_user.size(); ++u) {
    auto& ev = per_user[u];
    // Temporal order; timestamp ties break by external item id ascending,
    // which dense ids preserve.
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) {
      if (a.ts != b.ts) return a.ts < b.ts;
      return a.item < b.item;
    });
    UserSplit& us = ds.users[u];
    us.test_item = ev[ev.size() - 1].item;
    us.val_item = ev[ev.size() - 2].item;
    us.val2_item = ev[ev.size() - 3].item;
    for (size_t i = 0; i + 3 < ev.size(); ++i) {
      us.history.push_back(ev[i].item);
      us.history_ratings.push_back(ev[i].rating);
    }
    const int hlen = static_cast<int>(us.history.size());
    if (window_len < 0 || hlen < window_len) window_len = hlen;
  }
  ds.window_len = window_len;
  return ds;
}

std::vector<UserId> stratified_sample(const SplitDataset& ds, int n, std::uint64_t seed) {
  if (n <= 0) throw ConfigError("sample size must be positive");
  const int total = ds.num_users();
  if (n > total) throw ConfigError("sample size exceeds user count");

  // Quartile strata over training-history length: sort by (length, user id)
  // and cut into four contiguous blocks.
  std::vector<UserId> order(static_cast<size_t>(total));
  for (int u = 0; u < total; ++u) order[static_cast<size_t>(u)] = u;
  std::sort(order.begin(), order.end(), [&ds](UserId a, UserId b) {
    size_t la = ds.users[static_cast<size_t>(a)].history.size();
    size_t lb = ds.users[static_cast<size_t>(b)].history.size();
    if (la != lb) return la < lb;
    return a < b;
  });

  std::vector<std::vector<UserId>> strata(4);
  for (int s = 0; s < 4; ++s) {
    const int lo = static_cast<int>(static_cast<std::int64_t>(s) * total / 4);
    const int hi = static_cast<int>(static_cast<std::int64_t>(s + 1) * total / 4);
    strata[static_cast<size_t>(s)].assign(order.begin() + lo, order.begin() + hi);
  }

  // Largest-remainder proportional allocation of n across strata.
  std::vector<int> alloc(4, 0);
  std::vector<std::pair<double, int>> rem;
  int assigned = 0;
  for (int s = 0; s < 4; ++s) {
    const double exact =
        static_cast<double>(n) * static_cast<double>(strata[static_cast<size_t>(s)].size()) / total;
    alloc[static_cast<size_t>(s)] = static_cast<int>(exact);
    assigned += alloc[static_cast<size_t>(s)];
    rem.push_back({exact - static_cast<double>(alloc[static_cast<size_t>(s)]), s});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; assigned < n; ++i) {
    int s = rem[static_cast<size_t>(i % 4)].second;
    if (alloc[static_cast<size_t>(s)] < static_cast<int>(strata[static_cast<size_t>(s)].size())) {
      ++alloc[static_cast<size_t>(s)];
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<UserId> sample;
  sample.reserve(static_cast<size_t>(n));
  for (int s = 0; s < 4; ++s) {
    auto& pool = strata[static_cast<size_t>(s)];
    const int take = alloc[static_cast<size_t>(s)];
    // Partial Fisher-Yates.
    for (int i = 0; i < take; ++i) {
      const size_t j =
          static_cast<size_t>(i) + static_cast<size_t>(rng.next_below(pool.size() - static_cast<size_t>(i)));
      std::swap(pool[static_cast<size_t>(i)], pool[j]);
      sample.push_back(pool[static_cast<size_t>(i)]);
    }
  }
  std::sort(sample.begin(), sample.end());
  return sample;
}

void save_split(const SplitDataset& ds, const std::vector<UserId>& sample,
                const std::string& dir) {
  {
    std::ofstream mf(dir + "/split_manifest.jsonl", std::ios::binary);
    if (!mf) throw ConfigError("cannot write split manifest in " + dir);
    json header = {{"window_len", ds.window_len},
                   {"n_users", ds.num_users()},
                   {"n_items", ds.num_items()}};
    json sample_ids = json::array();
    for (UserId u : sample) sample_ids.push_back(ds.catalog.users[static_cast<size_t>(u)]);
    header["sample"] = sample_ids;
    mf << header.dump() << "\n";
    for (int u = 0; u < ds.num_users(); ++u) {
      const UserSplit& us = ds.users[static_cast<size_t>(u)];
      json rec;
      rec["user"] = ds.catalog.users[static_cast<size_t>(u)];
      rec["test"] = ds.catalog.items[static_cast<size_t>(us.test_item)];
      rec["val"] = ds.catalog.items[static_cast<size_t>(us.val_item)];
      rec["val2"] = ds.catalog.items[static_cast<size_t>(us.val2_item)];
      json window = json::array(), ratings = json::array();
      const int start = static_cast<int>(us.history.size()) - ds.window_len;
      for (size_t i = static_cast<size_t>(start); i < us.history.size(); ++i) {
        window.push_back(ds.catalog.items[static_cast<size_t>(us.history[i])]);
        ratings.push_back(us.history_ratings[i]);
      }
      rec["window"] = window;
      rec["window_ratings"] = ratings;
      mf << rec.dump() << "\n";
    }
  }
  {
    // Coordinate list, rows kept in per-user temporal order so the ordered
    // history survives a round-trip.
    std::ofstream tm(dir + "/train_matrix.txt", std::ios::binary);
    if (!tm) throw ConfigError("cannot write train matrix in " + dir);
    for (int u = 0; u < ds.num_users(); ++u)
      for (ItemId i : ds.users[static_cast<size_t>(u)].history)
        tm << ds.catalog.users[static_cast<size_t>(u)] << " "
           << ds.catalog.items[static_cast<size_t>(i)] << "\n";
  }
  {
    std::ofstream cf(dir + "/catalog.jsonl", std::ios::binary);
    if (!cf) throw ConfigError("cannot write catalog in " + dir);
    for (int i = 0; i < ds.num_items(); ++i) {
      json rec = {{"item", ds.catalog.items[static_cast<size_t>(i)]},
                  {"title", ds.catalog.titles[static_cast<size_t>(i)]}};
      cf << rec.dump() << "\n";
    }
  }
}

SplitDataset load_split(const std::string& dir, std::vector<UserId>* sample) {
  std::ifstream mf(dir + "/split_manifest.jsonl", std::ios::binary);
  if (!mf) throw DependencyError("missing split manifest in " + dir);
  std::string line;
  if (!std::getline(mf, line)) throw DependencyError("empty split manifest in " + dir);
  json header = json::parse(line);

  SplitDataset ds;
  ds.window_len = header.at("window_len").get<int>();

  std::ifstream cf(dir + "/catalog.jsonl", std::ios::binary);
  if (!cf) throw DependencyError("missing catalog in " + dir);
  std::unordered_map<std::string, ItemId> imap;
  while (std::getline(cf, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    imap[rec.at("item").get<std::string>()] = static_cast<ItemId>(ds.catalog.items.size());
    ds.catalog.items.push_back(rec.at("item").get<std::string>());
    ds.catalog.titles.push_back(rec.at("title").get<std::string>());
  }

  struct Holdouts {
    ItemId test, val, val2;
    std::vector<ItemId> window;
    std::vector<int> window_ratings;
  };
  std::vector<Holdouts> holdouts;
  std::unordered_map<std::string, UserId> umap;
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    umap[rec.at("user").get<std::string>()] = static_cast<UserId>(ds.catalog.users.size());
    ds.catalog.users.push_back(rec.at("user").get<std::string>());
    Holdouts h;
    h.test = imap.at(rec.at("test").get<std::string>());
    h.val = imap.at(rec.at("val").get<std::string>());
    h.val2 = imap.at(rec.at("val2").get<std::string>());
    for (const auto& w : rec.at("window")) h.window.push_back(imap.at(w.get<std::string>()));
    for (const auto& r : rec.at("window_ratings")) h.window_ratings.push_back(r.get<int>());
    holdouts.push_back(std::move(h));
  }

  ds.users.resize(holdouts.size());
  std::ifstream tm(dir + "/train_matrix.txt", std::ios::binary);
  if (!tm) throw DependencyError("missing train matrix in " + dir);
  std::string user_id, item_id;
  while (tm >> user_id >> item_id) {
    UserId u = umap.at(user_id);
    ds.users[static_cast<size_t>(u)].history.push_back(imap.at(item_id));
    ds.users[static_cast<size_t>(u)].history_ratings.push_back(0);
  }
  // Re-attach the persisted window ratings to the history suffix.
  for (size_t u = 0; u < holdouts.size(); ++u) {
    UserSplit& us = ds.users[u];
    us.test_item = holdouts[u].test;
    us.val_item = holdouts[u].val;
    us.val2_item = holdouts[u].val2;
    const size_t start = us.history.size() - holdouts[u].window.size();
    for (size_t i = 0; i < holdouts[u].window.size(); ++i) {
      if (us.history[start + i] != holdouts[u].window[i])
        throw DependencyError("split artifacts disagree: window mismatch for user " +
                              ds.catalog.users[u]);
      us.history_ratings[start + i] = holdouts[u].window_ratings[i];
    }
  }

  if (sample) {
    sample->clear();
    for (const auto& s : header.at("sample")) sample->push_back(umap.at(s.get<std::string>()));
    std::sort(sample->begin(), sample->end());
  }
  return ds;
}

}  // namespace recdenoise
