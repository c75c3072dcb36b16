#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "recdenoise/dataset.hpp"
#include "recdenoise/rng.hpp"
#include "test_util.hpp"

using namespace recdenoise;
using testutil::TempDir;
using testutil::write_file;

namespace {

// Brute-force k-core oracle: repeatedly delete ONE violating user or item at
// a time (order driven by the seed) until none is left.
std::vector<Interaction> kcore_oracle(std::vector<Interaction> rows, int user_min, int item_min,
                                      std::uint64_t seed) {
  Rng rng(seed);
  while (true) {
    std::map<std::string, int> ucount, icount;
    for (const auto& r : rows) {
      ++ucount[r.user];
      ++icount[r.item];
    }
    std::vector<std::pair<bool, std::string>> violators;  // (is_user, id)
    for (const auto& [u, c] : ucount)
      if (c < user_min) violators.push_back({true, u});
    for (const auto& [i, c] : icount)
      if (c < item_min) violators.push_back({false, i});
    if (violators.empty()) return rows;
    const auto& victim = violators[rng.next_below(violators.size())];
    std::vector<Interaction> kept;
    for (auto& r : rows)
      if ((victim.first ? r.user : r.item) != victim.second) kept.push_back(std::move(r));
    rows = std::move(kept);
  }
}

std::multiset<std::pair<std::string, std::string>> edge_set(const std::vector<Interaction>& rows) {
  std::multiset<std::pair<std::string, std::string>> e;
  for (const auto& r : rows) e.insert({r.user, r.item});
  return e;
}

std::vector<Interaction> random_bipartite(std::uint64_t seed) {
  Rng rng(seed);
  const int n_users = 3 + static_cast<int>(rng.next_below(6));
  const int n_items = 3 + static_cast<int>(rng.next_below(6));
  std::vector<Interaction> rows;
  for (int u = 0; u < n_users; ++u)
    for (int i = 0; i < n_items; ++i)
      if (rng.next_bernoulli(0.35))
        rows.push_back({std::to_string(u), std::to_string(i), 1,
                        static_cast<std::int64_t>(rows.size())});
  return rows;
}

}  // namespace

TEST_CASE("csv loading with dedup") {
  TempDir dir;
  write_file(dir.file("data.csv"),
             "user,item,rating,timestamp\n"
             "1,10,5,100\n"
             "1,11,4,200\n"
             "1,10,2,300\n"  // duplicate pair, later timestamp wins
             "2,10,3,150\n"
             "2,12,1,50\n");
  auto rows = load_interactions(dir.file("data.csv"), SourceFormat::Csv);
  CHECK(rows.size() == 4);
  int dup_rating = 0;
  for (const auto& r : rows)
    if (r.user == "1" && r.item == "10") dup_rating = r.rating;
  CHECK(dup_rating == 2);  // the t=300 row

  // Brute-force dedup oracle over the raw rows.
  std::map<std::pair<std::string, std::string>, std::int64_t> latest;
  latest[{"1", "10"}] = 300;
  latest[{"1", "11"}] = 200;
  latest[{"2", "10"}] = 150;
  latest[{"2", "12"}] = 50;
  for (const auto& r : rows) CHECK(latest.at({r.user, r.item}) == r.timestamp);
}

TEST_CASE("empty csv yields empty list") {
  TempDir dir;
  write_file(dir.file("empty.csv"), "user,item,rating,timestamp\n");
  CHECK(load_interactions(dir.file("empty.csv"), SourceFormat::Csv).empty());
  write_file(dir.file("empty2.csv"), "");
  CHECK(load_interactions(dir.file("empty2.csv"), SourceFormat::Csv).empty());
}

TEST_CASE("malformed rows carry line numbers") {
  TempDir dir;
  write_file(dir.file("bad.csv"),
             "user,item,rating,timestamp\n"
             "1,10,5,100\n"
             "2,11,x,200\n");
  try {
    load_interactions(dir.file("bad.csv"), SourceFormat::Csv);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("movielens dat format and latin-1 titles") {
  TempDir dir;
  write_file(dir.file("ratings.dat"),
             "1::10::5::100\n"
             "1::11::4::90\n");
  auto rows = load_interactions(dir.file("ratings.dat"), SourceFormat::MovieLensDat);
  CHECK(rows.size() == 2);

  write_file(dir.file("movies.dat"), std::string("10::Le Fabuleux Destin d'Am\xe9lie::Comedy\n"));
  auto titles = load_titles(dir.file("movies.dat"), SourceFormat::MovieLensDat);
  // \xe9 transcoded to UTF-8 two-byte sequence
  CHECK(titles.at("10") == "Le Fabuleux Destin d'Am\xc3\xa9lie");
}

TEST_CASE("quoted csv titles keep commas") {
  TempDir dir;
  write_file(dir.file("titles.csv"),
             "item,title\n"
             "10,\"Godfather, The (1972)\"\n");
  auto titles = load_titles(dir.file("titles.csv"), SourceFormat::Csv);
  CHECK(titles.at("10") == "Godfather, The (1972)");
}

TEST_CASE("dataset stats count catalog items when titles exist") {
  std::vector<Interaction> rows = {{"1", "10", 1, 1}, {"2", "10", 1, 2}};
  TitleMap titles = {{"10", "A"}, {"11", "B"}, {"12", "C"}};
  const DatasetStats with = dataset_stats(rows, &titles);
  CHECK(with.items == 3);
  CHECK(with.users == 2);
  const DatasetStats without = dataset_stats(rows, nullptr);
  CHECK(without.items == 1);
}

TEST_CASE("kcore no-op thresholds") {
  std::vector<Interaction> rows = {{"1", "a", 1, 1}, {"1", "b", 1, 2}, {"2", "a", 1, 3}};
  auto filtered = kcore_filter(rows, 1, 1);
  CHECK(edge_set(filtered) == edge_set(rows));
}

TEST_CASE("kcore removes the weakly connected corner") {
  // u3 has one interaction, i3 touched only by u3; (2,2) peels both and the
  // 2x2 clique survives.
  std::vector<Interaction> rows = {
      {"u1", "i1", 1, 1}, {"u1", "i2", 1, 2}, {"u2", "i1", 1, 3},
      {"u2", "i2", 1, 4}, {"u3", "i3", 1, 5},
  };
  auto filtered = kcore_filter(rows, 2, 2);
  CHECK(filtered.size() == 4);
  for (const auto& r : filtered) {
    CHECK(r.user != "u3");
    CHECK(r.item != "i3");
  }
}

TEST_CASE("kcore equals one-at-a-time peeling on random graphs, any order") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto rows = random_bipartite(seed);
    const int user_min = 1 + static_cast<int>(seed % 3);
    const int item_min = 1 + static_cast<int>((seed / 3) % 3);
    std::vector<Interaction> ours;
    bool empty = false;
    try {
      ours = kcore_filter(rows, user_min, item_min);
    } catch (const EmptyAfterKCoreError&) {
      empty = true;
    }
    // Two different removal orders must agree with the fixpoint.
    auto oracle_a = kcore_oracle(rows, user_min, item_min, seed * 31 + 1);
    auto oracle_b = kcore_oracle(rows, user_min, item_min, seed * 97 + 7);
    CHECK(edge_set(oracle_a) == edge_set(oracle_b));
    if (empty) {
      CHECK(oracle_a.empty());
    } else {
      CHECK(edge_set(ours) == edge_set(oracle_a));
    }
  }
}

TEST_CASE("kcore empty fixpoint is an explicit error") {
  std::vector<Interaction> rows = {{"1", "a", 1, 1}};
  CHECK_THROWS_AS(kcore_filter(rows, 5, 5), EmptyAfterKCoreError);
}

namespace {
std::vector<Interaction> five_item_user(const std::string& user, std::int64_t base) {
  // items a..e at increasing timestamps
  std::vector<Interaction> rows;
  const char* items[] = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 5; ++i)
    rows.push_back({user, items[i], 1 + i % 5, base + i});
  return rows;
}
}  // namespace

TEST_CASE("temporal split assigns the three most recent holdouts") {
  auto rows = five_item_user("u", 10);
  SplitDataset ds = temporal_split(rows);
  REQUIRE(ds.num_users() == 1);
  const UserSplit& us = ds.users[0];
  CHECK(ds.catalog.items[static_cast<size_t>(us.test_item)] == "e");
  CHECK(ds.catalog.items[static_cast<size_t>(us.val_item)] == "d");
  CHECK(ds.catalog.items[static_cast<size_t>(us.val2_item)] == "c");
  REQUIRE(us.history.size() == 2);
  CHECK(ds.catalog.items[static_cast<size_t>(us.history[0])] == "a");
  CHECK(ds.catalog.items[static_cast<size_t>(us.history[1])] == "b");
  CHECK(ds.window_len == 2);
}

TEST_CASE("window length is the minimum training history") {
  std::vector<Interaction> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({"u1", "i" + std::to_string(i), 1, i});
  for (int i = 0; i < 8; ++i) rows.push_back({"u2", "j" + std::to_string(i), 1, i});
  SplitDataset ds = temporal_split(rows);
  CHECK(ds.window_len == 5);  // u2: 8 - 3 holdouts
}

TEST_CASE("timestamp ties break by external item id ascending") {
  std::vector<Interaction> rows = {
      {"u", "1", 1, 10}, {"u", "2", 1, 20}, {"u", "3", 1, 30},
      {"u", "9", 1, 40}, {"u", "4", 1, 40},  // tie on the two most recent
  };
  SplitDataset ds = temporal_split(rows);
  const UserSplit& us = ds.users[0];
  // larger id ("9") sorts later, so it becomes the test item
  CHECK(ds.catalog.items[static_cast<size_t>(us.test_item)] == "9");
  CHECK(ds.catalog.items[static_cast<size_t>(us.val_item)] == "4");
}

TEST_CASE("users with too few interactions are listed") {
  std::vector<Interaction> rows = five_item_user("ok", 0);
  rows.push_back({"tiny", "x", 1, 1});
  try {
    temporal_split(rows);
    FAIL("expected SplitPreconditionError");
  } catch (const SplitPreconditionError& e) {
    REQUIRE(e.users().size() == 1);
    CHECK(e.users()[0] == "tiny");
  }
}

TEST_CASE("split partitions each user's interactions exactly") {
  Rng rng(77);
  std::vector<Interaction> rows;
  for (int u = 0; u < 12; ++u) {
    const int n = 4 + static_cast<int>(rng.next_below(9));
    for (int i = 0; i < n; ++i)
      rows.push_back({"u" + std::to_string(u), "it" + std::to_string(rng.next_below(40)),
                      1, static_cast<std::int64_t>(i)});
  }
  rows = kcore_filter(rows, 4, 1);
  std::map<std::string, std::set<std::string>> expect;
  for (const auto& r : rows) expect[r.user].insert(r.item);
  // dedup happens at load; emulate here
  std::map<std::pair<std::string, std::string>, Interaction> dedup;
  for (const auto& r : rows) dedup[{r.user, r.item}] = r;
  std::vector<Interaction> clean;
  for (auto& [k, v] : dedup) clean.push_back(v);
  clean = kcore_filter(clean, 4, 1);
  expect.clear();
  for (const auto& r : clean) expect[r.user].insert(r.item);

  SplitDataset ds = temporal_split(clean);
  for (int u = 0; u < ds.num_users(); ++u) {
    const UserSplit& us = ds.users[static_cast<size_t>(u)];
    std::set<std::string> got;
    for (ItemId i : us.history) got.insert(ds.catalog.items[static_cast<size_t>(i)]);
    got.insert(ds.catalog.items[static_cast<size_t>(us.test_item)]);
    got.insert(ds.catalog.items[static_cast<size_t>(us.val_item)]);
    got.insert(ds.catalog.items[static_cast<size_t>(us.val2_item)]);
    CHECK(got == expect.at(ds.catalog.users[static_cast<size_t>(u)]));
    CHECK(got.size() == us.history.size() + 3);  // no duplication
  }
}

TEST_CASE("prompt windows are history suffixes of window length") {
  Rng rng(5);
  std::vector<Interaction> rows;
  for (int u = 0; u < 10; ++u) {
    const int n = 6 + static_cast<int>(rng.next_below(10));
    for (int i = 0; i < n; ++i)
      rows.push_back({"u" + std::to_string(u), "u" + std::to_string(u) + "i" + std::to_string(i),
                      1, static_cast<std::int64_t>(i)});
  }
  SplitDataset ds = temporal_split(rows);
  for (int u = 0; u < ds.num_users(); ++u) {
    const auto w = ds.prompt_window(u);
    CHECK(static_cast<int>(w.size()) == ds.window_len);
    const auto& h = ds.users[static_cast<size_t>(u)].history;
    CHECK(std::equal(w.begin(), w.end(), h.end() - ds.window_len));
    // windows never touch holdouts
    const UserSplit& us = ds.users[static_cast<size_t>(u)];
    for (ItemId i : w) {
      CHECK(i != us.test_item);
      CHECK(i != us.val_item);
      CHECK(i != us.val2_item);
    }
  }
}

namespace {
SplitDataset make_uniform_split(int n_users, int len) {
  std::vector<Interaction> rows;
  for (int u = 0; u < n_users; ++u)
    for (int i = 0; i < len; ++i)
      rows.push_back({std::to_string(u), "u" + std::to_string(u) + "i" + std::to_string(i), 1,
                      static_cast<std::int64_t>(i)});
  return temporal_split(rows);
}
}  // namespace

TEST_CASE("stratified sampling") {
  // 1000 users with lengths spread uniformly over 4..43
  std::vector<Interaction> rows;
  for (int u = 0; u < 1000; ++u) {
    const int n = 7 + (u % 40);
    for (int i = 0; i < n; ++i)
      rows.push_back({std::to_string(u), "u" + std::to_string(u) + "i" + std::to_string(i), 1,
                      static_cast<std::int64_t>(i)});
  }
  SplitDataset ds = temporal_split(rows);

  SUBCASE("full sample returns all users") {
    auto all = stratified_sample(ds, 1000, 3);
    CHECK(all.size() == 1000);
  }
  SUBCASE("proportional allocation with largest remainder") {
    auto sample = stratified_sample(ds, 100, 3);
    CHECK(sample.size() == 100);
    // exact-allocation oracle: 250 users per quartile -> 25 each
    std::map<int, int> per_quartile;
    for (UserId u : sample) {
      const int len = static_cast<int>(ds.users[static_cast<size_t>(u)].history.size());
      const int q = std::min(3, (len - 4) / 10);  // lengths 4..43 in blocks of 10
      ++per_quartile[q];
    }
    for (const auto& [q, n] : per_quartile) CHECK(std::abs(n - 25) <= 1);
  }
  SUBCASE("determinism") {
    CHECK(stratified_sample(ds, 137, 9) == stratified_sample(ds, 137, 9));
    CHECK(stratified_sample(ds, 137, 9) != stratified_sample(ds, 137, 10));
  }
  SUBCASE("bad sizes rejected") {
    CHECK_THROWS_AS(stratified_sample(ds, 0, 1), ConfigError);
    CHECK_THROWS_AS(stratified_sample(ds, 1001, 1), ConfigError);
  }
}

TEST_CASE("split round-trip is byte identical") {
  TempDir dir;
  Rng rng(123);
  std::vector<Interaction> rows;
  for (int u = 0; u < 15; ++u) {
    const int n = 5 + static_cast<int>(rng.next_below(6));
    for (int i = 0; i < n; ++i)
      rows.push_back({std::to_string(u), std::to_string(rng.next_below(30)), 1 + i % 5,
                      static_cast<std::int64_t>(i)});
  }
  std::map<std::pair<std::string, std::string>, Interaction> dedup;
  for (const auto& r : rows) dedup[{r.user, r.item}] = r;
  std::vector<Interaction> clean;
  for (auto& [k, v] : dedup) clean.push_back(v);
  clean = kcore_filter(clean, 4, 1);

  TitleMap titles;
  for (const auto& r : clean) titles[r.item] = "Title " + r.item;
  SplitDataset ds = temporal_split(clean, &titles);
  auto sample = stratified_sample(ds, ds.num_users() / 2, 4);

  std::filesystem::create_directories(dir.file("a"));
  std::filesystem::create_directories(dir.file("b"));
  save_split(ds, sample, dir.file("a"));

  std::vector<UserId> sample2;
  SplitDataset loaded = load_split(dir.file("a"), &sample2);
  CHECK(sample2 == sample);
  CHECK(loaded.window_len == ds.window_len);
  save_split(loaded, sample2, dir.file("b"));

  for (const char* f : {"split_manifest.jsonl", "train_matrix.txt", "catalog.jsonl"}) {
    CHECK(testutil::read_file(dir.file("a") + "/" + f) ==
          testutil::read_file(dir.file("b") + "/" + f));
  }
  // ratings survive for window items
  for (int u = 0; u < ds.num_users(); ++u)
    for (ItemId i : ds.prompt_window(u)) CHECK(loaded.rating_of(u, i) == ds.rating_of(u, i));
}

TEST_CASE("uniform length users collapse to a single stratum without error") {
  SplitDataset ds = make_uniform_split(40, 9);
  auto sample = stratified_sample(ds, 10, 2);
  CHECK(sample.size() == 10);
}
