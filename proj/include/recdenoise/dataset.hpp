#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "recdenoise/types.hpp"

namespace recdenoise {

enum class SourceFormat { MovieLensDat, Csv, Tsv };

SourceFormat parse_source_format(const std::string& name);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

class EmptyAfterKCoreError : public std::runtime_error {
 public:
  EmptyAfterKCoreError(int user_min, int item_min);
};

class SplitPreconditionError : public std::runtime_error {
 public:
  explicit SplitPreconditionError(const std::vector<std::string>& users);
  const std::vector<std::string>& users() const { return users_; }

 private:
  std::vector<std::string> users_;
};

using TitleMap = std::map<std::string, std::string>;

// Reads raw feedback rows. movielens-dat expects user::item::rating::timestamp;
// csv/tsv expect a header naming user,item,rating,timestamp (any column order).
// Duplicate (user,item) pairs collapse to the latest timestamp.
std::vector<Interaction> load_interactions(const std::string& path, SourceFormat format);

// Title sidecar: movielens-dat expects item::title[::genres] (latin-1 input is
// transcoded to UTF-8); csv/tsv expect a header naming item,title.
TitleMap load_titles(const std::string& path, SourceFormat format);

struct DatasetStats {
  std::int64_t interactions = 0;
  int users = 0;
  int items = 0;
  double sparsity_pct = 0.0;  // 100 * (1 - interactions / (users * items))
};

// Items counted from the title catalog when one is supplied, matching how
// full-catalog statistics are usually reported; otherwise from interactions.
DatasetStats dataset_stats(const std::vector<Interaction>& interactions,
                           const TitleMap* titles = nullptr);

// Iteratively removes users with < user_min and items with < item_min
// interactions until a fixpoint. The result is the unique maximal subset
// satisfying both bounds, independent of peeling order.
std::vector<Interaction> kcore_filter(std::vector<Interaction> interactions, int user_min,
                                      int item_min);

struct UserSplit {
  std::vector<ItemId> history;          // training items, ordered by (timestamp, id) asc
  std::vector<int> history_ratings;     // aligned with history; 0 when unknown
  ItemId test_item = -1;                // most recent
  ItemId val_item = -1;                 // second most recent (prompt candidate)
  ItemId val2_item = -1;                // third most recent (exemplar mining)
};

struct SplitDataset {
  Catalog catalog;
  std::vector<UserSplit> users;  // indexed by dense UserId
  int window_len = 0;            // min training-history length over users

  int num_users() const { return static_cast<int>(users.size()); }
  int num_items() const { return catalog.num_items(); }

  // The window_len most recent training interactions, oldest -> newest.
  std::vector<ItemId> prompt_window(UserId u) const;

  // Rating attached to a training interaction, 0 if not recorded.
  int rating_of(UserId u, ItemId item) const;

  // Train interaction count per item.
  std::vector<int> popularity() const;
};

// Leave-one-out decomposition: per user the three most recent interactions
// become test / validation / second-validation, the rest the training row.
// Every user must have >= 4 interactions; violators are reported by id.
SplitDataset temporal_split(const std::vector<Interaction>& interactions,
                            const TitleMap* titles = nullptr);

// Samples n users, stratified into quartiles of training-history length with
// largest-remainder allocation. Deterministic for a fixed seed; result sorted.
std::vector<UserId> stratified_sample(const SplitDataset& ds, int n, std::uint64_t seed);

// Split artifacts: JSON-lines manifest (holdouts + window per user) plus a
// "user item" coordinate-list train matrix, rows in temporal order per user.
void save_split(const SplitDataset& ds, const std::vector<UserId>& sample,
                const std::string& dir);
SplitDataset load_split(const std::string& dir, std::vector<UserId>* sample = nullptr);

}  // namespace recdenoise
