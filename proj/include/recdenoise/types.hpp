#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace recdenoise {

using UserId = int;  // dense index into Catalog::users
using ItemId = int;  // dense index into Catalog::items

// One raw feedback event. Ratings are kept only for the rating-bucket
// breakdown; the scorer itself only ever sees the binarized matrix.
struct Interaction {
  std::string user;
  std::string item;
  int rating = 1;  // in {1..5}; unary feedback maps to 1
  std::int64_t timestamp = 0;
};

// Dense-index lookup for retained users and items. Indices are contiguous
// 0..n-1 and stable for a given input (natural id order).
struct Catalog {
  std::vector<std::string> users;   // dense user -> external id
  std::vector<std::string> items;   // dense item -> external id
  std::vector<std::string> titles;  // dense item -> display title

  int num_users() const { return static_cast<int>(users.size()); }
  int num_items() const { return static_cast<int>(items.size()); }

  const std::string& title(ItemId i) const { return titles.at(static_cast<size_t>(i)); }
};

// Orders external ids numerically when both sides parse as unsigned
// integers, lexicographically otherwise. Keeps MovieLens-style numeric ids
// in the order people expect while staying total over arbitrary strings.
bool natural_id_less(const std::string& a, const std::string& b);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace recdenoise
