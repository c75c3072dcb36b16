#include "recdenoise/scorer.hpp"

#include <algorithm>
#include <stdexcept>

namespace recdenoise {

namespace {
std::vector<char> make_bitmap(int n, const std::vector<ItemId>& items) {
  std::vector<char> bm(static_cast<size_t>(n), 0);
  for (ItemId i : items) bm.at(static_cast<size_t>(i)) = 1;
  return bm;
}
}  // namespace

int rank_from_scores(const Eigen::VectorXd& scores, ItemId candidate,
                     const std::vector<ItemId>& mask) {
  const int n = static_cast<int>(scores.size());
  auto masked = make_bitmap(n, mask);
  if (masked[static_cast<size_t>(candidate)])
    throw std::invalid_argument("rank candidate is masked");
  const double sc = scores[candidate];
  int rank = 1;
  for (int i = 0; i < n; ++i) {
    if (masked[static_cast<size_t>(i)] || i == candidate) continue;
    if (scores[i] > sc || (scores[i] == sc && i < candidate)) ++rank;
  }
  return rank;
}

int rank_of(const Scorer& scorer, const std::vector<ItemId>& profile, ItemId candidate,
            const std::vector<ItemId>& mask) {
  return rank_from_scores(scorer.scores(profile), candidate, mask);
}

int rescore_with_removals(const Scorer& scorer, const std::vector<ItemId>& profile,
                          const std::vector<ItemId>& removals, ItemId candidate,
                          const std::vector<ItemId>& mask) {
  auto support = make_bitmap(scorer.num_items(), profile);
  for (ItemId r : removals) {
    if (!support.at(static_cast<size_t>(r)))
      throw std::invalid_argument("removal " + std::to_string(r) +
                                  " is not in the profile support");
    support[static_cast<size_t>(r)] = 0;
  }
  std::vector<ItemId> edited;
  edited.reserve(profile.size());
  for (ItemId i : profile)
    if (support[static_cast<size_t>(i)]) edited.push_back(i);

  std::vector<ItemId> edited_mask;
  edited_mask.reserve(mask.size());
  auto removed = make_bitmap(scorer.num_items(), removals);
  for (ItemId i : mask)
    if (!removed[static_cast<size_t>(i)]) edited_mask.push_back(i);

  return rank_from_scores(scorer.scores(edited), candidate, edited_mask);
}

std::vector<ItemId> top_unmasked_items(const Scorer& scorer, const std::vector<ItemId>& profile,
                                       const std::vector<ItemId>& mask, int k) {
  const Eigen::VectorXd s = scorer.scores(profile);
  auto masked = make_bitmap(scorer.num_items(), mask);
  std::vector<ItemId> order;
  order.reserve(static_cast<size_t>(scorer.num_items()));
  for (int i = 0; i < scorer.num_items(); ++i)
    if (!masked[static_cast<size_t>(i)]) order.push_back(i);
  const size_t take = std::min(static_cast<size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&s](ItemId a, ItemId b) {
                      if (s[a] != s[b]) return s[a] > s[b];
                      return a < b;
                    });
  order.resize(take);
  return order;
}

}  // namespace recdenoise
