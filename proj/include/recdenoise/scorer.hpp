#pragma once

#include <vector>

#include <Eigen/Dense>

#include "recdenoise/types.hpp"

namespace recdenoise {

// Minimal contract the denoising pipeline needs from a trained
// collaborative-filtering model. Implementations must be pure: scoring never
// mutates the model, so concurrent calls are safe.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual int num_items() const = 0;

  // Per-item scores for the binarized profile (list of dense item ids).
  virtual Eigen::VectorXd scores(const std::vector<ItemId>& profile) const = 0;

  // One embedding row per item, used by the semantic baseline.
  virtual Eigen::MatrixXd item_embeddings() const = 0;
};

// 1-based rank of `candidate` among unmasked items. Ties break by item index
// ascending: equal-scored items with a lower index than the candidate count
// as ranked above it.
int rank_from_scores(const Eigen::VectorXd& scores, ItemId candidate,
                     const std::vector<ItemId>& mask);

// Rank of `candidate` for the given profile; `mask` is the user's current
// training items and must not contain the candidate.
int rank_of(const Scorer& scorer, const std::vector<ItemId>& profile, ItemId candidate,
            const std::vector<ItemId>& mask);

// Re-rank after flipping `removals` out of the profile. Removed items leave
// the mask and compete again. Removals must be in the profile's support.
// No model update happens; this is a plain forward pass on the edited row.
int rescore_with_removals(const Scorer& scorer, const std::vector<ItemId>& profile,
                          const std::vector<ItemId>& removals, ItemId candidate,
                          const std::vector<ItemId>& mask);

// Top-k unmasked items by score (ties by index ascending), best first.
std::vector<ItemId> top_unmasked_items(const Scorer& scorer, const std::vector<ItemId>& profile,
                                       const std::vector<ItemId>& mask, int k);

// Toy scorer: score = W * indicator(profile). Denoisers only depend on the
// Scorer contract, so tests can rig exact rank behavior with it.
class LinearScorer : public Scorer {
 public:
  explicit LinearScorer(Eigen::MatrixXd weights) : w_(std::move(weights)) {}

  int num_items() const override { return static_cast<int>(w_.rows()); }
  Eigen::VectorXd scores(const std::vector<ItemId>& profile) const override {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(w_.cols());
    for (ItemId i : profile) x[i] = 1.0;
    return w_ * x;
  }
  Eigen::MatrixXd item_embeddings() const override { return w_; }

 private:
  Eigen::MatrixXd w_;  // n_items x n_items
};

}  // namespace recdenoise
