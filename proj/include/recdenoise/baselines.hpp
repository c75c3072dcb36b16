#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "recdenoise/denoiser.hpp"

namespace recdenoise {

// Uniform choice of k distinct window items; randomness derives from
// (seed, user, run) so results are independent of execution order.
class RandomDenoiser : public Denoiser {
 public:
  explicit RandomDenoiser(std::uint64_t seed) : seed_(seed) {}
  std::string id() const override { return "random"; }
  bool deterministic() const override { return false; }
  RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) override;

 private:
  std::uint64_t seed_;
};

// Removes the k most popular window items (train-matrix counts, ties by
// lower item index).
class TopPopDenoiser : public Denoiser {
 public:
  explicit TopPopDenoiser(std::vector<int> popularity) : popularity_(std::move(popularity)) {}
  std::string id() const override { return "top-pop"; }
  RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) override;

 private:
  std::vector<int> popularity_;
};

// Removes the k window items with lowest cosine similarity to the user
// embedding (mean item embedding over the full training profile).
class SemanticDenoiser : public Denoiser {
 public:
  explicit SemanticDenoiser(Eigen::MatrixXd embeddings) : embeddings_(std::move(embeddings)) {}
  std::string id() const override { return "semantic"; }
  RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) override;

 private:
  Eigen::MatrixXd embeddings_;
};

// Exhaustive sweep minimizing the validation candidate's rank: singles for
// k=1, all unordered window pairs for k=2. Proposes the argmin even when no
// removal improves; the gate rejects it then.
class UpperBoundDenoiser : public Denoiser {
 public:
  explicit UpperBoundDenoiser(const Scorer& scorer) : scorer_(scorer) {}
  std::string id() const override { return "upper-bound"; }
  RemovalProposal propose(const UserContext& ctx, int k, std::uint64_t run) override;

 private:
  const Scorer& scorer_;
};

// Shared proposal bookkeeping for baselines (fills titles, source, run).
RemovalProposal make_baseline_proposal(const UserContext& ctx, std::vector<ItemId> removals,
                                       const std::string& source, std::uint64_t run);

}  // namespace recdenoise
