#include "recdenoise/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "recdenoise/rng.hpp"

namespace recdenoise {

namespace {
void check_propose_args(const UserContext& ctx, int k) {
  if (k != 1 && k != 2) throw std::invalid_argument("removal count k must be 1 or 2");
  if (static_cast<int>(ctx.window.size()) < k)
    throw std::invalid_argument("window smaller than the removal count");
}
}  // namespace

RemovalProposal make_baseline_proposal(const UserContext& ctx, std::vector<ItemId> removals,
                                       const std::string& source, std::uint64_t run) {
  RemovalProposal p;
  p.removals = std::move(removals);
  for (ItemId r : p.removals) {
    for (size_t i = 0; i < ctx.window.size(); ++i) {
      if (ctx.window[i] == r) {
        p.raw_texts.push_back(ctx.window_titles[i]);
        break;
      }
    }
  }
  p.source = source;
  p.run = run;
  p.error = ProposalError::None;
  return p;
}

RemovalProposal RandomDenoiser::propose(const UserContext& ctx, int k, std::uint64_t run) {
  check_propose_args(ctx, k);
  Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(ctx.user), run));
  std::vector<ItemId> pool = ctx.window;
  std::vector<ItemId> picked;
  for (int i = 0; i < k; ++i) {
    const size_t j = static_cast<size_t>(i) +
                     static_cast<size_t>(rng.next_below(pool.size() - static_cast<size_t>(i)));
    std::swap(pool[static_cast<size_t>(i)], pool[j]);
    picked.push_back(pool[static_cast<size_t>(i)]);
  }
  return make_baseline_proposal(ctx, std::move(picked), id(), run);
}

RemovalProposal TopPopDenoiser::propose(const UserContext& ctx, int k, std::uint64_t run) {
  check_propose_args(ctx, k);
  std::vector<ItemId> order = ctx.window;
  std::sort(order.begin(), order.end(), [this](ItemId a, ItemId b) {
    const int ca = popularity_.at(static_cast<size_t>(a));
    const int cb = popularity_.at(static_cast<size_t>(b));
    if (ca != cb) return ca > cb;
    return a < b;
  });
  order.resize(static_cast<size_t>(k));
  return make_baseline_proposal(ctx, std::move(order), id(), run);
}

RemovalProposal SemanticDenoiser::propose(const UserContext& ctx, int k, std::uint64_t run) {
  check_propose_args(ctx, k);
  Eigen::VectorXd user_emb = Eigen::VectorXd::Zero(embeddings_.cols());
  for (ItemId i : ctx.history) user_emb += embeddings_.row(i);
  user_emb /= static_cast<double>(ctx.history.size());
  const double user_norm = user_emb.norm();

  auto cosine = [&](ItemId i) {
    const double inorm = embeddings_.row(i).norm();
    if (inorm == 0.0 || user_norm == 0.0) return 0.0;  // zero-norm similarity convention
    return embeddings_.row(i).dot(user_emb) / (inorm * user_norm);
  };

  std::vector<ItemId> order = ctx.window;
  std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
    const double ca = cosine(a), cb = cosine(b);
    if (ca != cb) return ca < cb;
    return a < b;
  });
  order.resize(static_cast<size_t>(k));
  return make_baseline_proposal(ctx, std::move(order), id(), run);
}

RemovalProposal UpperBoundDenoiser::propose(const UserContext& ctx, int k, std::uint64_t run) {
  check_propose_args(ctx, k);
  std::vector<ItemId> best;
  int best_rank = std::numeric_limits<int>::max();

  auto consider = [&](std::vector<ItemId> removals) {
    std::sort(removals.begin(), removals.end());
    const int rank =
        rescore_with_removals(scorer_, ctx.history, removals, ctx.candidate, ctx.history);
    if (rank < best_rank || (rank == best_rank && removals < best)) {
      best_rank = rank;
      best = std::move(removals);
    }
  };

  const size_t n = ctx.window.size();
  if (k == 1) {
    for (size_t i = 0; i < n; ++i) consider({ctx.window[i]});
  } else {
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) consider({ctx.window[i], ctx.window[j]});
  }
  return make_baseline_proposal(ctx, std::move(best), id(), run);
}

}  // namespace recdenoise
