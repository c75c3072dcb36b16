#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "recdenoise/dataset.hpp"
#include "recdenoise/metrics.hpp"
#include "recdenoise/multivae.hpp"
#include "recdenoise/rng.hpp"
#include "recdenoise/synth.hpp"
#include "test_util.hpp"

using namespace recdenoise;

namespace {

ModelParams tiny_random_params(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.hidden = 5;
  cfg.latent = 3;
  cfg.seed = seed;
  return multivae_init(7, cfg);
}

struct TinyBatch {
  Eigen::MatrixXd input;
  Eigen::MatrixXd target;
  Eigen::MatrixXd eps;
};

TinyBatch tiny_batch(int n_items, int latent, std::uint64_t seed) {
  Rng rng(seed);
  TinyBatch b;
  const int rows = 4;
  b.target = Eigen::MatrixXd::Zero(rows, n_items);
  b.input = Eigen::MatrixXd::Zero(rows, n_items);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n_items; ++i)
      if (rng.next_bernoulli(0.45)) b.target(r, i) = 1.0;
    if (b.target.row(r).sum() == 0) b.target(r, r % n_items) = 1.0;
    b.input.row(r) = b.target.row(r) / b.target.row(r).norm();
  }
  b.eps = Eigen::MatrixXd(rows, latent);
  for (int r = 0; r < rows; ++r)
    for (int l = 0; l < latent; ++l) b.eps(r, l) = rng.next_normal();
  return b;
}

SplitDataset clustered_split(std::uint64_t seed, int n_users = 200, int n_items = 60) {
  SynthSpec spec;
  spec.n_users = n_users;
  spec.n_items = n_items;
  spec.n_clusters = 4;
  spec.profile_len_min = 9;
  spec.profile_len_max = 13;
  spec.noise_rate = 0.1;
  spec.seed = seed;
  SynthOutput out = synth_generate(spec);
  return temporal_split(out.interactions, &out.titles);
}

TrainConfig desk_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 50;
  cfg.learning_rate = 1e-3;
  cfg.dropout = 0.5;
  cfg.beta_max = 0.2;
  cfg.anneal_steps = 150;
  cfg.hidden = 48;
  cfg.latent = 12;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("kl term vanishes for the prior posterior") {
  // mu = 0, logvar = 0: zero all params so the encoder emits exactly that,
  // and check loss is the pure reconstruction term at beta = 1.
  ModelParams p = ModelParams::zeros(7, 5, 3);
  TinyBatch b = tiny_batch(7, 3, 11);
  Eigen::MatrixXd zero_eps = Eigen::MatrixXd::Zero(4, 3);
  const double with_kl = elbo_loss(p, b.input, b.target, 1.0, zero_eps).loss;
  const double without_kl = elbo_loss(p, b.input, b.target, 0.0, zero_eps).loss;
  CHECK(with_kl == doctest::Approx(without_kl).epsilon(1e-15));
}

TEST_CASE("uniform decoder gives the closed-form multinomial loss") {
  // All-zero params force uniform logits; a single row with n ones then has
  // negative log-likelihood n * log(|I|).
  ModelParams p = ModelParams::zeros(7, 5, 3);
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(1, 7);
  target(0, 1) = target(0, 4) = target(0, 6) = 1.0;  // n = 3
  Eigen::MatrixXd input = target / target.norm();
  Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(1, 3);
  const double loss = elbo_loss(p, input, target, 0.0, eps).loss;
  CHECK(loss == doctest::Approx(3.0 * std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  ModelParams p = tiny_random_params(42);
  TinyBatch b = tiny_batch(7, 3, 43);
  const double beta = 0.37;

  const ElboResult base = elbo_loss(p, b.input, b.target, beta, b.eps);
  REQUIRE(std::isfinite(base.loss));

  const double h = 1e-5;
  double max_rel = 0.0;
  auto pt = p.tensors();
  auto gt = base.grads.tensors();
  for (size_t t = 0; t < pt.size(); ++t) {
    for (std::ptrdiff_t i = 0; i < pt[t].size; ++i) {
      const double saved = pt[t].data[i];
      pt[t].data[i] = saved + h;
      const double up = elbo_loss(p, b.input, b.target, beta, b.eps).loss;
      pt[t].data[i] = saved - h;
      const double down = elbo_loss(p, b.input, b.target, beta, b.eps).loss;
      pt[t].data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = gt[t].data[i];
      const double rel =
          std::fabs(analytic - numeric) / std::max(std::fabs(analytic) + std::fabs(numeric), 1e-6);
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("kl is non-negative for random posteriors") {
  // KL >= 0 for all (mu, logvar): evaluate the term directly.
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double mu = 4.0 * (rng.next_double() - 0.5);
    const double lv = 6.0 * (rng.next_double() - 0.5);
    const double kl = 0.5 * (std::exp(lv) + mu * mu - 1.0 - lv);
    CHECK(kl >= 0.0);
  }
}

TEST_CASE("training is deterministic and epochs=0 is the init") {
  SplitDataset ds = clustered_split(1, 60, 56);
  std::vector<std::vector<ItemId>> rows;
  for (const auto& us : ds.users) rows.push_back(us.history);

  TrainConfig cfg = desk_config(5);
  cfg.epochs = 0;
  ModelParams init = multivae_train(rows, ds.num_items(), cfg);
  ModelParams fresh = multivae_init(ds.num_items(), cfg);
  for (size_t t = 0; t < init.tensors().size(); ++t) {
    auto a = init.tensors()[t];
    auto b = fresh.tensors()[t];
    for (std::ptrdiff_t i = 0; i < a.size; ++i) CHECK(a.data[i] == b.data[i]);
  }

  cfg.epochs = 3;
  ModelParams m1 = multivae_train(rows, ds.num_items(), cfg);
  ModelParams m2 = multivae_train(rows, ds.num_items(), cfg);
  testutil::TempDir dir;
  save_model(m1, cfg, dir.file("m1.json"));
  save_model(m2, cfg, dir.file("m2.json"));
  CHECK(testutil::read_file(dir.file("m1.json")) == testutil::read_file(dir.file("m2.json")));
}

TEST_CASE("trained model beats global popularity ranking") {
  SplitDataset ds = clustered_split(2);
  std::vector<std::vector<ItemId>> rows;
  for (const auto& us : ds.users) rows.push_back(us.history);
  MultiVae model(multivae_train(rows, ds.num_items(), desk_config(3)));

  // Popularity oracle on the same split.
  const std::vector<int> pop = ds.popularity();
  Eigen::VectorXd pop_scores(ds.num_items());
  for (int i = 0; i < ds.num_items(); ++i) pop_scores[i] = pop[static_cast<size_t>(i)];

  double model_ndcg = 0.0, pop_ndcg = 0.0;
  for (int u = 0; u < ds.num_users(); ++u) {
    const UserSplit& us = ds.users[static_cast<size_t>(u)];
    model_ndcg += ndcg_at_k(rank_of(model, us.history, us.test_item, us.history), 10);
    pop_ndcg += ndcg_at_k(rank_from_scores(pop_scores, us.test_item, us.history), 10);
  }
  CHECK(model_ndcg / ds.num_users() > pop_ndcg / ds.num_users());
}

TEST_CASE("inference is deterministic and pure") {
  SplitDataset ds = clustered_split(4, 80, 56);
  std::vector<std::vector<ItemId>> rows;
  for (const auto& us : ds.users) rows.push_back(us.history);
  TrainConfig cfg = desk_config(6);
  cfg.epochs = 10;
  ModelParams params = multivae_train(rows, ds.num_items(), cfg);
  MultiVae model(params);

  testutil::TempDir dir;
  save_model(model.params(), cfg, dir.file("before.json"));

  const auto& history = ds.users[0].history;
  const Eigen::VectorXd s1 = model.scores(history);
  const Eigen::VectorXd s2 = model.scores(history);
  CHECK(s1 == s2);

  // cold start stays finite
  const Eigen::VectorXd cold = model.scores({});
  for (int i = 0; i < cold.size(); ++i) CHECK(std::isfinite(cold[i]));

  // flipping an input coordinate changes the scores of a trained model
  std::vector<ItemId> edited(history.begin() + 1, history.end());
  CHECK(model.scores(edited) != s1);

  save_model(model.params(), cfg, dir.file("after.json"));
  CHECK(testutil::read_file(dir.file("before.json")) == testutil::read_file(dir.file("after.json")));
}

TEST_CASE("rank_of matches a sorting oracle and honors ties") {
  Rng rng(99);
  const int n = 40;
  for (int trial = 0; trial < 120; ++trial) {
    Eigen::VectorXd scores(n);
    // coarse grid creates plenty of score ties
    for (int i = 0; i < n; ++i) scores[i] = static_cast<double>(rng.next_below(8));
    std::vector<ItemId> mask;
    for (int i = 0; i < n; ++i)
      if (rng.next_bernoulli(0.3)) mask.push_back(i);
    std::vector<ItemId> candidates;
    std::vector<char> masked(n, 0);
    for (ItemId m : mask) masked[static_cast<size_t>(m)] = 1;
    for (int i = 0; i < n; ++i)
      if (!masked[static_cast<size_t>(i)]) candidates.push_back(i);
    const ItemId cand = candidates[rng.next_below(candidates.size())];

    // oracle: stable sort of unmasked items by (score desc, index asc)
    std::vector<ItemId> order = candidates;
    std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    const int oracle_rank =
        1 + static_cast<int>(std::find(order.begin(), order.end(), cand) - order.begin());
    CHECK(rank_from_scores(scores, cand, mask) == oracle_rank);
    CHECK(rank_from_scores(scores, cand, mask) <= static_cast<int>(candidates.size()));
  }
}

TEST_CASE("rank edge rules") {
  Eigen::VectorXd scores(5);
  scores << 1.0, 9.0, 1.0, 1.0, 1.0;
  SUBCASE("strictly highest unmasked score is rank 1") {
    CHECK(rank_from_scores(scores, 1, {0}) == 1);
  }
  SUBCASE("all-equal scores: smallest unmasked index wins") {
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 2.0);
    CHECK(rank_from_scores(flat, 1, {0}) == 1);
    CHECK(rank_from_scores(flat, 3, {0}) == 3);  // behind unmasked items 1 and 2
  }
  SUBCASE("masked candidate is rejected") {
    CHECK_THROWS_AS(rank_from_scores(scores, 1, {1, 2}), std::invalid_argument);
  }
}

TEST_CASE("monotone mask property") {
  Rng rng(55);
  Eigen::VectorXd scores(30);
  for (int i = 0; i < 30; ++i) scores[i] = rng.next_double();
  std::vector<ItemId> mask = {3, 7, 11, 19, 22};
  const ItemId cand = 5;
  const int base = rank_from_scores(scores, cand, mask);
  for (size_t drop = 0; drop < mask.size(); ++drop) {
    std::vector<ItemId> smaller = mask;
    smaller.erase(smaller.begin() + static_cast<std::ptrdiff_t>(drop));
    CHECK(rank_from_scores(scores, cand, smaller) >= base);
  }
}

TEST_CASE("rescore_with_removals") {
  SplitDataset ds = clustered_split(8, 64, 56);
  std::vector<std::vector<ItemId>> rows;
  for (const auto& us : ds.users) rows.push_back(us.history);
  TrainConfig cfg = desk_config(9);
  cfg.epochs = 15;
  MultiVae model(multivae_train(rows, ds.num_items(), cfg));

  const UserSplit& us = ds.users[3];
  const ItemId cand = us.val_item;

  SUBCASE("empty removal set is the identity") {
    CHECK(rescore_with_removals(model, us.history, {}, cand, us.history) ==
          rank_of(model, us.history, cand, us.history));
  }
  SUBCASE("single removal equals scoring the edited row from scratch") {
    for (size_t drop = 0; drop < us.history.size(); ++drop) {
      std::vector<ItemId> edited = us.history;
      edited.erase(edited.begin() + static_cast<std::ptrdiff_t>(drop));
      CHECK(rescore_with_removals(model, us.history, {us.history[drop]}, cand, us.history) ==
            rank_of(model, edited, cand, edited));
    }
  }
  SUBCASE("removing the whole profile matches the cold-start rank") {
    CHECK(rescore_with_removals(model, us.history, us.history, cand, us.history) ==
          rank_of(model, {}, cand, {}));
  }
  SUBCASE("removal outside the support is rejected") {
    CHECK_THROWS_AS(rescore_with_removals(model, us.history, {us.test_item}, cand, us.history),
                    std::invalid_argument);
  }
}

TEST_CASE("item embeddings") {
  SplitDataset ds = clustered_split(10, 64, 56);
  std::vector<std::vector<ItemId>> rows;
  for (const auto& us : ds.users) rows.push_back(us.history);
  TrainConfig cfg = desk_config(11);
  cfg.epochs = 12;
  MultiVae model(multivae_train(rows, ds.num_items(), cfg));

  const Eigen::MatrixXd emb = model.item_embeddings();
  CHECK(emb.rows() == ds.num_items());
  CHECK(emb.cols() == cfg.hidden);
  bool all_same = true;
  for (int i = 1; i < emb.rows(); ++i)
    if (emb.row(i) != emb.row(0)) all_same = false;
  CHECK(!all_same);
  for (int i = 0; i < emb.rows(); ++i)
    for (int j = 0; j < emb.cols(); ++j) CHECK(std::isfinite(emb(i, j)));

  // seeded init is deterministic
  ModelParams i1 = multivae_init(ds.num_items(), cfg);
  ModelParams i2 = multivae_init(ds.num_items(), cfg);
  CHECK(i1.dec_w2 == i2.dec_w2);
}

TEST_CASE("checkpoint round trip") {
  TrainConfig cfg = desk_config(13);
  cfg.hidden = 6;
  cfg.latent = 2;
  ModelParams p = multivae_init(9, cfg);
  testutil::TempDir dir;
  save_model(p, cfg, dir.file("model.json"));
  TrainConfig loaded_cfg;
  ModelParams q = load_model(dir.file("model.json"), &loaded_cfg);
  CHECK(loaded_cfg.hidden == 6);
  CHECK(loaded_cfg.seed == 13);
  for (size_t t = 0; t < p.tensors().size(); ++t) {
    auto a = p.tensors()[t];
    auto b = q.tensors()[t];
    for (std::ptrdiff_t i = 0; i < a.size; ++i) CHECK(a.data[i] == b.data[i]);
  }
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dropout = 0.5;
  cfg.beta_max = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.beta_max = 0.2;
  cfg.anneal_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
