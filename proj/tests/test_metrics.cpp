#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recdenoise/metrics.hpp"
#include "recdenoise/rng.hpp"

using namespace recdenoise;

namespace {

// Brute-force oracle: score an explicit ranked list with the single relevant
// item placed at `rank`, instead of using the closed forms.
double brute_dcg_at_k(int rank, int k) {
  double dcg = 0.0;
  for (int pos = 1; pos <= k; ++pos)
    if (pos == rank) dcg += 1.0 / std::log2(static_cast<double>(pos) + 1.0);
  return dcg / 1.0;  // ideal DCG = 1 (one relevant item)
}

double brute_hr_at_k(int rank, int k) {
  for (int pos = 1; pos <= k; ++pos)
    if (pos == rank) return 1.0;
  return 0.0;
}

double brute_mrr_at_k(int rank, int k) {
  for (int pos = 1; pos <= k; ++pos)
    if (pos == rank) return 1.0 / static_cast<double>(pos);
  return 0.0;
}

}  // namespace

TEST_CASE("closed forms at pinned ranks") {
  CHECK(ndcg_at_k(1, 10) == 1.0);
  CHECK(hr_at_k(1, 100) == 1.0);
  CHECK(mrr_at_k(1, 20) == 1.0);

  CHECK(ndcg_at_k(11, 10) == 0.0);
  CHECK(hr_at_k(11, 10) == 0.0);
  CHECK(mrr_at_k(11, 10) == 0.0);

  CHECK(ndcg_at_k(4, 10) == doctest::Approx(0.43067655807339306).epsilon(1e-15));
  CHECK(mrr_at_k(4, 10) == 0.25);
}

TEST_CASE("oracle equivalence on random ranks") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const int rank = 1 + static_cast<int>(rng.next_below(200));
    const int k = 1 + static_cast<int>(rng.next_below(150));
    CHECK(ndcg_at_k(rank, k) == brute_dcg_at_k(rank, k));
    CHECK(hr_at_k(rank, k) == brute_hr_at_k(rank, k));
    CHECK(mrr_at_k(rank, k) == brute_mrr_at_k(rank, k));
  }
}

TEST_CASE("monotonicity in rank and cutoff nesting") {
  for (int k : {10, 20, 100}) {
    for (int rank = 1; rank < 150; ++rank) {
      CHECK(ndcg_at_k(rank, k) >= ndcg_at_k(rank + 1, k));
      CHECK(mrr_at_k(rank, k) >= mrr_at_k(rank + 1, k));
      CHECK(hr_at_k(rank, k) >= hr_at_k(rank + 1, k));
    }
  }
  for (int rank = 1; rank <= 120; ++rank) {
    CHECK(hr_at_k(rank, 10) <= hr_at_k(rank, 20));
    CHECK(hr_at_k(rank, 20) <= hr_at_k(rank, 100));
    CHECK(ndcg_at_k(rank, 10) <= ndcg_at_k(rank, 20));
    CHECK(ndcg_at_k(rank, 20) <= ndcg_at_k(rank, 100));
    CHECK(mrr_at_k(rank, 10) <= mrr_at_k(rank, 20));
    CHECK(mrr_at_k(rank, 20) <= mrr_at_k(rank, 100));
  }
}

TEST_CASE("relative change") {
  CHECK(*relative_change(0.21, 0.20) == doctest::Approx(5.0));
  CHECK(*relative_change(0.5, 0.5) == 0.0);
  CHECK(*relative_change(0.174, 0.18) == doctest::Approx(-10.0 / 3.0));
  CHECK(!relative_change(0.1, 0.0).has_value());
}

TEST_CASE("paired t-test against reference values") {
  // scipy.stats.ttest_rel fixtures, frozen before the implementation.
  {
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> b = {0, 0, 0, 0, 0};
    const TTestResult r = paired_t_test(a, b);
    CHECK(r.t == doctest::Approx(4.242640687119285).epsilon(1e-12));
    CHECK(r.p == doctest::Approx(0.013235599563683).epsilon(1e-6));
    CHECK(r.tier == SigTier::P05);
  }
  {
    const std::vector<double> a = {0.9, 1.4, 0.3, 0.55, 1.0, 0.72, 0.18, 0.95};
    const std::vector<double> b = {0.7, 1.1, 0.45, 0.50, 0.8, 0.60, 0.25, 0.77};
    const TTestResult r = paired_t_test(a, b);
    CHECK(r.t == doctest::Approx(1.937431026349963).epsilon(1e-12));
    CHECK(r.p == doctest::Approx(0.093889499393637).epsilon(1e-6));
    CHECK(r.tier == SigTier::None);
  }
}

TEST_CASE("degenerate conventions") {
  const std::vector<double> same = {0.4, 0.7, 0.1};
  const TTestResult identical = paired_t_test(same, same);
  CHECK(identical.p == 1.0);
  CHECK(identical.tier == SigTier::None);

  const std::vector<double> a = {2.0, 2.0};
  const std::vector<double> b = {1.0, 1.0};
  const TTestResult degen = paired_t_test(a, b);
  CHECK(degen.p == 0.0);
  CHECK(degen.tier == SigTier::P001);
  CHECK(std::isinf(degen.t));
}

TEST_CASE("t-test symmetry") {
  const std::vector<double> a = {0.3, 0.9, 0.2, 0.8, 0.65};
  const std::vector<double> b = {0.25, 0.7, 0.4, 0.6, 0.66};
  const TTestResult ab = paired_t_test(a, b);
  const TTestResult ba = paired_t_test(b, a);
  CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-14));
  CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-14));
}

TEST_CASE("significance tiers") {
  CHECK(sig_tier(0.0005) == SigTier::P001);
  CHECK(sig_tier(0.005) == SigTier::P01);
  CHECK(sig_tier(0.04) == SigTier::P05);
  CHECK(sig_tier(0.06) == SigTier::None);
}
