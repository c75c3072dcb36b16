#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace recdenoise {

// Leave-one-out ranking metrics: a single relevant item at 1-based `rank`,
// so the ideal DCG is 1 and the closed forms below are exact.
inline double ndcg_at_k(int rank, int k) {
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

inline double hr_at_k(int rank, int k) { return rank <= k ? 1.0 : 0.0; }

inline double mrr_at_k(int rank, int k) {
  return rank <= k ? 1.0 / static_cast<double>(rank) : 0.0;
}

// Percent change of `method` over `original`; undefined when the original
// mean is zero.
inline std::optional<double> relative_change(double method_mean, double original_mean) {
  if (original_mean == 0.0) return std::nullopt;
  return 100.0 * (method_mean - original_mean) / original_mean;
}

enum class SigTier { None, P05, P01, P001 };

inline const char* sig_marker(SigTier t) {
  switch (t) {
    case SigTier::P001: return "‡";  // double dagger
    case SigTier::P01: return "†";   // dagger
    case SigTier::P05: return "*";
    default: return "";
  }
}

inline SigTier sig_tier(double p) {
  if (p < 0.001) return SigTier::P001;
  if (p < 0.01) return SigTier::P01;
  if (p < 0.05) return SigTier::P05;
  return SigTier::None;
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  SigTier tier = SigTier::None;
};

// Two-sided paired t-test over per-user values. Degenerate conventions:
// all-zero differences -> p = 1; zero variance with nonzero mean -> p = 0.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta function I_x(a, b); exposed for tests.
double reg_incomplete_beta(double a, double b, double x);

// Two-sided p-value of a t statistic with `dof` degrees of freedom.
double student_t_two_sided_p(double t, int dof);

}  // namespace recdenoise
