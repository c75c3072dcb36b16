#include "recdenoise/types.hpp"

#include <cctype>

namespace recdenoise {

namespace {
bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s)
    if (!std::isdigit(c)) return false;
  return s.size() <= 19;  // fits in uint64 without overflow checks
}
}  // namespace

bool natural_id_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;  // equal length digit strings compare numerically
  }
  return a < b;
}

}  // namespace recdenoise
