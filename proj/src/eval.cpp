#include "recdenoise/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace recdenoise {

using json = nlohmann::json;

namespace {
const char* error_name(ProposalError e) {
  switch (e) {
    case ProposalError::Formatting: return "formatting";
    case ProposalError::Hallucination: return "hallucination";
    default: return "none";
  }
}

ProposalError error_from_name(const std::string& s) {
  if (s == "formatting") return ProposalError::Formatting;
  if (s == "hallucination") return ProposalError::Hallucination;
  return ProposalError::None;
}

double metric_value(const std::string& metric, int rank, int k) {
  if (metric == "ndcg") return ndcg_at_k(rank, k);
  if (metric == "hr") return hr_at_k(rank, k);
  return mrr_at_k(rank, k);
}

const std::vector<std::string> kMetricNames = {"ndcg", "hr", "mrr"};
}  // namespace

std::vector<EvalRecord> evaluate_campaign(const std::vector<DenoiseOutcome>& outcomes,
                                          const Scorer& scorer, const SplitDataset& ds,
                                          const std::vector<UserId>& users) {
  std::map<UserId, std::vector<const DenoiseOutcome*>> by_user;
  for (const auto& o : outcomes) by_user[o.user].push_back(&o);

  size_t runs = 0;
  for (UserId u : users) {
    auto it = by_user.find(u);
    if (it == by_user.end())
      throw DependencyError("campaign incomplete: no outcome for user " +
                            ds.catalog.users.at(static_cast<size_t>(u)));
    if (runs == 0) runs = it->second.size();
    if (it->second.size() != runs)
      throw DependencyError("campaign incomplete: uneven run counts at user " +
                            ds.catalog.users.at(static_cast<size_t>(u)));
  }

  std::vector<EvalRecord> records;
  records.reserve(users.size() * runs);
  for (UserId u : users) {
    const UserSplit& us = ds.users.at(static_cast<size_t>(u));
    const int original_rank = rank_of(scorer, us.history, us.test_item, us.history);
    for (const DenoiseOutcome* o : by_user.at(u)) {
      EvalRecord r;
      r.user = u;
      r.run = o->proposal.run;
      r.test_rank_original = original_rank;
      r.test_rank = o->accepted ? rank_of(scorer, o->final_profile, us.test_item, o->final_profile)
                                : original_rank;
      r.val_rank_before = o->rank_before;
      r.val_rank_after = o->rank_after;
      r.accepted = o->accepted;
      r.error = o->proposal.error;
      r.removals = o->proposal.removals;
      for (ItemId i : r.removals) r.removal_ratings.push_back(ds.rating_of(u, i));
      r.profile_len = static_cast<int>(us.history.size());
      records.push_back(std::move(r));
    }
  }
  return records;
}

void save_eval_records(const std::vector<EvalRecord>& records, const SplitDataset& ds,
                       const std::string& method, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write eval records: " + path);
  out << json{{"method", method}}.dump() << "\n";
  for (const auto& r : records) {
    json rec;
    rec["user"] = ds.catalog.users.at(static_cast<size_t>(r.user));
    rec["run"] = r.run;
    rec["test_rank"] = r.test_rank;
    rec["test_rank_original"] = r.test_rank_original;
    rec["val_rank_before"] = r.val_rank_before;
    rec["val_rank_after"] = r.val_rank_after;
    rec["accepted"] = r.accepted;
    rec["error"] = error_name(r.error);
    json removals = json::array();
    for (ItemId i : r.removals) removals.push_back(ds.catalog.items.at(static_cast<size_t>(i)));
    rec["removals"] = removals;
    rec["removal_ratings"] = r.removal_ratings;
    rec["profile_len"] = r.profile_len;
    out << rec.dump() << "\n";
  }
}

std::vector<EvalRecord> load_eval_records(const std::string& path, const SplitDataset& ds,
                                          std::string* method) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing eval records: " + path);
  std::map<std::string, UserId> umap;
  std::map<std::string, ItemId> imap;
  for (size_t i = 0; i < ds.catalog.users.size(); ++i) umap[ds.catalog.users[i]] = static_cast<UserId>(i);
  for (size_t i = 0; i < ds.catalog.items.size(); ++i) imap[ds.catalog.items[i]] = static_cast<ItemId>(i);

  std::vector<EvalRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (rec.contains("method")) {
      if (method) *method = rec.at("method").get<std::string>();
      continue;
    }
    EvalRecord r;
    r.user = umap.at(rec.at("user").get<std::string>());
    r.run = rec.at("run").get<std::uint64_t>();
    r.test_rank = rec.at("test_rank").get<int>();
    r.test_rank_original = rec.at("test_rank_original").get<int>();
    r.val_rank_before = rec.at("val_rank_before").get<int>();
    r.val_rank_after = rec.at("val_rank_after").get<int>();
    r.accepted = rec.at("accepted").get<bool>();
    r.error = error_from_name(rec.at("error").get<std::string>());
    for (const auto& i : rec.at("removals")) r.removals.push_back(imap.at(i.get<std::string>()));
    r.removal_ratings = rec.at("removal_ratings").get<std::vector<int>>();
    r.profile_len = rec.at("profile_len").get<int>();
    records.push_back(std::move(r));
  }
  return records;
}

MethodReport aggregate_method(const std::string& method, const std::vector<EvalRecord>& records,
                              const std::vector<int>& cutoffs, bool denoised_only) {
  std::map<UserId, std::vector<const EvalRecord*>> by_user;
  for (const auto& r : records) by_user[r.user].push_back(&r);

  std::set<UserId> denoised;
  for (const auto& r : records)
    if (r.accepted) denoised.insert(r.user);

  std::vector<UserId> scope;
  for (const auto& [u, recs] : by_user)
    if (!denoised_only || denoised.count(u)) scope.push_back(u);

  MethodReport rep;
  rep.method = method;
  rep.denoised_subset = denoised_only;
  rep.n_users = static_cast<int>(scope.size());
  rep.users_denoised_pct =
      by_user.empty() ? 0.0
                      : 100.0 * static_cast<double>(denoised.size()) /
                            static_cast<double>(by_user.size());

  int n_records = 0, n_formatting = 0, n_hallucination = 0;
  for (UserId u : scope) {
    for (const EvalRecord* r : by_user.at(u)) {
      ++n_records;
      if (r->error == ProposalError::Formatting) ++n_formatting;
      if (r->error == ProposalError::Hallucination) ++n_hallucination;
    }
  }
  if (n_records > 0) {
    rep.formatting_pct = 100.0 * n_formatting / n_records;
    rep.hallucination_pct = 100.0 * n_hallucination / n_records;
  }

  for (const auto& metric : kMetricNames) {
    for (int k : cutoffs) {
      MetricCell cell;
      std::vector<double> denoised_vals, original_vals;
      denoised_vals.reserve(scope.size());
      for (UserId u : scope) {
        double d = 0.0, o = 0.0;
        const auto& recs = by_user.at(u);
        for (const EvalRecord* r : recs) {
          d += metric_value(metric, r->test_rank, k);
          o += metric_value(metric, r->test_rank_original, k);
        }
        denoised_vals.push_back(d / static_cast<double>(recs.size()));
        original_vals.push_back(o / static_cast<double>(recs.size()));
      }
      if (!denoised_vals.empty()) {
        double sum_d = 0.0, sum_o = 0.0;
        for (size_t i = 0; i < denoised_vals.size(); ++i) {
          sum_d += denoised_vals[i];
          sum_o += original_vals[i];
        }
        cell.mean = sum_d / static_cast<double>(denoised_vals.size());
        cell.original_mean = sum_o / static_cast<double>(original_vals.size());
        cell.rel_change_pct = relative_change(cell.mean, cell.original_mean);
        if (denoised_vals.size() >= 2) cell.test = paired_t_test(denoised_vals, original_vals);
      }
      rep.cells.push_back({{metric, k}, cell});
    }
  }
  return rep;
}

std::pair<double, double> error_rates(const std::vector<DenoiseOutcome>& outcomes) {
  if (outcomes.empty()) return {0.0, 0.0};
  int formatting = 0, hallucination = 0;
  for (const auto& o : outcomes) {
    if (o.proposal.error == ProposalError::Formatting) ++formatting;
    if (o.proposal.error == ProposalError::Hallucination) ++hallucination;
  }
  const double n = static_cast<double>(outcomes.size());
  return {100.0 * formatting / n, 100.0 * hallucination / n};
}

std::vector<RatingBucketRow> breakdown_by_rating(const std::vector<EvalRecord>& records) {
  struct Bucket {
    std::vector<std::pair<double, double>> pairs;  // (original, denoised) ndcg@20 per removal
    std::set<UserId> users;
    int removals = 0;
  };
  std::map<int, Bucket> buckets;
  for (const auto& r : records) {
    if (!r.accepted) continue;
    const double o = ndcg_at_k(r.test_rank_original, 20);
    const double d = ndcg_at_k(r.test_rank, 20);
    for (size_t j = 0; j < r.removals.size(); ++j) {
      Bucket& b = buckets[r.removal_ratings[j]];
      b.pairs.push_back({o, d});
      b.users.insert(r.user);
      ++b.removals;
    }
  }

  auto subgroup_change = [](const std::vector<std::pair<double, double>>& pairs,
                            bool positive) -> std::optional<double> {
    double sum_o = 0.0, sum_d = 0.0;
    int n = 0;
    for (const auto& [o, d] : pairs) {
      if (positive ? d > o : d < o) {
        sum_o += o;
        sum_d += d;
        ++n;
      }
    }
    if (n == 0 || sum_o == 0.0) return std::nullopt;
    return 100.0 * (sum_d - sum_o) / sum_o;
  };

  std::vector<RatingBucketRow> rows;
  for (const auto& [rating, b] : buckets) {
    RatingBucketRow row;
    row.rating = rating;
    row.positive_change_pct = subgroup_change(b.pairs, true);
    row.negative_change_pct = subgroup_change(b.pairs, false);
    row.users = static_cast<int>(b.users.size());
    row.removals = b.removals;
    rows.push_back(row);
  }
  return rows;
}

std::vector<LengthBucketRow> breakdown_by_profile_length(const std::vector<EvalRecord>& records) {
  std::map<UserId, std::vector<const EvalRecord*>> by_user;
  for (const auto& r : records) by_user[r.user].push_back(&r);
  if (by_user.empty()) return {};

  std::vector<int> lengths;
  for (const auto& [u, recs] : by_user) lengths.push_back(recs.front()->profile_len);
  std::sort(lengths.begin(), lengths.end());
  const size_t n = lengths.size();
  const int b1 = lengths[n / 4], b2 = lengths[n / 2], b3 = lengths[3 * n / 4];
  auto bucket_of = [&](int len) { return len >= b3 ? 3 : len >= b2 ? 2 : len >= b1 ? 1 : 0; };

  struct Bucket {
    double sum_o = 0.0, sum_d = 0.0;
    int users = 0, improved = 0, unchanged = 0, worsened = 0;
    int len_lo = 0, len_hi = 0;
    bool any = false;
  };
  Bucket buckets[4];

  for (const auto& [u, recs] : by_user) {
    const int len = recs.front()->profile_len;
    Bucket& b = buckets[bucket_of(len)];
    if (!b.any) {
      b.len_lo = b.len_hi = len;
      b.any = true;
    } else {
      b.len_lo = std::min(b.len_lo, len);
      b.len_hi = std::max(b.len_hi, len);
    }
    double d = 0.0, o = 0.0;
    int best_after = recs.front()->val_rank_after;
    for (const EvalRecord* r : recs) {
      d += ndcg_at_k(r->test_rank, 20);
      o += ndcg_at_k(r->test_rank_original, 20);
      best_after = std::min(best_after, r->val_rank_after);
    }
    b.sum_d += d / static_cast<double>(recs.size());
    b.sum_o += o / static_cast<double>(recs.size());
    ++b.users;
    const int before = recs.front()->val_rank_before;
    if (best_after < before) ++b.improved;
    else if (best_after == before) ++b.unchanged;
    else ++b.worsened;
  }

  std::vector<LengthBucketRow> rows;
  for (const Bucket& b : buckets) {
    if (!b.any) continue;
    LengthBucketRow row;
    row.len_lo = b.len_lo;
    row.len_hi = b.len_hi;
    if (b.sum_o > 0) row.change_pct = 100.0 * (b.sum_d - b.sum_o) / b.sum_o;
    row.improved = b.improved;
    row.unchanged = b.unchanged;
    row.worsened = b.worsened;
    row.users = b.users;
    rows.push_back(row);
  }
  return rows;
}

namespace {
std::string format_cell(const MetricCell& cell) {
  if (!cell.rel_change_pct) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.1f%%%s", *cell.rel_change_pct, sig_marker(cell.test.tier));
  return buf;
}
}  // namespace

std::string render_markdown_report(const std::vector<MethodReport>& reports,
                                   const std::vector<int>& cutoffs, const std::string& title) {
  std::ostringstream out;
  out << "## " << title << "\n\n";
  out << "| Method | Users |";
  for (const auto& m : kMetricNames) {
    std::string upper = m;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    for (int k : cutoffs) out << " " << upper << "@" << k << " |";
  }
  out << " % denoised | For. | Hal. |\n";
  out << "|---|---|";
  for (size_t i = 0; i < kMetricNames.size() * cutoffs.size(); ++i) out << "---|";
  out << "---|---|---|\n";

  for (const auto& rep : reports) {
    out << "| " << rep.method << " | " << rep.n_users << " |";
    for (const auto& [key, cell] : rep.cells) out << " " << format_cell(cell) << " |";
    char buf[96];
    std::snprintf(buf, sizeof(buf), " %.1f%% | %.1f%% | %.1f%% |", rep.users_denoised_pct,
                  rep.formatting_pct, rep.hallucination_pct);
    out << buf << "\n";
  }
  out << "\nSignificance vs original profiles (paired t-test): ‡ p<0.001, † p<0.01, * "
         "p<0.05.\n";
  return out.str();
}

void write_report_csv(const std::vector<MethodReport>& reports, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report: " + path);
  out << "method,scope,metric,cutoff,mean,original_mean,rel_change_pct,t,p,tier,n_users,"
         "formatting_pct,hallucination_pct,users_denoised_pct\n";
  for (const auto& rep : reports) {
    for (const auto& [key, cell] : rep.cells) {
      out << rep.method << "," << (rep.denoised_subset ? "denoised" : "all") << "," << key.first
          << "," << key.second << ",";
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,", cell.mean, cell.original_mean);
      out << buf;
      if (cell.rel_change_pct) {
        std::snprintf(buf, sizeof(buf), "%.6g", *cell.rel_change_pct);
        out << buf;
      }
      std::snprintf(buf, sizeof(buf), ",%.6g,%.6g,", cell.test.t, cell.test.p);
      out << buf << static_cast<int>(cell.test.tier) << "," << rep.n_users << ",";
      std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g\n", rep.formatting_pct,
                    rep.hallucination_pct, rep.users_denoised_pct);
      out << buf;
    }
  }
}

void write_rating_breakdown_csv(const std::vector<RatingBucketRow>& rows,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write breakdown: " + path);
  out << "rating,positive_change_pct,negative_change_pct,users,removals\n";
  for (const auto& r : rows) {
    out << r.rating << ",";
    if (r.positive_change_pct) out << *r.positive_change_pct;
    out << ",";
    if (r.negative_change_pct) out << *r.negative_change_pct;
    out << "," << r.users << "," << r.removals << "\n";
  }
}

void write_length_breakdown_csv(const std::vector<LengthBucketRow>& rows,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write breakdown: " + path);
  out << "len_lo,len_hi,change_pct,improved,unchanged,worsened,users\n";
  for (const auto& r : rows) {
    out << r.len_lo << "," << r.len_hi << ",";
    if (r.change_pct) out << *r.change_pct;
    out << "," << r.improved << "," << r.unchanged << "," << r.worsened << "," << r.users << "\n";
  }
}

}  // namespace recdenoise
