#include "recdenoise/prompt.hpp"

#include <limits>
#include <sstream>

namespace recdenoise {

PromptVariant parse_prompt_variant(const std::string& name) {
  if (name == "zero_shot") return PromptVariant::ZeroShot;
  if (name == "few_shot") return PromptVariant::FewShot;
  if (name == "zero_shot_recs") return PromptVariant::ZeroShotRecs;
  throw ConfigError("unknown prompt variant '" + name + "'");
}

std::string prompt_variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::FewShot: return "few_shot";
    case PromptVariant::ZeroShotRecs: return "zero_shot_recs";
    default: return "zero_shot";
  }
}

MissingTitleError::MissingTitleError(ItemId item)
    : std::runtime_error("no title available for item " + std::to_string(item) +
                         "; cannot build a prompt") {}

namespace {
std::string join_bracketed(const std::vector<std::string>& titles) {
  std::string out = "[";
  for (size_t i = 0; i < titles.size(); ++i) {
    if (i) out += ", ";
    out += titles[i];
  }
  out += "]";
  return out;
}
}  // namespace

std::string build_prompt(const PromptSpec& spec, const UserContext& ctx) {
  if (spec.k != 1 && spec.k != 2) throw ConfigError("prompt k must be 1 or 2");
  for (size_t i = 0; i < ctx.window.size(); ++i)
    if (ctx.window_titles[i].empty()) throw MissingTitleError(ctx.window[i]);
  if (ctx.candidate_title.empty()) throw MissingTitleError(ctx.candidate);

  const std::string model = !spec.model_label.empty()
                                ? spec.model_label
                                : (!ctx.model_name.empty() ? ctx.model_name : "MultiVAE");

  std::ostringstream out;

  if (spec.variant == PromptVariant::FewShot) {
    if (!ctx.examples)
      throw ConfigError("few_shot prompt requested without exemplars in the context");
    const FewShotExemplar& e = *ctx.examples;
    out << "Here is an example of removals for this user with the candidate [" << e.candidate_title
        << "]:\n";
    out << "Best removal: removing [" << e.best_title << "] changed the candidate rank from "
        << e.best_rank_before << " to " << e.best_rank_after << ".\n";
    out << "Worst removal: removing [" << e.worst_title << "] changed the candidate rank from "
        << e.worst_rank_before << " to " << e.worst_rank_after << ".\n";
    out << "\n";
  } else if (spec.variant == PromptVariant::ZeroShotRecs) {
    if (!ctx.top_recs)
      throw ConfigError("zero_shot_recs prompt requested without recommendations in the context");
    out << "Top-10 recommendations: " << join_bracketed(*ctx.top_recs) << "\n\n";
  }

  out << "You will help in cleaning the user historical interactions in the context of a "
         "recommender system in the "
      << spec.domain_label
      << " domain. Given the user history, a candidate item and its rank (lower rank is better) "
         "by "
      << model << " in the format:\n\n[user history] - [candidate] - [rank]\n\n";
  if (spec.k == 1) {
    out << "remove only 1 item from the user history that would make " << model
        << " rank the respective candidate lowest/best. List only the item to be removed from "
           "the user history in the format [item1] and nothing else. The removed item must be "
           "present in the user history.\n\n";
  } else {
    out << "remove only 2 items from the user history that would make " << model
        << " rank the respective candidate lowest/best. List only the items to be removed from "
           "the user history in the format [item1], [item2] and nothing else. The removed items "
           "must be present in the user history.\n\n";
  }
  out << join_bracketed(ctx.window_titles) << " - [" << ctx.candidate_title << "] - ["
      << ctx.candidate_rank << "]\n\nRemoval:";
  return out.str();
}

FewShotExemplar build_fewshot_examples(const SplitDataset& ds, const Scorer& scorer,
                                       UserId user) {
  const UserSplit& us = ds.users.at(static_cast<size_t>(user));
  const std::vector<ItemId> window = ds.prompt_window(user);
  const ItemId candidate = us.val2_item;
  const int rank_before = rank_of(scorer, us.history, candidate, us.history);

  ItemId best = -1, worst = -1;
  int best_rank = std::numeric_limits<int>::max();
  int worst_rank = std::numeric_limits<int>::min();
  for (ItemId w : window) {
    const int r = rescore_with_removals(scorer, us.history, {w}, candidate, us.history);
    if (r < best_rank || (r == best_rank && w < best)) {
      best_rank = r;
      best = w;
    }
    if (r > worst_rank || (r == worst_rank && w < worst)) {
      worst_rank = r;
      worst = w;
    }
  }

  FewShotExemplar e;
  e.candidate_title = ds.catalog.titles.at(static_cast<size_t>(candidate));
  e.best_title = ds.catalog.titles.at(static_cast<size_t>(best));
  e.best_rank_before = rank_before;
  e.best_rank_after = best_rank;
  e.worst_title = ds.catalog.titles.at(static_cast<size_t>(worst));
  e.worst_rank_before = rank_before;
  e.worst_rank_after = worst_rank;
  return e;
}

}  // namespace recdenoise
