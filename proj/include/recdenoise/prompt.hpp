#pragma once

#include <string>

#include "recdenoise/dataset.hpp"
#include "recdenoise/denoiser.hpp"
#include "recdenoise/scorer.hpp"

namespace recdenoise {

enum class PromptVariant { ZeroShot, FewShot, ZeroShotRecs };

PromptVariant parse_prompt_variant(const std::string& name);
std::string prompt_variant_name(PromptVariant v);

struct PromptSpec {
  PromptVariant variant = PromptVariant::ZeroShot;
  int k = 1;
  std::string domain_label = "movie";
  std::string model_label;  // empty -> the context's model name
};

class MissingTitleError : public std::runtime_error {
 public:
  explicit MissingTitleError(ItemId item);
};

// Renders the denoising instruction with the user history, candidate and
// rank. Few-shot prepends the worked best/worst removal example; the
// recommendations variant prepends the scorer's top-10 titles. Pure:
// identical inputs produce identical text.
std::string build_prompt(const PromptSpec& spec, const UserContext& ctx);

// Mines the best and worst single removal against the second validation
// item (ties by lower item index).
FewShotExemplar build_fewshot_examples(const SplitDataset& ds, const Scorer& scorer, UserId user);

}  // namespace recdenoise
