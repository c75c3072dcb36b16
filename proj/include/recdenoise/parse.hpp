#pragma once

#include <string>
#include <vector>

#include "recdenoise/denoiser.hpp"

namespace recdenoise {

// Case and punctuation folding used for title matching: ASCII lowercase,
// non-alphanumeric ASCII dropped, whitespace collapsed. Non-ASCII bytes pass
// through unchanged.
std::string normalize_title(const std::string& s);

// Normalization applied before extraction: closed <think> blocks removed,
// markdown fence lines dropped, surrounding whitespace trimmed.
std::string strip_response_noise(const std::string& text);

// Total classifier over raw model output. Extraction takes the last k
// bracketed [..] groups (one group split on commas when k = 2 and only one
// group exists); titles match window members case/punctuation-insensitively,
// each resolving to the first unused window slot. No extractable titles or a
// wrong count classify as formatting; an unmatched title as hallucination.
// Formatting is decided before hallucination, so each response gets exactly
// one label.
RemovalProposal parse_response(const std::string& text, const std::vector<ItemId>& window,
                               const std::vector<std::string>& window_titles, int k);

}  // namespace recdenoise
