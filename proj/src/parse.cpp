#include "recdenoise/parse.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace recdenoise {

std::string normalize_title(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;  // any punctuation/space run collapses to one separator
    }
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string drop_think_blocks(std::string text) {
  while (true) {
    const size_t open = text.find("<think>");
    if (open == std::string::npos) return text;
    const size_t close = text.find("</think>", open);
    if (close == std::string::npos) return text;  // unclosed: leave as-is
    text.erase(open, close + 8 - open);
  }
}

std::string drop_fence_lines(const std::string& text) {
  std::istringstream in(text);
  std::string out, line;
  while (std::getline(in, line)) {
    if (trim(line).rfind("```", 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

// Splits "a, b" into top-level comma fragments.
std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

}  // namespace

std::string strip_response_noise(const std::string& text) {
  return trim(drop_fence_lines(drop_think_blocks(text)));
}

RemovalProposal parse_response(const std::string& text, const std::vector<ItemId>& window,
                               const std::vector<std::string>& window_titles, int k) {
  RemovalProposal p;

  const std::string cleaned = strip_response_noise(text);
  static const std::regex group_re(R"(\[([^\[\]]*)\])");
  std::vector<std::string> groups;
  for (auto it = std::sregex_iterator(cleaned.begin(), cleaned.end(), group_re);
       it != std::sregex_iterator(); ++it)
    groups.push_back(trim((*it)[1].str()));

  std::vector<std::string> fragments;
  if (static_cast<int>(groups.size()) >= k) {
    fragments.assign(groups.end() - k, groups.end());
  } else if (k == 2 && groups.size() == 1) {
    // "[item1, item2]" written as a single group.
    fragments = split_commas(groups[0]);
  }

  if (static_cast<int>(fragments.size()) != k ||
      std::any_of(fragments.begin(), fragments.end(),
                  [](const std::string& f) { return normalize_title(f).empty(); })) {
    p.error = ProposalError::Formatting;
    p.raw_texts = std::move(fragments);
    return p;
  }

  p.raw_texts = fragments;

  // Resolve each fragment to the first unused window slot with the same
  // folded title; duplicate window titles are therefore handled.
  std::vector<char> used(window.size(), 0);
  for (const std::string& frag : fragments) {
    const std::string key = normalize_title(frag);
    bool matched = false;
    for (size_t i = 0; i < window.size(); ++i) {
      if (!used[i] && normalize_title(window_titles[i]) == key) {
        used[i] = 1;
        p.removals.push_back(window[i]);
        matched = true;
        break;
      }
    }
    if (!matched) {
      p.removals.clear();
      p.error = ProposalError::Hallucination;
      return p;
    }
  }
  p.error = ProposalError::None;
  return p;
}

}  // namespace recdenoise
