#include "legival/grading.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "legival/util.hpp"

namespace legival::grading {
namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)); }

// Matching '}' for the '{' at open, honoring backslash escapes.
// Returns npos when unbalanced.
size_t find_matching_brace(std::string_view text, size_t open) {
  int depth = 0;
  for (size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}') {
      --depth;
      if (depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

ExtractedAnswer extract_boxed(std::string_view text) {
  ExtractedAnswer best;
  bool found = false;
  size_t pos = 0;
  while ((pos = text.find("\\boxed", pos)) != std::string_view::npos) {
    size_t brace = pos + 6;
    while (brace < text.size() && text[brace] == ' ') ++brace;
    if (brace >= text.size() || text[brace] != '{') {
      pos += 6;
      continue;
    }
    size_t close = find_matching_brace(text, brace);
    if (close == std::string_view::npos) {
      pos += 6;
      continue;
    }
    best.payload = std::string(text.substr(brace + 1, close - brace - 1));
    best.span_begin = pos;
    best.span_end = close + 1;
    best.kind = ExtractedKind::latex;
    found = true;
    pos = close + 1;
  }
  if (!found) {
    best.kind = ExtractedKind::none;
    return best;
  }
  std::string trimmed(util::trim(best.payload));
  if (trimmed.size() == 1 && ((trimmed[0] >= 'A' && trimmed[0] <= 'D') ||
                              (trimmed[0] >= 'a' && trimmed[0] <= 'd'))) {
    best.kind = ExtractedKind::letter;
    best.payload = trimmed;
  }
  return best;
}

std::string normalize_latex(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '$') continue;
    if (c == '\\') {
      if (s.compare(i, 5, "\\left") == 0 &&
          (i + 5 >= s.size() || !is_alpha(s[i + 5]))) {
        i += 4;
        continue;
      }
      if (s.compare(i, 6, "\\right") == 0 &&
          (i + 6 >= s.size() || !is_alpha(s[i + 6]))) {
        i += 5;
        continue;
      }
      if (s.compare(i, 6, "\\dfrac") == 0 || s.compare(i, 6, "\\tfrac") == 0) {
        out += "\\frac";
        i += 5;
        continue;
      }
    }
    out.push_back(c);
  }

  // Brace bare \frac arguments: \frac12 -> \frac{1}{2}, \frac\pi2 ->
  // \frac{\pi}{2}. Runs twice over the two arguments.
  std::string braced;
  braced.reserve(out.size() + 8);
  for (size_t i = 0; i < out.size();) {
    if (out.compare(i, 5, "\\frac") == 0 &&
        (i + 5 >= out.size() || !is_alpha(out[i + 5]))) {
      braced += "\\frac";
      i += 5;
      for (int arg = 0; arg < 2 && i < out.size(); ++arg) {
        if (out[i] == '{') {
          size_t close = find_matching_brace(out, i);
          if (close == std::string::npos) break;
          braced.append(out, i, close - i + 1);
          i = close + 1;
        } else if (out[i] == '\\') {
          size_t j = i + 1;
          while (j < out.size() && is_alpha(out[j])) ++j;
          braced.push_back('{');
          braced.append(out, i, j - i);
          braced.push_back('}');
          i = j;
        } else {
          braced.push_back('{');
          braced.push_back(out[i]);
          braced.push_back('}');
          ++i;
        }
      }
    } else {
      braced.push_back(out[i]);
      ++i;
    }
  }

  // Peel redundant whole-string braces: {x} -> x.
  std::string_view v = braced;
  while (v.size() >= 2 && v.front() == '{' &&
         find_matching_brace(v, 0) == v.size() - 1) {
    v = v.substr(1, v.size() - 2);
  }
  return std::string(v);
}

namespace {

std::optional<double> parse_plain_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

bool grade_math(std::string_view extracted, std::string_view gold) {
  std::string a = normalize_latex(extracted);
  std::string b = normalize_latex(gold);
  if (a.empty() || b.empty()) return false;
  if (a == b) return true;
  auto na = parse_plain_number(a);
  auto nb = parse_plain_number(b);
  if (na && nb) return std::fabs(*na - *nb) <= 1e-9;
  return false;
}

bool grade_gpqa(std::string_view extracted, std::string_view gold) {
  auto a = util::trim(extracted);
  auto b = util::trim(gold);
  if (a.size() != 1 || b.size() != 1) return false;
  return std::toupper(static_cast<unsigned char>(a[0])) ==
         std::toupper(static_cast<unsigned char>(b[0]));
}

namespace {

using njson = nlohmann::json;

std::optional<std::vector<std::vector<std::string>>> groups_from_json(
    const njson& groupings) {
  std::vector<std::vector<std::string>> groups;
  auto take_words = [&](const njson& node) -> bool {
    const njson* words = &node;
    if (node.is_object()) {
      if (!node.contains("Words")) return false;
      words = &node["Words"];
    }
    if (!words->is_array() || words->size() != 4) return false;
    std::vector<std::string> group;
    for (const auto& w : *words) {
      if (!w.is_string()) return false;
      group.push_back(util::to_upper(util::trim(w.get<std::string>())));
    }
    groups.push_back(std::move(group));
    return true;
  };

  if (groupings.is_object()) {
    if (groupings.size() != 4) return std::nullopt;
    // Keys sorted so "1".."4" come out in prompt order.
    std::vector<std::string> keys;
    for (auto it = groupings.begin(); it != groupings.end(); ++it)
      keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) {
      if (!take_words(groupings.at(k))) return std::nullopt;
    }
  } else if (groupings.is_array()) {
    if (groupings.size() != 4) return std::nullopt;
    for (const auto& g : groupings) {
      if (!take_words(g)) return std::nullopt;
    }
  } else {
    return std::nullopt;
  }
  return groups;
}

}  // namespace

std::optional<std::vector<std::vector<std::string>>> parse_groupings(
    std::string_view text) {
  // Drop code fences (with optional language tag) so the JSON underneath
  // scans cleanly.
  std::string cleaned;
  cleaned.reserve(text.size());
  for (size_t i = 0; i < text.size();) {
    if (text.compare(i, 3, "```") == 0) {
      i += 3;
      if (text.compare(i, 4, "json") == 0) i += 4;
      continue;
    }
    cleaned.push_back(text[i]);
    ++i;
  }

  size_t key = cleaned.rfind("\"Groupings\"");
  while (key != std::string::npos) {
    // Innermost '{' before the key whose balanced span covers it.
    size_t open = cleaned.rfind('{', key);
    while (open != std::string::npos) {
      size_t close = find_matching_brace(cleaned, open);
      if (close != std::string::npos && close > key) {
        try {
          njson obj = njson::parse(cleaned.substr(open, close - open + 1));
          if (obj.is_object() && obj.contains("Groupings")) {
            auto groups = groups_from_json(obj["Groupings"]);
            if (groups) return groups;
          }
        } catch (const njson::exception&) {
          // fall through to an outer candidate
        }
      }
      if (open == 0) break;
      open = cleaned.rfind('{', open - 1);
    }
    if (key == 0) break;
    key = cleaned.rfind("\"Groupings\"", key - 1);
  }
  return std::nullopt;
}

namespace {

std::vector<std::set<std::string>> as_set_family(
    const std::vector<std::vector<std::string>>& groups) {
  std::vector<std::set<std::string>> fam;
  for (const auto& g : groups) fam.emplace_back(g.begin(), g.end());
  std::sort(fam.begin(), fam.end());
  return fam;
}

}  // namespace

bool grade_connections(const std::vector<std::vector<std::string>>& parsed,
                       const std::vector<std::vector<std::string>>& gold) {
  if (parsed.size() != 4 || gold.size() != 4) return false;
  return as_set_family(parsed) == as_set_family(gold);
}

int connections_groups_correct(
    const std::vector<std::vector<std::string>>& parsed,
    const std::vector<std::vector<std::string>>& gold) {
  auto a = as_set_family(parsed);
  auto b = as_set_family(gold);
  int matched = 0;
  for (const auto& g : a) {
    matched += std::count(b.begin(), b.end(), g) > 0 ? 1 : 0;
  }
  return matched;
}

std::string serialize_groupings(
    const std::vector<std::vector<std::string>>& groups) {
  nlohmann::ordered_json obj;
  nlohmann::ordered_json inner;
  for (size_t i = 0; i < groups.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["Category"] = "Group " + std::to_string(i + 1);
    entry["Words"] = groups[i];
    inner[std::to_string(i + 1)] = entry;
  }
  obj["Groupings"] = inner;
  return "```" + obj.dump(4) + "```";
}

ExtractedAnswer extract_answer(std::string_view text,
                               corpus::Dataset dataset) {
  if (dataset == corpus::Dataset::connections) {
    ExtractedAnswer out;
    auto groups = parse_groupings(text);
    if (groups) {
      out.kind = ExtractedKind::groupings;
      out.groups = std::move(*groups);
    }
    return out;
  }
  return extract_boxed(text);
}

bool grade_answer(const ExtractedAnswer& extracted,
                  const corpus::GoldAnswer& gold) {
  if (extracted.kind == ExtractedKind::none) return false;
  switch (gold.kind) {
    case corpus::AnswerKind::latex:
      if (extracted.kind == ExtractedKind::groupings) return false;
      return grade_math(extracted.payload, gold.text);
    case corpus::AnswerKind::letter:
      if (extracted.kind == ExtractedKind::groupings) return false;
      return grade_gpqa(extracted.payload, gold.text);
    case corpus::AnswerKind::groupings:
      return extracted.kind == ExtractedKind::groupings &&
             grade_connections(extracted.groups, gold.groups);
  }
  return false;
}

}  // namespace legival::grading
