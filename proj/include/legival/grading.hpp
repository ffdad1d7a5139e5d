#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "legival/corpus.hpp"

namespace legival::grading {

enum class ExtractedKind { latex, letter, groupings, none };

struct ExtractedAnswer {
  ExtractedKind kind = ExtractedKind::none;
  std::string payload;  // latex or letter payload
  std::vector<std::vector<std::string>> groups;
  size_t span_begin = 0;  // byte range of the match in the scanned text
  size_t span_end = 0;
};

// Contents of the LAST balanced \boxed{...} in the text, nested braces
// matched. A single A-D letter (either case) classifies as letter kind,
// anything else as latex. No match -> kind none.
ExtractedAnswer extract_boxed(std::string_view text);

// Normalization-based LaTeX match: strip whitespace / dollar signs /
// \left \right, fold \dfrac \tfrac into \frac, brace single-token \frac
// arguments; then string equality, with a numeric fallback (tolerance
// 1e-9) when both sides parse as plain numbers. Deliberately not a CAS.
bool grade_math(std::string_view extracted, std::string_view gold);

std::string normalize_latex(std::string_view s);

// Case-insensitive single-letter equality.
bool grade_gpqa(std::string_view extracted, std::string_view gold);

// Locates the last JSON object containing the key "Groupings" (code
// fences stripped), requires 4 groups of 4 words, uppercases and trims
// the words. nullopt on parse failure or wrong arity.
std::optional<std::vector<std::vector<std::string>>> parse_groupings(
    std::string_view text);

// Unordered family-of-sets equality; category names are ignored.
bool grade_connections(const std::vector<std::vector<std::string>>& parsed,
                       const std::vector<std::vector<std::string>>& gold);

// Groups matched between parsed and gold (0..4), for the partial-credit
// statistic that is stored but kept out of headline metrics.
int connections_groups_correct(
    const std::vector<std::vector<std::string>>& parsed,
    const std::vector<std::vector<std::string>>& gold);

// Renders groupings in the fenced "Groupings" JSON shape the dataset
// prompt asks for; parse_groupings(serialize_groupings(g)) == g.
std::string serialize_groupings(
    const std::vector<std::vector<std::string>>& groups);

// Dataset-dispatching helpers used by both teacher grading and rollouts.
ExtractedAnswer extract_answer(std::string_view text, corpus::Dataset dataset);
bool grade_answer(const ExtractedAnswer& extracted,
                  const corpus::GoldAnswer& gold);

}  // namespace legival::grading
