#include "legival/segment.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

#include "legival/util.hpp"

namespace legival::corpus {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)); }

// Lowercased tokens (including the trailing dot) that end with '.' without
// ending a sentence. Single letters are handled separately as initials.
const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> set = {
      "mr.",   "mrs.",  "ms.",    "dr.",   "prof.", "st.",   "no.",
      "vs.",   "etc.",  "e.g.",   "i.e.",  "cf.",   "al.",   "fig.",
      "figs.", "eq.",   "eqs.",   "sec.",  "ch.",   "pp.",   "approx.",
      "resp.", "dept.", "inc.",   "ltd.",  "jr.",   "sr.",   "vol.",
      "min.",  "max.",  "w.r.t.", "i.i.d.",
  };
  return set;
}

// The word ending at position i (inclusive of the '.' at i), lowercased.
// Walks back over letters and dots so "e.g." comes out whole.
std::string token_ending_at(std::string_view s, size_t i) {
  size_t b = i;
  while (b > 0) {
    char c = s[b - 1];
    if (is_alpha(c) || c == '.') {
      --b;
    } else {
      break;
    }
  }
  return util::to_lower(s.substr(b, i - b + 1));
}

struct MathState {
  bool in_inline = false;   // $...$
  bool in_display = false;  // $$...$$
  int boxed_depth = 0;      // brace depth inside \boxed{...}
  bool active() const { return in_inline || in_display || boxed_depth > 0; }
};

}  // namespace

SegmentResult segment_trace(std::string_view raw) {
  SegmentResult result;
  const size_t n = raw.size();
  MathState math;
  std::vector<size_t> cuts;  // byte index one past each sentence terminator

  size_t i = 0;
  while (i < n) {
    char c = raw[i];

    // Math-region tracking. Escaped \$ is a literal dollar.
    if (c == '\\' && i + 1 < n) {
      if (raw.compare(i, 7, "\\boxed{") == 0) {
        if (math.boxed_depth == 0) math.boxed_depth = 1;
        i += 7;
        continue;
      }
      i += 2;  // skip escaped char ( \$ \{ \} \\ ... )
      continue;
    }
    if (math.boxed_depth > 0) {
      if (c == '{') ++math.boxed_depth;
      if (c == '}') --math.boxed_depth;
      ++i;
      continue;
    }
    if (c == '$') {
      if (i + 1 < n && raw[i + 1] == '$') {
        if (!math.in_inline) math.in_display = !math.in_display;
        i += 2;
        continue;
      }
      if (!math.in_display) math.in_inline = !math.in_inline;
      ++i;
      continue;
    }
    if (math.active()) {
      ++i;
      continue;
    }

    if (c == '.' || c == '!' || c == '?') {
      size_t term = i;
      if (c == '.') {
        // Decimal point: digit on both sides.
        if (term > 0 && term + 1 < n && is_digit(raw[term - 1]) &&
            is_digit(raw[term + 1])) {
          ++i;
          continue;
        }
        // Ellipsis: only the last dot of the run may terminate.
        if (term + 1 < n && raw[term + 1] == '.') {
          ++i;
          continue;
        }
        std::string token = token_ending_at(raw, term);
        if (abbreviations().count(token)) {
          ++i;
          continue;
        }
        // Single-letter initial ("A. Smith").
        if (token.size() == 2 && is_alpha(token[0])) {
          ++i;
          continue;
        }
      }
      // Closing quotes/brackets belong to the sentence.
      size_t end = term + 1;
      while (end < n && (raw[end] == '"' || raw[end] == '\'' ||
                         raw[end] == ')' || raw[end] == ']')) {
        ++end;
      }
      if (end >= n || is_space(raw[end])) {
        cuts.push_back(end);
        i = end;
        continue;
      }
    }
    ++i;
  }

  result.unclosed_math = math.active();

  // Slice [prev_cut, cut) spans, trimming whitespace at both ends.
  size_t prev = 0;
  auto emit = [&](size_t from, size_t to) {
    size_t b = from, e = to;
    while (b < e && is_space(raw[b])) ++b;
    while (e > b && is_space(raw[e - 1])) --e;
    if (b < e) {
      result.steps.push_back(
          Step{std::string(raw.substr(b, e - b)), b, e});
    }
  };
  for (size_t cut : cuts) {
    emit(prev, cut);
    prev = cut;
  }
  emit(prev, n);
  return result;
}

std::vector<Step> segment_steps(std::string_view raw) {
  return segment_trace(raw).steps;
}

}  // namespace legival::corpus
