#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace legival::corpus {

// One sentence-level reasoning step. Offsets are byte positions into the
// original UTF-8 text; [byte_start, byte_end) is the trimmed step span.
struct Step {
  std::string text;
  size_t byte_start = 0;
  size_t byte_end = 0;
};

struct SegmentResult {
  std::vector<Step> steps;
  // True when a $...$ or \boxed{...} region was still open at end of
  // input. Such traces segment conservatively (no splits inside the open
  // region) and are tallied as a corpus statistic at ingest.
  bool unclosed_math = false;
};

// Rule-based sentence segmentation: terminators .!? close a sentence when
// followed by whitespace, except after known abbreviations, between
// digits (decimal points), and anywhere inside $...$ / $$...$$ /
// \boxed{...} regions. Deterministic; empty or whitespace-only input
// yields no steps.
SegmentResult segment_trace(std::string_view raw);

// Convenience: steps only.
std::vector<Step> segment_steps(std::string_view raw);

}  // namespace legival::corpus
