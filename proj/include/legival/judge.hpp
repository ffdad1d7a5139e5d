#pragma once

#include <optional>
#include <string>
#include <vector>

#include "legival/corpus.hpp"
#include "legival/inference.hpp"

namespace legival::judge {

struct BacktrackStep {
  int step_number = 0;  // 1-based
  std::string reason;
};

struct JudgeVerdict {
  bool backtracking_detected = false;
  std::string final_answer;
  std::vector<BacktrackStep> backtracking_steps;  // strictly increasing
  double confidence = 0.0;  // clamped to [0,1]
  std::string overall_reasoning;

  // Normalization notes: "out_of_range" (entries dropped),
  // "duplicate_steps", "confidence_clamped", "inconsistent_detected".
  std::vector<std::string> flags;
  std::string raw_text;  // retained verbatim for audit
  int retries = 0;
};

// Judge system prompt: the backtracking-analysis instructions with the
// dataset-specific indicator rubric appended.
std::string build_judge_prompt(corpus::Dataset dataset);

// Parses a judge response into a verdict: strips a code-fence wrapper if
// present, validates the schema, drops out-of-range or duplicate step
// numbers (flagging them), sorts the rest, clamps confidence. nullopt
// when the payload is not usable at all.
std::optional<JudgeVerdict> parse_verdict(const std::string& payload, int m);

// Numbered-step rendering of the trace handed to the judge.
std::string format_trace_for_judge(const corpus::ReasoningTrace& trace);

// One judge call with a single JSON-repair retry. Throws ProviderError
// when the response stays unparsable after the retry.
JudgeVerdict classify_backtracking(inference::InferenceClient& client,
                                   const corpus::Problem& problem,
                                   const corpus::ReasoningTrace& trace,
                                   const std::string& judge_endpoint,
                                   int max_new_tokens = 2048);

// |backtracking_steps| / m.
double backtracking_proportion(const JudgeVerdict& verdict, int m);

}  // namespace legival::judge
