#include "legival/judge.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "legival/errors.hpp"
#include "legival/util.hpp"

namespace legival::judge {
namespace {

const std::string kJudgePrompt = R"PROMPT(You are an expert in analyzing mathematical reasoning traces generated by large language models. Your task is to identify instances of 'backtracking' within these traces.

A reasoning trace is a step-by-step derivation of a solution to a mathematical problem. Backtracking occurs when the model revises or abandons a previous step, approach, or calculation in favor of a new one. This often indicates a correction, a change in strategy, or exploration of an alternative path.

Your goal is to determine if the provided reasoning trace exhibits backtracking and, if so, pinpoint where it occurs and explain why. Look for indicators such as:

-   Explicit keywords or phrases (e.g., 'But', 'Wait', 'Alternatively', 'However', 'Hmm', 'Hmmm', 'Not sure', 'Going back', 'Backtrack', 'Trace back', 'Another').
-   A sudden change in the method or direction of the solution.
-   Revisiting or correcting a calculation or assumption made earlier in the trace.
-   Exploring an alternative approach after a previous one failed or seemed incorrect.

Do not confuse minor arithmetic errors, rephrasing, or adding detail with backtracking. Backtracking implies a more significant deviation from a previously taken path or a clear change in strategy.

You will be given a reasoning trace as input. You must return a JSON object with the following structure:
{
  "backtracking_detected": boolean,
  "final_answer": "The final answer extracted from the reasoning trace.",
  "backtracking_steps": [
    {
      "step_number": int,
      "reason": "A brief explanation of why this step indicates backtracking."
    }
  ],
  "confidence": float (0.0 to 1.0),
  "overall_reasoning": "A brief explanation for your overall decision regarding backtracking."
}

**Core Task:**
- Read the reasoning trace carefully, following the steps logically.
- Identify any points where the model seems to change its mind, correct a previous error, or switch to a different method after initially pursuing another, using the indicators mentioned above.

**Definitions:**

1.  **Reasoning Trace:** A sequence of steps leading to a mathematical solution.
2.  **Backtracking:** A deviation in the reasoning trace where a previous idea, calculation, or approach is abandoned or corrected, and a new one is adopted. This often appears as a restart, a sudden change in direction, or an explicit correction of a prior statement or calculation.

**Filtering Rules (IMPORTANT):**

-   **`backtracking_detected`**: `true` if the trace shows evidence of backtracking, `false` otherwise.
-   **`backtracking_steps`**: If `backtracking_detected` is `true`, list the step numbers (starting from 1 for the first logical step) where backtracking is evident, along with a brief `reason` for each. If no backtracking is detected, this array should be empty.
-   **`confidence`**: How sure are you of your decision? 1.0 for very sure, 0.5 for uncertain.
-   **`overall_reasoning`**: A concise explanation for your overall decision regarding backtracking. If backtracking was detected, summarize why. If not, state that the trace appeared linear or consistent.

**Your Response:**
- Your response MUST be a single, valid JSON object. Do not include any other text or formatting before or after the JSON.)PROMPT";

const std::string kMathRubric = R"PROMPT(

MATH Backtracking Rubric. Backtracking is detected when the model:
- Uses explicit revision keywords: "Wait", "But", "However", "Hmm", "Going back", "Backtrack", "Alternatively"
- Changes solution method or direction abruptly
- Revisits or corrects earlier calculations/assumptions
- Explores alternative approaches after a failed attempt
Minor arithmetic corrections or detail additions are not counted as backtracking.)PROMPT";

const std::string kGpqaRubric = R"PROMPT(

GPQA Backtracking Rubric. Domain-specific indicators for graduate-level science:
- Revision phrases: "Wait, that's not right", "Actually", "Re-evaluating", "On second thought"
- Correcting domain-specific constants, formulas, or sign errors
- Realizing overlooked constraints in the problem statement
- Switching theoretical frameworks when initial approach leads to contradiction)PROMPT";

const std::string kConnectionsRubric = R"PROMPT(

Connections Backtracking Rubric. Word-grouping specific indicators:
- Abandoning proposed groups: "No, that word belongs elsewhere"
- Recognizing red herrings: "Actually, these could be..."
- Recalculating remaining words after failed attempt
- Changing category themes mid-reasoning)PROMPT";

// Strips a leading/trailing markdown code fence (``` or ```json).
std::string strip_fence(std::string_view s) {
  auto body = util::trim(s);
  if (!util::starts_with(body, "```")) return std::string(body);
  body.remove_prefix(3);
  if (util::starts_with(body, "json")) body.remove_prefix(4);
  size_t close = body.rfind("```");
  if (close != std::string_view::npos) body = body.substr(0, close);
  return std::string(util::trim(body));
}

// First balanced {...} region, for judges that wrap JSON in prose.
std::optional<std::string> first_json_object(const std::string& s) {
  size_t open = s.find('{');
  if (open == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  for (size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '{') ++depth;
    if (c == '}') {
      --depth;
      if (depth == 0) return s.substr(open, i - open + 1);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string build_judge_prompt(corpus::Dataset dataset) {
  switch (dataset) {
    case corpus::Dataset::math: return kJudgePrompt + kMathRubric;
    case corpus::Dataset::gpqa: return kJudgePrompt + kGpqaRubric;
    case corpus::Dataset::connections:
      return kJudgePrompt + kConnectionsRubric;
  }
  return kJudgePrompt;
}

std::optional<JudgeVerdict> parse_verdict(const std::string& payload, int m) {
  using njson = nlohmann::json;
  std::string body = strip_fence(payload);
  njson obj = njson::parse(body, nullptr, false);
  if (obj.is_discarded()) {
    auto embedded = first_json_object(body);
    if (!embedded) return std::nullopt;
    obj = njson::parse(*embedded, nullptr, false);
    if (obj.is_discarded()) return std::nullopt;
  }
  if (!obj.is_object()) return std::nullopt;
  if (!obj.contains("backtracking_detected") ||
      !obj["backtracking_detected"].is_boolean()) {
    return std::nullopt;
  }

  JudgeVerdict v;
  v.raw_text = payload;
  v.backtracking_detected = obj["backtracking_detected"].get<bool>();
  if (obj.contains("final_answer") && obj["final_answer"].is_string())
    v.final_answer = obj["final_answer"].get<std::string>();
  if (obj.contains("overall_reasoning") && obj["overall_reasoning"].is_string())
    v.overall_reasoning = obj["overall_reasoning"].get<std::string>();

  if (obj.contains("confidence") && obj["confidence"].is_number()) {
    v.confidence = obj["confidence"].get<double>();
    if (!std::isfinite(v.confidence)) v.confidence = 0.0;
    if (v.confidence < 0.0 || v.confidence > 1.0) {
      v.confidence = std::clamp(v.confidence, 0.0, 1.0);
      v.flags.push_back("confidence_clamped");
    }
  }

  if (obj.contains("backtracking_steps")) {
    if (!obj["backtracking_steps"].is_array()) return std::nullopt;
    std::set<int> seen;
    for (const auto& item : obj["backtracking_steps"]) {
      if (!item.is_object() || !item.contains("step_number") ||
          !item["step_number"].is_number_integer()) {
        return std::nullopt;
      }
      BacktrackStep step;
      step.step_number = item["step_number"].get<int>();
      if (item.contains("reason") && item["reason"].is_string())
        step.reason = item["reason"].get<std::string>();
      if (step.step_number < 1 || step.step_number > m) {
        v.flags.push_back("out_of_range");
        continue;
      }
      if (!seen.insert(step.step_number).second) {
        v.flags.push_back("duplicate_steps");
        continue;
      }
      v.backtracking_steps.push_back(std::move(step));
    }
    std::sort(v.backtracking_steps.begin(), v.backtracking_steps.end(),
              [](const BacktrackStep& a, const BacktrackStep& b) {
                return a.step_number < b.step_number;
              });
  }

  // detected=false forbids listed steps; trust the boolean.
  if (!v.backtracking_detected && !v.backtracking_steps.empty()) {
    v.backtracking_steps.clear();
    v.flags.push_back("inconsistent_detected");
  }
  return v;
}

std::string format_trace_for_judge(const corpus::ReasoningTrace& trace) {
  std::string out;
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    out += "Step " + std::to_string(i + 1) + ": " + trace.steps[i].text + "\n";
  }
  if (!trace.final_answer_text.empty()) {
    out += "Final answer: " + trace.final_answer_text + "\n";
  }
  return out;
}

JudgeVerdict classify_backtracking(inference::InferenceClient& client,
                                   const corpus::Problem& problem,
                                   const corpus::ReasoningTrace& trace,
                                   const std::string& judge_endpoint,
                                   int max_new_tokens) {
  inference::ChatRequest req;
  req.endpoint_id = judge_endpoint;
  req.max_new_tokens = max_new_tokens;
  req.temperature = 0.0;
  req.messages = {
      {"system", build_judge_prompt(problem.dataset)},
      {"user", format_trace_for_judge(trace)},
  };

  auto first = client.chat_complete(req);
  if (auto v = parse_verdict(first.text, trace.step_count)) {
    return *v;
  }

  inference::ChatRequest repair = req;
  repair.messages.push_back({"assistant", first.text});
  repair.messages.push_back(
      {"user",
       "Your previous response was not valid JSON. Respond with only the "
       "JSON object."});
  auto second = client.chat_complete(repair);
  if (auto v = parse_verdict(second.text, trace.step_count)) {
    v->retries = 1;
    return *v;
  }
  throw ProviderError("judge response unparsable after repair retry (trace " +
                      trace.trace_id + ")");
}

double backtracking_proportion(const JudgeVerdict& verdict, int m) {
  if (m < 1) throw DataError("backtracking_proportion requires m >= 1");
  return static_cast<double>(verdict.backtracking_steps.size()) /
         static_cast<double>(m);
}

}  // namespace legival::judge
