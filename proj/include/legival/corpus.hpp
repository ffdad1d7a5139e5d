#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "legival/segment.hpp"
#include "legival/tokens.hpp"

namespace legival::corpus {

enum class Dataset { math, gpqa, connections };

const char* dataset_name(Dataset d);
Dataset dataset_from_name(const std::string& name);  // throws DataError

enum class AnswerKind { latex, letter, groupings };

// Gold answer for a problem; payload shape depends on kind.
struct GoldAnswer {
  AnswerKind kind = AnswerKind::latex;
  std::string text;  // latex payload or single uppercase letter
  std::vector<std::vector<std::string>> groups;  // 4 groups of 4 words
};

struct Choice {
  std::string label;
  std::string text;
};

struct Problem {
  std::string id;
  Dataset dataset = Dataset::math;
  std::string statement;
  GoldAnswer gold;
  std::vector<Choice> choices;  // gpqa only
};

struct ReasoningTrace {
  std::string trace_id;
  std::string problem_id;
  std::string teacher_id;
  std::string raw_reasoning;
  std::vector<Step> steps;
  std::string final_answer_text;
  int token_count = 0;
  int step_count = 0;
  bool teacher_correct = false;
};

struct Corpus {
  Dataset dataset = Dataset::math;
  std::vector<Problem> problems;
  std::vector<ReasoningTrace> traces;
  // Traces whose segmentation hit an unclosed math region; reported as a
  // corpus statistic, not an error.
  int unclosed_math_traces = 0;

  const Problem* find_problem(const std::string& id) const;
  const ReasoningTrace* find_trace(const std::string& id) const;
};

// Reads problems + traces JSONL (External Interfaces schemas), validates
// every invariant, segments each trace, and counts tokens with the given
// counter. Throws DataError naming the file, line, and field on any
// malformed record, duplicate id, or dangling problem reference.
Corpus ingest_corpus(const std::string& problems_path,
                     const std::string& traces_path, Dataset dataset,
                     const TokenCounter& counter);

// Canonical one-line-per-record serialization. ingest(serialize(c)) is
// bit-identical to serialize(c) for any valid corpus.
std::string serialize_problems(const Corpus& c);
std::string serialize_traces(const Corpus& c);

struct LengthEfficiency {
  double token_efficiency = 0.0;  // 1/n
  double step_efficiency = 0.0;   // 1/m
  std::optional<double> normalized_token_len;  // n / median over correct
  std::optional<double> normalized_step_len;   // m / median over correct
};

struct ProblemMedians {
  double median_tokens = 0.0;
  double median_steps = 0.0;
};

// Median token/step lengths per problem over teacher-correct traces.
// Problems with no correct trace are absent from the map.
std::map<std::string, ProblemMedians> correct_trace_medians(const Corpus& c);

LengthEfficiency length_efficiency(
    const ReasoningTrace& trace,
    const std::map<std::string, ProblemMedians>& medians);

}  // namespace legival::corpus
