#include "legival/corpus.hpp"

#include <set>
#include <unordered_map>
#include <unordered_set>

#include "legival/errors.hpp"
#include "legival/jsonl.hpp"
#include "legival/util.hpp"

namespace legival::corpus {

using jsonl::json;

const char* dataset_name(Dataset d) {
  switch (d) {
    case Dataset::math: return "math";
    case Dataset::gpqa: return "gpqa";
    case Dataset::connections: return "connections";
  }
  return "math";
}

Dataset dataset_from_name(const std::string& name) {
  if (name == "math") return Dataset::math;
  if (name == "gpqa") return Dataset::gpqa;
  if (name == "connections") return Dataset::connections;
  throw DataError("unknown dataset: '" + name + "'");
}

const Problem* Corpus::find_problem(const std::string& id) const {
  for (const auto& p : problems) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const ReasoningTrace* Corpus::find_trace(const std::string& id) const {
  for (const auto& t : traces) {
    if (t.trace_id == id) return &t;
  }
  return nullptr;
}

namespace {

[[noreturn]] void record_error(const std::string& path, int line,
                               const std::string& msg) {
  throw DataError(path + ":" + std::to_string(line) + ": " + msg);
}

std::string require_string(const json& rec, const char* field,
                           const std::string& path, int line) {
  if (!rec.contains(field) || !rec[field].is_string()) {
    record_error(path, line,
                 std::string("missing or non-string field '") + field + "'");
  }
  return rec[field].get<std::string>();
}

GoldAnswer parse_gold(const json& gold, Dataset dataset,
                      const std::vector<Choice>& choices,
                      const std::string& path, int line) {
  GoldAnswer out;
  switch (dataset) {
    case Dataset::math: {
      if (!gold.is_string())
        record_error(path, line, "field 'gold' must be a LaTeX string");
      out.kind = AnswerKind::latex;
      out.text = gold.get<std::string>();
      if (out.text.empty())
        record_error(path, line, "field 'gold' must be non-empty");
      break;
    }
    case Dataset::gpqa: {
      if (!gold.is_string())
        record_error(path, line, "field 'gold' must be a single letter");
      out.kind = AnswerKind::letter;
      out.text = gold.get<std::string>();
      if (out.text.size() != 1 || out.text[0] < 'A' || out.text[0] > 'Z')
        record_error(path, line,
                     "field 'gold' must be a single uppercase letter");
      bool found = false;
      for (const auto& c : choices) found = found || c.label == out.text;
      if (!found)
        record_error(path, line, "gold letter '" + out.text +
                                     "' not among choice labels");
      break;
    }
    case Dataset::connections: {
      if (!gold.is_array() || gold.size() != 4)
        record_error(path, line,
                     "field 'gold' must be exactly 4 groups (got " +
                         std::to_string(gold.is_array() ? gold.size() : 0) +
                         ")");
      out.kind = AnswerKind::groupings;
      std::set<std::string> seen;
      for (const auto& group : gold) {
        if (!group.is_array() || group.size() != 4)
          record_error(path, line, "each gold group must have exactly 4 words");
        std::vector<std::string> words;
        for (const auto& w : group) {
          if (!w.is_string())
            record_error(path, line, "gold words must be strings");
          std::string word =
              util::to_upper(util::trim(w.get<std::string>()));
          if (word.empty()) record_error(path, line, "empty gold word");
          if (!seen.insert(word).second)
            record_error(path, line, "duplicate gold word '" + word + "'");
          words.push_back(word);
        }
        out.groups.push_back(std::move(words));
      }
      break;
    }
  }
  return out;
}

Problem parse_problem(const json& rec, Dataset dataset,
                      const std::string& path, int line) {
  Problem p;
  p.id = require_string(rec, "id", path, line);
  if (p.id.empty()) record_error(path, line, "empty problem id");
  std::string ds = require_string(rec, "dataset", path, line);
  p.dataset = dataset_from_name(ds);
  if (p.dataset != dataset) {
    record_error(path, line, "problem dataset '" + ds +
                                 "' does not match corpus dataset '" +
                                 dataset_name(dataset) + "'");
  }
  p.statement = require_string(rec, "statement", path, line);
  if (rec.contains("choices")) {
    if (!rec["choices"].is_array())
      record_error(path, line, "field 'choices' must be an array");
    for (const auto& c : rec["choices"]) {
      Choice choice;
      choice.label = require_string(c, "label", path, line);
      choice.text = require_string(c, "text", path, line);
      p.choices.push_back(std::move(choice));
    }
  }
  if (dataset == Dataset::gpqa && p.choices.empty())
    record_error(path, line, "gpqa problem requires 'choices'");
  if (!rec.contains("gold"))
    record_error(path, line, "missing field 'gold'");
  p.gold = parse_gold(rec["gold"], dataset, p.choices, path, line);
  return p;
}

}  // namespace

Corpus ingest_corpus(const std::string& problems_path,
                     const std::string& traces_path, Dataset dataset,
                     const TokenCounter& counter) {
  Corpus corpus;
  corpus.dataset = dataset;

  std::unordered_set<std::string> problem_ids;
  jsonl::for_each_record(problems_path, [&](const json& rec, int line) {
    Problem p = parse_problem(rec, dataset, problems_path, line);
    if (!problem_ids.insert(p.id).second)
      record_error(problems_path, line, "duplicate problem id '" + p.id + "'");
    corpus.problems.push_back(std::move(p));
  });

  std::unordered_set<std::string> trace_ids;
  jsonl::for_each_record(traces_path, [&](const json& rec, int line) {
    ReasoningTrace t;
    t.trace_id = require_string(rec, "trace_id", traces_path, line);
    t.problem_id = require_string(rec, "problem_id", traces_path, line);
    t.teacher_id = require_string(rec, "teacher_id", traces_path, line);
    t.raw_reasoning = require_string(rec, "reasoning", traces_path, line);
    t.final_answer_text = require_string(rec, "final_answer", traces_path, line);
    if (!rec.contains("teacher_correct") || !rec["teacher_correct"].is_boolean())
      record_error(traces_path, line,
                   "missing or non-boolean field 'teacher_correct'");
    t.teacher_correct = rec["teacher_correct"].get<bool>();

    if (t.trace_id.empty()) record_error(traces_path, line, "empty trace_id");
    if (!trace_ids.insert(t.trace_id).second)
      record_error(traces_path, line,
                   "duplicate trace id '" + t.trace_id + "'");
    if (!problem_ids.count(t.problem_id))
      record_error(traces_path, line,
                   "trace references missing problem id '" + t.problem_id + "'");
    if (util::trim(t.raw_reasoning).empty())
      record_error(traces_path, line, "empty field 'reasoning'");

    SegmentResult seg = segment_trace(t.raw_reasoning);
    t.steps = std::move(seg.steps);
    if (seg.unclosed_math) ++corpus.unclosed_math_traces;
    t.step_count = static_cast<int>(t.steps.size());
    t.token_count = counter.count(t.raw_reasoning);
    if (t.step_count < 1)
      record_error(traces_path, line, "trace segmented into zero steps");
    if (t.token_count < 1)
      record_error(traces_path, line, "trace has zero tokens");
    corpus.traces.push_back(std::move(t));
  });

  return corpus;
}

namespace {

json gold_to_json(const GoldAnswer& g) {
  if (g.kind == AnswerKind::groupings) {
    json arr = json::array();
    for (const auto& group : g.groups) arr.push_back(group);
    return arr;
  }
  return g.text;
}

}  // namespace

std::string serialize_problems(const Corpus& c) {
  std::string out;
  for (const auto& p : c.problems) {
    json rec;
    rec["id"] = p.id;
    rec["dataset"] = dataset_name(p.dataset);
    rec["statement"] = p.statement;
    rec["gold"] = gold_to_json(p.gold);
    if (!p.choices.empty()) {
      json arr = json::array();
      for (const auto& ch : p.choices)
        arr.push_back({{"label", ch.label}, {"text", ch.text}});
      rec["choices"] = arr;
    }
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_traces(const Corpus& c) {
  std::string out;
  for (const auto& t : c.traces) {
    json rec;
    rec["trace_id"] = t.trace_id;
    rec["problem_id"] = t.problem_id;
    rec["teacher_id"] = t.teacher_id;
    rec["reasoning"] = t.raw_reasoning;
    rec["final_answer"] = t.final_answer_text;
    rec["teacher_correct"] = t.teacher_correct;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::map<std::string, ProblemMedians> correct_trace_medians(const Corpus& c) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      samples;
  for (const auto& t : c.traces) {
    if (!t.teacher_correct) continue;
    auto& [tokens, steps] = samples[t.problem_id];
    tokens.push_back(static_cast<double>(t.token_count));
    steps.push_back(static_cast<double>(t.step_count));
  }
  std::map<std::string, ProblemMedians> out;
  for (auto& [pid, pair] : samples) {
    ProblemMedians m;
    m.median_tokens = *util::median(pair.first);
    m.median_steps = *util::median(pair.second);
    out[pid] = m;
  }
  return out;
}

LengthEfficiency length_efficiency(
    const ReasoningTrace& trace,
    const std::map<std::string, ProblemMedians>& medians) {
  if (trace.token_count < 1 || trace.step_count < 1)
    throw DataError("length_efficiency requires token_count and step_count >= 1");
  LengthEfficiency e;
  e.token_efficiency = 1.0 / trace.token_count;
  e.step_efficiency = 1.0 / trace.step_count;
  auto it = medians.find(trace.problem_id);
  if (it != medians.end()) {
    e.normalized_token_len = trace.token_count / it->second.median_tokens;
    e.normalized_step_len = trace.step_count / it->second.median_steps;
  }
  return e;
}

}  // namespace legival::corpus
