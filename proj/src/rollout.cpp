#include "legival/rollout.hpp"

#include <algorithm>

#include <json.hpp>

#include "legival/errors.hpp"
#include "legival/prompts.hpp"
#include "legival/util.hpp"

namespace legival::rollout {

std::vector<int> sample_rollout_depths(int m, int interval,
                                       bool include_full_trace) {
  if (m < 1) throw DataError("sample_rollout_depths requires m >= 1");
  if (interval < 1) throw DataError("interval must be >= 1");
  std::vector<int> depths;
  for (int k = 0; k < m; k += interval) depths.push_back(k);
  if (depths.back() != m - 1) depths.push_back(m - 1);
  if (include_full_trace) depths.push_back(m);
  return depths;
}

std::string prefix_text(const corpus::ReasoningTrace& trace, int k,
                        bool exact_bytes) {
  if (k < 0 || k > static_cast<int>(trace.steps.size()))
    throw DataError("prefix depth out of range");
  if (k == 0) return "";
  if (exact_bytes) {
    size_t end = trace.steps[k - 1].byte_end;
    return trace.raw_reasoning.substr(0, end);
  }
  std::string out;
  for (int i = 0; i < k; ++i) {
    if (i > 0) out += ' ';
    out += trace.steps[i].text;
  }
  return out;
}

inference::ChatRequest build_prefix_messages(const corpus::Problem& problem,
                                             const corpus::ReasoningTrace& trace,
                                             int k, const RolloutOptions& opts) {
  if (k < 0 || k > trace.step_count)
    throw DataError("prefix depth out of range for trace " + trace.trace_id);
  inference::ChatRequest req;
  req.endpoint_id = opts.student_endpoint;
  req.max_new_tokens = opts.student_budget;
  req.temperature = 0.0;
  req.top_p = 1.0;
  req.continue_final_message = true;
  req.seed = opts.seed;

  std::string statement = problem.statement;
  if (problem.dataset == corpus::Dataset::gpqa && !problem.choices.empty()) {
    statement += "\n";
    for (const auto& c : problem.choices)
      statement += "\n" + c.label + ") " + c.text;
  }
  req.messages = {
      {"system", prompts::system_prompt(problem.dataset)},
      {"user", statement},
      {"assistant", prefix_text(trace, k, opts.exact_bytes)},
  };
  return req;
}

const char* pass_name(PassKind p) {
  switch (p) {
    case PassKind::first: return "first";
    case PassKind::forced: return "forced";
    case PassKind::failed: return "failed";
  }
  return "failed";
}

PassKind pass_from_name(const std::string& name) {
  if (name == "first") return PassKind::first;
  if (name == "forced") return PassKind::forced;
  if (name == "failed") return PassKind::failed;
  throw DataError("unknown pass kind: '" + name + "'");
}

std::vector<inference::InferenceClient::BatchItem>
EndpointStudent::complete_batch(const std::vector<StudentCall>& calls,
                                int max_in_flight) {
  std::vector<inference::ChatRequest> reqs;
  reqs.reserve(calls.size());
  for (const auto& c : calls) reqs.push_back(c.request);
  return client_.run_batch(reqs, max_in_flight);
}

namespace {

bool is_forced_request(const StudentCall& call) {
  const auto& msgs = call.request.messages;
  if (msgs.empty() || msgs.back().role != "assistant") return false;
  const std::string& content = msgs.back().content;
  const std::string& force =
      prompts::forcing_string(call.problem->dataset);
  return content.size() >= force.size() &&
         content.compare(content.size() - force.size(), force.size(), force) ==
             0;
}

// Gold answer with a minimal corruption that still grades cleanly false.
corpus::GoldAnswer wrong_answer(const corpus::GoldAnswer& gold) {
  corpus::GoldAnswer wrong = gold;
  switch (gold.kind) {
    case corpus::AnswerKind::latex:
      wrong.text = gold.text + "+1";
      break;
    case corpus::AnswerKind::letter:
      wrong.text = gold.text == "A" ? "B" : "A";
      break;
    case corpus::AnswerKind::groupings:
      std::swap(wrong.groups[0][0], wrong.groups[1][0]);
      break;
  }
  return wrong;
}

std::string answer_text(const corpus::GoldAnswer& answer, bool forced) {
  if (answer.kind == corpus::AnswerKind::groupings) {
    std::string full = grading::serialize_groupings(answer.groups);
    // forced requests already opened with "```{"
    return forced ? full.substr(4) : full;
  }
  if (forced) return "{" + answer.text + "}";
  return "The answer is \\boxed{" + answer.text + "}.";
}

}  // namespace

std::vector<inference::InferenceClient::BatchItem>
ScriptedStudent::complete_batch(const std::vector<StudentCall>& calls, int) {
  std::vector<inference::InferenceClient::BatchItem> out(calls.size());
  for (size_t i = 0; i < calls.size(); ++i) {
    const auto& call = calls[i];
    double depth = static_cast<double>(call.k) /
                   static_cast<double>(call.trace->step_count);
    bool correct = depth >= spec_.reveal_depth;
    if (spec_.noise > 0.0) {
      std::uint64_t h = util::fnv1a64(call.trace->trace_id) ^
                        util::splitmix64(spec_.seed + 31 * call.k);
      if (util::unit_double(util::splitmix64(h)) < spec_.noise)
        correct = !correct;
    }
    const corpus::GoldAnswer answer =
        correct ? call.problem->gold : wrong_answer(call.problem->gold);
    inference::ChatResponse resp;
    resp.text = answer_text(answer, is_forced_request(call));
    resp.finish_reason = inference::FinishReason::stop;
    resp.usage.completion_tokens = static_cast<int>(resp.text.size() / 4);
    out[i].response = std::move(resp);
  }
  return out;
}

namespace {

struct PassOutcome {
  grading::ExtractedAnswer extracted;
  bool graded = false;
  bool correct = false;
};

PassOutcome grade_text(const std::string& text,
                       const corpus::Problem& problem) {
  PassOutcome out;
  out.extracted = grading::extract_answer(text, problem.dataset);
  if (out.extracted.kind != grading::ExtractedKind::none) {
    out.graded = true;
    out.correct = grading::grade_answer(out.extracted, problem.gold);
  }
  return out;
}

RolloutRecord make_base_record(const corpus::ReasoningTrace& trace, int k,
                               const std::string& student_id) {
  RolloutRecord r;
  r.trace_id = trace.trace_id;
  r.k = k;
  r.m = trace.step_count;
  r.relative_depth = static_cast<double>(k) / trace.step_count;
  r.student_id = student_id;
  return r;
}

}  // namespace

RolloutRecord run_student(Student& student, const corpus::Problem& problem,
                          const corpus::ReasoningTrace& trace, int k,
                          const RolloutOptions& opts) {
  StudentCall call{&problem, &trace, k,
                   build_prefix_messages(problem, trace, k, opts)};
  auto first = student.complete_batch({call}, 1);

  RolloutRecord record = make_base_record(trace, k, student.id());
  if (!first[0].ok()) {
    record.error = first[0].error;
    return record;
  }
  record.tokens_used = first[0].response->usage.completion_tokens;
  std::string first_text = first[0].response->text;
  PassOutcome outcome = grade_text(first_text, problem);
  if (outcome.graded) {
    record.continuation = first_text;
    record.extracted = outcome.extracted;
    record.correct = outcome.correct;
    record.pass = PassKind::first;
    return record;
  }

  // Forced second pass: extend the assistant text with the first
  // continuation plus the dataset forcing string.
  const std::string& force = prompts::forcing_string(problem.dataset);
  StudentCall forced_call = call;
  forced_call.request.messages.back().content += first_text + force;
  forced_call.request.max_new_tokens = opts.force_budget;
  auto forced = student.complete_batch({forced_call}, 1);
  if (!forced[0].ok()) {
    record.continuation = first_text;
    record.error = forced[0].error;
    return record;
  }
  record.tokens_used += forced[0].response->usage.completion_tokens;
  std::string forced_text = forced[0].response->text;
  record.continuation = first_text + force + forced_text;
  PassOutcome forced_outcome = grade_text(force + forced_text, problem);
  if (forced_outcome.graded) {
    record.extracted = forced_outcome.extracted;
    record.correct = forced_outcome.correct;
    record.pass = PassKind::forced;
  }
  return record;
}

std::vector<RolloutRecord> run_transfer(
    const corpus::Corpus& corpus,
    const std::vector<const corpus::ReasoningTrace*>& traces, Student& student,
    const RolloutOptions& opts,
    const std::set<std::pair<std::string, int>>& done, const RecordSink& sink) {
  struct Task {
    const corpus::Problem* problem;
    const corpus::ReasoningTrace* trace;
    int k;
  };
  std::vector<Task> tasks;
  for (const auto* trace : traces) {
    if (!trace->teacher_correct) {
      throw DataError("run_transfer requires teacher-correct traces; trace '" +
                      trace->trace_id + "' is not");
    }
    const corpus::Problem* problem = corpus.find_problem(trace->problem_id);
    if (!problem) {
      throw DataError("trace '" + trace->trace_id +
                      "' references unknown problem '" + trace->problem_id +
                      "'");
    }
    for (int k : sample_rollout_depths(trace->step_count, opts.interval,
                                       opts.include_full_trace)) {
      if (done.count({trace->trace_id, k})) continue;
      tasks.push_back({problem, trace, k});
    }
  }

  std::vector<RolloutRecord> records;
  records.reserve(tasks.size());

  // Chunked two-pass pipeline: batches stay bounded, records land in
  // deterministic task order, and an interrupted run resumes at chunk
  // granularity on top of the HTTP cache.
  constexpr size_t kChunk = 64;
  for (size_t base = 0; base < tasks.size(); base += kChunk) {
    size_t count = std::min(kChunk, tasks.size() - base);
    std::vector<StudentCall> calls(count);
    for (size_t i = 0; i < count; ++i) {
      const Task& t = tasks[base + i];
      calls[i] = {t.problem, t.trace, t.k,
                  build_prefix_messages(*t.problem, *t.trace, t.k, opts)};
    }
    auto first = student.complete_batch(calls, opts.max_in_flight);

    std::vector<RolloutRecord> chunk(count);
    std::vector<size_t> need_force;
    std::vector<StudentCall> forced_calls;
    for (size_t i = 0; i < count; ++i) {
      const Task& t = tasks[base + i];
      chunk[i] = make_base_record(*t.trace, t.k, student.id());
      if (!first[i].ok()) {
        chunk[i].error = first[i].error;
        continue;
      }
      chunk[i].tokens_used = first[i].response->usage.completion_tokens;
      const std::string& text = first[i].response->text;
      PassOutcome outcome = grade_text(text, *t.problem);
      if (outcome.graded) {
        chunk[i].continuation = text;
        chunk[i].extracted = outcome.extracted;
        chunk[i].correct = outcome.correct;
        chunk[i].pass = PassKind::first;
      } else {
        StudentCall fc = calls[i];
        fc.request.messages.back().content +=
            text + prompts::forcing_string(t.problem->dataset);
        fc.request.max_new_tokens = opts.force_budget;
        need_force.push_back(i);
        forced_calls.push_back(std::move(fc));
        chunk[i].continuation = text;  // provisional; forced pass appends
      }
    }

    if (!forced_calls.empty()) {
      auto forced = student.complete_batch(forced_calls, opts.max_in_flight);
      for (size_t j = 0; j < need_force.size(); ++j) {
        size_t i = need_force[j];
        const Task& t = tasks[base + i];
        if (!forced[j].ok()) {
          chunk[i].error = forced[j].error;
          continue;
        }
        chunk[i].tokens_used += forced[j].response->usage.completion_tokens;
        const std::string& force =
            prompts::forcing_string(t.problem->dataset);
        const std::string& forced_text = forced[j].response->text;
        chunk[i].continuation += force + forced_text;
        PassOutcome outcome = grade_text(force + forced_text, *t.problem);
        if (outcome.graded) {
          chunk[i].extracted = outcome.extracted;
          chunk[i].correct = outcome.correct;
          chunk[i].pass = PassKind::forced;
        }
      }
    }

    for (auto& r : chunk) {
      if (sink) sink(r);
      records.push_back(std::move(r));
    }
  }
  return records;
}

tu::RolloutObservation to_observation(const RolloutRecord& r) {
  tu::RolloutObservation obs;
  obs.trace_id = r.trace_id;
  obs.k = r.k;
  obs.m = r.m;
  obs.student_id = r.student_id;
  obs.correct = r.correct;
  return obs;
}

std::string record_to_jsonl(const RolloutRecord& r) {
  nlohmann::ordered_json rec;
  rec["trace_id"] = r.trace_id;
  rec["k"] = r.k;
  rec["m"] = r.m;
  rec["relative_depth"] = r.relative_depth;
  rec["student_id"] = r.student_id;
  rec["pass"] = pass_name(r.pass);
  rec["correct"] = r.correct;
  rec["continuation_sha256"] = util::sha256_hex(r.continuation);
  return rec.dump();
}

RolloutRecord record_from_jsonl(const std::string& line) {
  auto rec = nlohmann::ordered_json::parse(line);
  RolloutRecord r;
  r.trace_id = rec.at("trace_id").get<std::string>();
  r.k = rec.at("k").get<int>();
  r.m = rec.at("m").get<int>();
  r.relative_depth = rec.at("relative_depth").get<double>();
  r.student_id = rec.at("student_id").get<std::string>();
  r.pass = pass_from_name(rec.at("pass").get<std::string>());
  r.correct = rec.at("correct").get<bool>();
  return r;
}

}  // namespace legival::rollout
