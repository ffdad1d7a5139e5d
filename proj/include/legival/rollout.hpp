#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "legival/corpus.hpp"
#include "legival/grading.hpp"
#include "legival/inference.hpp"
#include "legival/tumetrics.hpp"

namespace legival::rollout {

// Prefix depths 0, interval, 2*interval, ... below m, with m-1 appended
// when absent so the deepest usable prefix is always sampled. The k=m
// full-trace variant is opt-in: the final step usually carries the
// answer outright.
std::vector<int> sample_rollout_depths(int m, int interval,
                                       bool include_full_trace = false);

struct RolloutOptions {
  std::string student_endpoint;
  int student_budget = 1024;
  int force_budget = 100;
  int interval = 3;
  bool include_full_trace = false;
  // Join prefix steps with single spaces (default) or slice the raw
  // reasoning bytes exactly.
  bool exact_bytes = false;
  int max_in_flight = 4;
  std::uint64_t seed = 0;
};

// Prefix text for steps 1..k under the chosen join mode; empty at k=0.
std::string prefix_text(const corpus::ReasoningTrace& trace, int k,
                        bool exact_bytes = false);

// messages = [system: dataset prompt, user: problem statement,
// assistant: steps 1..k]; continuation is requested even at k=0.
inference::ChatRequest build_prefix_messages(const corpus::Problem& problem,
                                             const corpus::ReasoningTrace& trace,
                                             int k, const RolloutOptions& opts);

enum class PassKind { first, forced, failed };

const char* pass_name(PassKind p);
PassKind pass_from_name(const std::string& name);

struct RolloutRecord {
  std::string trace_id;
  int k = 0;
  int m = 1;
  double relative_depth = 0.0;
  std::string student_id;
  std::string continuation;
  grading::ExtractedAnswer extracted;
  bool correct = false;
  PassKind pass = PassKind::failed;
  int tokens_used = 0;
  std::string error;  // inference failure note, empty otherwise
};

struct StudentCall {
  const corpus::Problem* problem = nullptr;
  const corpus::ReasoningTrace* trace = nullptr;
  int k = 0;
  inference::ChatRequest request;
};

// A continuation source: the wire client or the in-process scripted
// student used as the transfer-utility test oracle.
class Student {
 public:
  virtual ~Student() = default;
  virtual std::string id() const = 0;
  virtual std::vector<inference::InferenceClient::BatchItem> complete_batch(
      const std::vector<StudentCall>& calls, int max_in_flight) = 0;
};

class EndpointStudent : public Student {
 public:
  EndpointStudent(inference::InferenceClient& client, std::string endpoint_id)
      : client_(client), endpoint_id_(std::move(endpoint_id)) {}
  std::string id() const override { return endpoint_id_; }
  std::vector<inference::InferenceClient::BatchItem> complete_batch(
      const std::vector<StudentCall>& calls, int max_in_flight) override;

 private:
  inference::InferenceClient& client_;
  std::string endpoint_id_;
};

// Deterministic student: answers with the problem's gold answer exactly
// when k/m >= reveal_depth, otherwise with a graded-incorrect
// placeholder. Optional seeded noise flips correctness per (trace, k).
struct ScriptedStudentSpec {
  double reveal_depth = 0.5;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

class ScriptedStudent : public Student {
 public:
  explicit ScriptedStudent(ScriptedStudentSpec spec,
                           std::string id = "scripted-student")
      : spec_(spec), id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::vector<inference::InferenceClient::BatchItem> complete_batch(
      const std::vector<StudentCall>& calls, int max_in_flight) override;

 private:
  ScriptedStudentSpec spec_;
  std::string id_;
};

// One prefix continuation with two-pass grading: the first pass grades
// the raw continuation; when nothing extractable comes back, the dataset
// forcing string is appended to the assistant text and the student
// regenerates within force_budget tokens.
RolloutRecord run_student(Student& student, const corpus::Problem& problem,
                          const corpus::ReasoningTrace& trace, int k,
                          const RolloutOptions& opts);

using RecordSink = std::function<void(const RolloutRecord&)>;

// Rollouts at every sampled depth for every teacher-correct trace.
// Throws DataError when handed an incorrect teacher trace. `done` skips
// (trace_id, k) pairs already persisted; records stream to `sink` in
// deterministic (trace order, depth order) sequence.
std::vector<RolloutRecord> run_transfer(
    const corpus::Corpus& corpus,
    const std::vector<const corpus::ReasoningTrace*>& traces, Student& student,
    const RolloutOptions& opts,
    const std::set<std::pair<std::string, int>>& done = {},
    const RecordSink& sink = nullptr);

tu::RolloutObservation to_observation(const RolloutRecord& r);

// External-interface JSONL line: continuation stored out-of-line, keyed
// by its SHA-256.
std::string record_to_jsonl(const RolloutRecord& r);
RolloutRecord record_from_jsonl(const std::string& line);

}  // namespace legival::rollout
