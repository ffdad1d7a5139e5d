#pragma once

#include <optional>
#include <string>
#include <vector>

#include "legival/config.hpp"
#include "legival/corpus.hpp"

namespace legival::cli {

// Per-trace efficiency record persisted by cmd_efficiency and joined by
// cmd_report.
struct TraceEfficiencyRow {
  std::string trace_id;
  std::string teacher_id;
  std::string problem_id;
  bool teacher_correct = false;
  int tokens = 0;
  int steps = 0;
  double token_efficiency = 0.0;
  double step_efficiency = 0.0;
  std::optional<double> normalized_token_len;
  std::optional<double> normalized_step_len;
  double redundancy = 0.0;
};

struct VerdictRow {
  std::string trace_id;
  bool failed = false;
  std::string error;
  bool detected = false;
  int count = 0;
  double proportion = 0.0;
  double confidence = 0.0;
  std::vector<std::string> flags;
  int retries = 0;
};

struct TuRow {
  std::string trace_id;
  std::string student_id;
  std::optional<double> fotu;
  std::optional<int> rr_count;
  std::optional<double> rr_proportion;
  std::optional<int> hazard_bin;
};

struct ScoreRow {
  std::string trace_id;
  std::string teacher_id;
  bool teacher_correct = false;
  std::string scorer;
  double score = 0.0;
};

// Output locations under cfg.out_dir; every command writes through these.
std::string dataset_dir(const RunConfig& cfg, corpus::Dataset ds);
std::string report_dir(const RunConfig& cfg);

// Subcommand bodies. Errors surface as ConfigError / DataError /
// TransportError exceptions; the CLI main maps them to exit codes.
void cmd_ingest(const RunConfig& cfg);
void cmd_efficiency(const RunConfig& cfg);
void cmd_judge(const RunConfig& cfg);
void cmd_rollout(const RunConfig& cfg);
void cmd_tu(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg);
void cmd_stats_agreement(const RunConfig& cfg, const std::string& labels_csv,
                         const std::string& verdicts_path);
void cmd_stats_rm(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

// Row-level readers used by cmd_report and the tests.
std::vector<TraceEfficiencyRow> read_efficiency_rows(const std::string& path);
std::vector<VerdictRow> read_verdict_rows(const std::string& path);
std::vector<TuRow> read_tu_rows(const std::string& path);
std::vector<ScoreRow> read_score_rows(const std::string& path);

// Label file: CSV of trace_id,annotator_id,count.
struct LabelRow {
  std::string trace_id;
  std::string annotator_id;
  int count = 0;
};
std::vector<LabelRow> read_label_rows(const std::string& path);

}  // namespace legival::cli
