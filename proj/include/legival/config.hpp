#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "legival/corpus.hpp"
#include "legival/inference.hpp"

namespace legival::cli {

struct DatasetPaths {
  corpus::Dataset dataset = corpus::Dataset::math;
  std::string problems_path;
  std::string traces_path;
};

// Resolved run settings: config file values overlaid by CLI flags.
// Defaults mirror the published pipeline settings (tau 0.8, interval 3,
// 50 bins, 1024-token students, 100-token forced pass).
struct RunConfig {
  std::vector<DatasetPaths> datasets;
  std::map<std::string, inference::Endpoint> endpoints;

  std::vector<std::string> teacher_filter;  // empty = all teachers
  std::vector<std::string> students;        // endpoint ids; first is primary
  std::string judge_endpoint;
  std::string embedder_endpoint;
  std::vector<std::string> scorer_endpoints;

  double redundancy_tau = 0.8;
  bool redundancy_denominator_m_minus_1 = false;
  int step_interval = 3;
  int bins = 50;
  bool zero_bin = false;
  bool include_full_trace = false;
  bool exact_bytes = false;
  int student_budget = 1024;
  int force_budget = 100;
  int max_in_flight = 8;
  int retries = 3;
  int backoff_ms = 1000;
  std::string tokenizer = "heuristic";
  std::string cache_dir;  // empty disables the response cache
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

// Parses the declarative key-value config file ('key = value' lines,
// '#' comments; endpoints and datasets use dotted keys). Unknown keys
// are a ConfigError so typos fail fast.
RunConfig load_config(const std::string& path);

// Cross-field validation: tau in (0,1), interval >= 1, every referenced
// endpoint id defined with the right kind. Runs before any network
// activity. Throws ConfigError.
void validate_config(const RunConfig& cfg);

// SHA-256 over the canonicalized resolved config; stamped into every
// emitted file.
std::string config_hash(const RunConfig& cfg);

// Canonical key=value rendering (sorted), the hash preimage.
std::string canonical_config(const RunConfig& cfg);

}  // namespace legival::cli
