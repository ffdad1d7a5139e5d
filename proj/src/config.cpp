#include "legival/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "legival/errors.hpp"
#include "legival/util.hpp"

namespace legival::cli {
namespace {

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" +
                      value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" +
                      value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" +
                    value + "'");
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto& item : util::split(value, ',')) {
    auto trimmed = util::trim(item);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  RunConfig cfg;
  std::map<std::string, DatasetPaths> datasets;  // keyed by dataset name
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto stripped = util::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    std::string key(util::trim(stripped.substr(0, eq)));
    std::string value(util::trim(stripped.substr(eq + 1)));

    auto parts = util::split(key, '.');
    if (parts[0] == "dataset" && parts.size() == 3) {
      auto& dp = datasets[parts[1]];
      dp.dataset = corpus::dataset_from_name(parts[1]);
      if (parts[2] == "problems") {
        dp.problems_path = value;
      } else if (parts[2] == "traces") {
        dp.traces_path = value;
      } else {
        throw ConfigError("unknown dataset key: " + key);
      }
      continue;
    }
    if (parts[0] == "endpoint" && parts.size() == 3) {
      auto& ep = cfg.endpoints[parts[1]];
      ep.id = parts[1];
      if (parts[2] == "url") {
        ep.base_url = value;
      } else if (parts[2] == "kind") {
        ep.kind = value;
      } else if (parts[2] == "model") {
        ep.model = value;
      } else {
        throw ConfigError("unknown endpoint key: " + key);
      }
      continue;
    }

    if (key == "teachers") {
      cfg.teacher_filter = parse_list(value);
    } else if (key == "students") {
      cfg.students = parse_list(value);
    } else if (key == "judge") {
      cfg.judge_endpoint = value;
    } else if (key == "embedder") {
      cfg.embedder_endpoint = value;
    } else if (key == "scorers") {
      cfg.scorer_endpoints = parse_list(value);
    } else if (key == "redundancy_tau") {
      cfg.redundancy_tau = parse_double(key, value);
    } else if (key == "redundancy_denominator") {
      if (value == "m") {
        cfg.redundancy_denominator_m_minus_1 = false;
      } else if (value == "m-1") {
        cfg.redundancy_denominator_m_minus_1 = true;
      } else {
        throw ConfigError("redundancy_denominator must be 'm' or 'm-1'");
      }
    } else if (key == "step_interval") {
      cfg.step_interval = static_cast<int>(parse_long(key, value));
    } else if (key == "bins") {
      cfg.bins = static_cast<int>(parse_long(key, value));
    } else if (key == "zero_bin") {
      cfg.zero_bin = parse_bool(key, value);
    } else if (key == "include_full_trace") {
      cfg.include_full_trace = parse_bool(key, value);
    } else if (key == "exact_bytes") {
      cfg.exact_bytes = parse_bool(key, value);
    } else if (key == "student_budget") {
      cfg.student_budget = static_cast<int>(parse_long(key, value));
    } else if (key == "force_budget") {
      cfg.force_budget = static_cast<int>(parse_long(key, value));
    } else if (key == "max_in_flight") {
      cfg.max_in_flight = static_cast<int>(parse_long(key, value));
    } else if (key == "retries") {
      cfg.retries = static_cast<int>(parse_long(key, value));
    } else if (key == "backoff_ms") {
      cfg.backoff_ms = static_cast<int>(parse_long(key, value));
    } else if (key == "tokenizer") {
      cfg.tokenizer = value;
    } else if (key == "cache_dir") {
      cfg.cache_dir = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": unknown config key '" + key + "'");
    }
  }

  for (auto& [name, dp] : datasets) {
    if (dp.problems_path.empty() || dp.traces_path.empty())
      throw ConfigError("dataset '" + name +
                        "' needs both .problems and .traces paths");
    cfg.datasets.push_back(dp);
  }
  std::sort(cfg.datasets.begin(), cfg.datasets.end(),
            [](const DatasetPaths& a, const DatasetPaths& b) {
              return a.dataset < b.dataset;
            });
  return cfg;
}

namespace {

void require_endpoint(const RunConfig& cfg, const std::string& id,
                      const std::string& role, const std::string& kind) {
  auto it = cfg.endpoints.find(id);
  if (it == cfg.endpoints.end())
    throw ConfigError(role + " references undefined endpoint '" + id + "'");
  if (it->second.base_url.empty())
    throw ConfigError("endpoint '" + id + "' has no url");
  if (!it->second.kind.empty() && it->second.kind != kind)
    throw ConfigError("endpoint '" + id + "' has kind '" + it->second.kind +
                      "', " + role + " needs '" + kind + "'");
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  if (!(cfg.redundancy_tau > 0.0 && cfg.redundancy_tau < 1.0))
    throw ConfigError("redundancy_tau must be in (0,1)");
  if (cfg.step_interval < 1) throw ConfigError("step_interval must be >= 1");
  if (cfg.bins < 1) throw ConfigError("bins must be >= 1");
  if (cfg.student_budget < 1) throw ConfigError("student_budget must be >= 1");
  if (cfg.force_budget < 1) throw ConfigError("force_budget must be >= 1");
  if (cfg.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (cfg.retries < 1) throw ConfigError("retries must be >= 1");
  for (const auto& s : cfg.students) require_endpoint(cfg, s, "student", "chat");
  if (!cfg.judge_endpoint.empty())
    require_endpoint(cfg, cfg.judge_endpoint, "judge", "chat");
  if (!cfg.embedder_endpoint.empty())
    require_endpoint(cfg, cfg.embedder_endpoint, "embedder", "embed");
  for (const auto& s : cfg.scorer_endpoints)
    require_endpoint(cfg, s, "scorer", "score");
}

std::string canonical_config(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  for (const auto& dp : cfg.datasets) {
    std::string name = corpus::dataset_name(dp.dataset);
    kv["dataset." + name + ".problems"] = dp.problems_path;
    kv["dataset." + name + ".traces"] = dp.traces_path;
  }
  for (const auto& [id, ep] : cfg.endpoints) {
    kv["endpoint." + id + ".url"] = ep.base_url;
    kv["endpoint." + id + ".kind"] = ep.kind;
    kv["endpoint." + id + ".model"] = ep.model;
  }
  auto join = [](const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
      if (i) out += ',';
      out += items[i];
    }
    return out;
  };
  kv["teachers"] = join(cfg.teacher_filter);
  kv["students"] = join(cfg.students);
  kv["judge"] = cfg.judge_endpoint;
  kv["embedder"] = cfg.embedder_endpoint;
  kv["scorers"] = join(cfg.scorer_endpoints);
  kv["redundancy_tau"] = util::format_fixed(cfg.redundancy_tau, 6);
  kv["redundancy_denominator"] =
      cfg.redundancy_denominator_m_minus_1 ? "m-1" : "m";
  kv["step_interval"] = std::to_string(cfg.step_interval);
  kv["bins"] = std::to_string(cfg.bins);
  kv["zero_bin"] = cfg.zero_bin ? "true" : "false";
  kv["include_full_trace"] = cfg.include_full_trace ? "true" : "false";
  kv["exact_bytes"] = cfg.exact_bytes ? "true" : "false";
  kv["student_budget"] = std::to_string(cfg.student_budget);
  kv["force_budget"] = std::to_string(cfg.force_budget);
  kv["max_in_flight"] = std::to_string(cfg.max_in_flight);
  kv["retries"] = std::to_string(cfg.retries);
  kv["backoff_ms"] = std::to_string(cfg.backoff_ms);
  kv["tokenizer"] = cfg.tokenizer;
  kv["cache_dir"] = cfg.cache_dir;
  kv["out_dir"] = cfg.out_dir;
  kv["seed"] = std::to_string(cfg.seed);

  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  return out.str();
}

std::string config_hash(const RunConfig& cfg) {
  return util::sha256_hex(canonical_config(cfg));
}

}  // namespace legival::cli
