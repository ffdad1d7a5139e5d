#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "legival/commands.hpp"
#include "legival/efficiency.hpp"
#include "legival/errors.hpp"
#include "legival/judge.hpp"
#include "legival/jsonl.hpp"
#include "legival/prompts.hpp"
#include "legival/rollout.hpp"
#include "legival/stats.hpp"
#include "legival/tumetrics.hpp"
#include "legival/util.hpp"

namespace legival::cli {

namespace fs = std::filesystem;
using jsonl::json;

std::string dataset_dir(const RunConfig& cfg, corpus::Dataset ds) {
  return cfg.out_dir + "/" + corpus::dataset_name(ds);
}

std::string report_dir(const RunConfig& cfg) { return cfg.out_dir + "/report"; }

namespace {

std::string fmt(double v) { return util::format_fixed(v, 6); }
std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : "";
}

corpus::Corpus load_corpus(const RunConfig& cfg, const DatasetPaths& dp) {
  auto counter = corpus::TokenCounter::from_spec(cfg.tokenizer);
  corpus::Corpus c = corpus::ingest_corpus(dp.problems_path, dp.traces_path,
                                           dp.dataset, counter);
  if (!cfg.teacher_filter.empty()) {
    std::set<std::string> keep(cfg.teacher_filter.begin(),
                               cfg.teacher_filter.end());
    std::vector<corpus::ReasoningTrace> filtered;
    for (auto& t : c.traces) {
      if (keep.count(t.teacher_id)) filtered.push_back(std::move(t));
    }
    c.traces = std::move(filtered);
  }
  return c;
}

std::shared_ptr<inference::DiskCache> make_cache(const RunConfig& cfg) {
  if (cfg.cache_dir.empty()) return nullptr;
  return std::make_shared<inference::DiskCache>(cfg.cache_dir);
}

inference::InferenceClient make_client(const RunConfig& cfg) {
  std::vector<inference::Endpoint> eps;
  for (const auto& [id, ep] : cfg.endpoints) eps.push_back(ep);
  inference::RetryPolicy retry{cfg.retries, cfg.backoff_ms};
  return inference::InferenceClient(std::move(eps), retry, make_cache(cfg));
}

tu::BinningScheme scheme_of(const RunConfig& cfg) {
  return tu::BinningScheme{cfg.bins, cfg.zero_bin};
}

void write_text(const std::string& path, const std::string& content) {
  util::write_file_atomic(path, content);
}

// Per-trace step embeddings, one request per trace.
std::vector<efficiency::Embedding> embed_steps(
    inference::InferenceClient& client, const RunConfig& cfg,
    const corpus::ReasoningTrace& trace) {
  std::vector<std::string> texts;
  texts.reserve(trace.steps.size());
  for (const auto& s : trace.steps) texts.push_back(s.text);
  return client.embed(texts, cfg.embedder_endpoint);
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// ingest

void cmd_ingest(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  std::string hash = config_hash(cfg);
  for (const auto& dp : cfg.datasets) {
    corpus::Corpus c = load_corpus(cfg, dp);
    std::string dir = dataset_dir(cfg, dp.dataset);
    fs::create_directories(dir);
    write_text(dir + "/problems.jsonl", jsonl::meta_record(hash).dump() + "\n" +
                                            corpus::serialize_problems(c));
    write_text(dir + "/traces.jsonl", jsonl::meta_record(hash).dump() + "\n" +
                                          corpus::serialize_traces(c));

    std::map<std::string, int> per_teacher;
    std::map<std::string, int> correct_per_teacher;
    for (const auto& t : c.traces) {
      ++per_teacher[t.teacher_id];
      if (t.teacher_correct) ++correct_per_teacher[t.teacher_id];
    }
    json stats;
    stats["dataset"] = corpus::dataset_name(dp.dataset);
    stats["problems"] = c.problems.size();
    stats["traces"] = c.traces.size();
    stats["traces_per_teacher"] = per_teacher;
    stats["correct_per_teacher"] = correct_per_teacher;
    stats["unclosed_math_traces"] = c.unclosed_math_traces;
    stats["tokenizer"] = cfg.tokenizer;
    stats["config_sha256"] = hash;
    write_text(dir + "/corpus_stats.json", stats.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// efficiency

void cmd_efficiency(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.embedder_endpoint.empty())
    throw ConfigError("efficiency requires an embedder endpoint");
  auto client = make_client(cfg);
  std::string hash = config_hash(cfg);

  for (const auto& dp : cfg.datasets) {
    corpus::Corpus c = load_corpus(cfg, dp);
    auto medians = corpus::correct_trace_medians(c);

    json meta = jsonl::meta_record(hash);
    meta["_meta"]["tokenizer"] = cfg.tokenizer;
    meta["_meta"]["redundancy_tau"] = cfg.redundancy_tau;
    std::string out = meta.dump() + "\n";

    std::map<std::string, std::vector<const TraceEfficiencyRow*>> by_teacher;
    std::vector<TraceEfficiencyRow> rows;
    rows.reserve(c.traces.size());
    for (const auto& t : c.traces) {
      auto emb = embed_steps(client, cfg, t);
      auto profile = efficiency::redundancy_profile(emb);
      auto eff = corpus::length_efficiency(t, medians);
      TraceEfficiencyRow row;
      row.trace_id = t.trace_id;
      row.teacher_id = t.teacher_id;
      row.problem_id = t.problem_id;
      row.teacher_correct = t.teacher_correct;
      row.tokens = t.token_count;
      row.steps = t.step_count;
      row.token_efficiency = eff.token_efficiency;
      row.step_efficiency = eff.step_efficiency;
      row.normalized_token_len = eff.normalized_token_len;
      row.normalized_step_len = eff.normalized_step_len;
      row.redundancy =
          efficiency::redundancy_score(profile, cfg.redundancy_tau, t.step_count,
                                       cfg.redundancy_denominator_m_minus_1);
      rows.push_back(row);
    }

    for (const auto& row : rows) {
      json rec;
      rec["trace_id"] = row.trace_id;
      rec["teacher_id"] = row.teacher_id;
      rec["problem_id"] = row.problem_id;
      rec["teacher_correct"] = row.teacher_correct;
      rec["tokens"] = row.tokens;
      rec["steps"] = row.steps;
      rec["token_efficiency"] = row.token_efficiency;
      rec["step_efficiency"] = row.step_efficiency;
      if (row.normalized_token_len)
        rec["normalized_token_len"] = *row.normalized_token_len;
      if (row.normalized_step_len)
        rec["normalized_step_len"] = *row.normalized_step_len;
      rec["redundancy"] = row.redundancy;
      out += rec.dump() + "\n";
      by_teacher[row.teacher_id].push_back(&row);
    }

    std::string dir = dataset_dir(cfg, dp.dataset);
    fs::create_directories(dir);
    write_text(dir + "/efficiency.jsonl", out);

    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "teacher_id,traces,accuracy,median_tokens,median_steps,"
           "mean_token_efficiency,mean_step_efficiency,mean_redundancy\n";
    for (const auto& [teacher, trows] : by_teacher) {
      std::vector<double> tokens, steps, teff, seff, red;
      int correct = 0;
      for (const auto* r : trows) {
        tokens.push_back(r->tokens);
        steps.push_back(r->steps);
        teff.push_back(r->token_efficiency);
        seff.push_back(r->step_efficiency);
        red.push_back(r->redundancy);
        correct += r->teacher_correct ? 1 : 0;
      }
      csv << teacher << "," << trows.size() << ","
          << fmt(static_cast<double>(correct) / trows.size()) << ","
          << fmt(*util::median(tokens)) << "," << fmt(*util::median(steps))
          << "," << fmt(*mean_of(teff)) << "," << fmt(*mean_of(seff)) << ","
          << fmt(*mean_of(red)) << "\n";
    }
    write_text(dir + "/efficiency_models.csv", csv.str());
  }
}

std::vector<TraceEfficiencyRow> read_efficiency_rows(const std::string& path) {
  std::vector<TraceEfficiencyRow> rows;
  jsonl::for_each_record(path, [&](const json& rec, int) {
    TraceEfficiencyRow row;
    row.trace_id = rec.at("trace_id").get<std::string>();
    row.teacher_id = rec.at("teacher_id").get<std::string>();
    row.problem_id = rec.at("problem_id").get<std::string>();
    row.teacher_correct = rec.at("teacher_correct").get<bool>();
    row.tokens = rec.at("tokens").get<int>();
    row.steps = rec.at("steps").get<int>();
    row.token_efficiency = rec.at("token_efficiency").get<double>();
    row.step_efficiency = rec.at("step_efficiency").get<double>();
    if (rec.contains("normalized_token_len"))
      row.normalized_token_len = rec["normalized_token_len"].get<double>();
    if (rec.contains("normalized_step_len"))
      row.normalized_step_len = rec["normalized_step_len"].get<double>();
    row.redundancy = rec.at("redundancy").get<double>();
    rows.push_back(std::move(row));
  });
  return rows;
}

// ---------------------------------------------------------------------------
// judge

void cmd_judge(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.judge_endpoint.empty())
    throw ConfigError("judge requires a judge endpoint");
  auto client = make_client(cfg);
  std::string hash = config_hash(cfg);

  for (const auto& dp : cfg.datasets) {
    corpus::Corpus c = load_corpus(cfg, dp);

    std::vector<inference::ChatRequest> reqs;
    reqs.reserve(c.traces.size());
    for (const auto& t : c.traces) {
      inference::ChatRequest req;
      req.endpoint_id = cfg.judge_endpoint;
      req.max_new_tokens = 2048;
      req.temperature = 0.0;
      req.messages = {{"system", judge::build_judge_prompt(dp.dataset)},
                      {"user", judge::format_trace_for_judge(t)}};
      reqs.push_back(std::move(req));
    }
    auto first = client.run_batch(reqs, cfg.max_in_flight);

    // Failed parses get one repair retry, batched like the first pass.
    std::vector<std::optional<judge::JudgeVerdict>> verdicts(reqs.size());
    std::vector<std::string> errors(reqs.size());
    std::vector<size_t> repair_idx;
    std::vector<inference::ChatRequest> repair_reqs;
    for (size_t i = 0; i < reqs.size(); ++i) {
      if (!first[i].ok()) {
        errors[i] = first[i].error;
        continue;
      }
      verdicts[i] =
          judge::parse_verdict(first[i].response->text, c.traces[i].step_count);
      if (!verdicts[i]) {
        inference::ChatRequest repair = reqs[i];
        repair.messages.push_back({"assistant", first[i].response->text});
        repair.messages.push_back(
            {"user",
             "Your previous response was not valid JSON. Respond with only "
             "the JSON object."});
        repair_idx.push_back(i);
        repair_reqs.push_back(std::move(repair));
      } else {
        verdicts[i]->raw_text = first[i].response->text;
      }
    }
    if (!repair_reqs.empty()) {
      auto second = client.run_batch(repair_reqs, cfg.max_in_flight);
      for (size_t j = 0; j < repair_idx.size(); ++j) {
        size_t i = repair_idx[j];
        if (!second[j].ok()) {
          errors[i] = second[j].error;
          continue;
        }
        verdicts[i] = judge::parse_verdict(second[j].response->text,
                                           c.traces[i].step_count);
        if (verdicts[i]) {
          verdicts[i]->retries = 1;
          verdicts[i]->raw_text = second[j].response->text;
        } else {
          errors[i] = "judge response unparsable after repair retry";
        }
      }
    }

    std::string out = jsonl::meta_record(hash).dump() + "\n";
    for (size_t i = 0; i < c.traces.size(); ++i) {
      const auto& t = c.traces[i];
      json rec;
      rec["trace_id"] = t.trace_id;
      if (verdicts[i]) {
        const auto& v = *verdicts[i];
        rec["failed"] = false;
        rec["backtracking_detected"] = v.backtracking_detected;
        json steps = json::array();
        for (const auto& s : v.backtracking_steps)
          steps.push_back(
              {{"step_number", s.step_number}, {"reason", s.reason}});
        rec["backtracking_steps"] = steps;
        rec["confidence"] = v.confidence;
        rec["overall_reasoning"] = v.overall_reasoning;
        rec["proportion"] = judge::backtracking_proportion(v, t.step_count);
        rec["flags"] = v.flags;
        rec["retries"] = v.retries;
        rec["raw_text"] = v.raw_text;
      } else {
        rec["failed"] = true;
        rec["error"] = errors[i];
      }
      out += rec.dump() + "\n";
    }
    std::string dir = dataset_dir(cfg, dp.dataset);
    fs::create_directories(dir);
    write_text(dir + "/verdicts.jsonl", out);
  }
}

std::vector<VerdictRow> read_verdict_rows(const std::string& path) {
  std::vector<VerdictRow> rows;
  jsonl::for_each_record(path, [&](const json& rec, int) {
    VerdictRow row;
    row.trace_id = rec.at("trace_id").get<std::string>();
    row.failed = rec.value("failed", false);
    if (row.failed) {
      row.error = rec.value("error", "");
    } else {
      row.detected = rec.at("backtracking_detected").get<bool>();
      row.count = static_cast<int>(rec.at("backtracking_steps").size());
      row.proportion = rec.at("proportion").get<double>();
      row.confidence = rec.value("confidence", 0.0);
      row.retries = rec.value("retries", 0);
      if (rec.contains("flags"))
        row.flags = rec["flags"].get<std::vector<std::string>>();
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

// ---------------------------------------------------------------------------
// rollout

namespace {

std::set<std::tuple<std::string, int, std::string>> read_done_rollouts(
    const std::string& path) {
  std::set<std::tuple<std::string, int, std::string>> done;
  if (!fs::exists(path)) return done;
  jsonl::for_each_record(path, [&](const json& rec, int) {
    done.insert({rec.at("trace_id").get<std::string>(),
                 rec.at("k").get<int>(),
                 rec.at("student_id").get<std::string>()});
  });
  return done;
}

void write_blob(const std::string& blob_dir, const std::string& content) {
  std::string digest = util::sha256_hex(content);
  std::string path =
      blob_dir + "/" + digest.substr(0, 2) + "/" + digest + ".txt";
  if (!fs::exists(path)) util::write_file_atomic(path, content);
}

}  // namespace

void cmd_rollout(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.students.empty())
    throw ConfigError("rollout requires at least one student endpoint");
  auto client = make_client(cfg);
  std::string hash = config_hash(cfg);

  for (const auto& dp : cfg.datasets) {
    corpus::Corpus c = load_corpus(cfg, dp);
    std::vector<const corpus::ReasoningTrace*> correct;
    for (const auto& t : c.traces) {
      if (t.teacher_correct) correct.push_back(&t);
    }

    std::string dir = dataset_dir(cfg, dp.dataset);
    fs::create_directories(dir);
    std::string path = dir + "/rollouts.jsonl";
    std::string blob_dir = dir + "/blobs";
    auto done = read_done_rollouts(path);

    bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for append");
    if (fresh) out << jsonl::meta_record(hash).dump() << "\n";

    rollout::RolloutOptions opts;
    opts.student_budget = cfg.student_budget;
    opts.force_budget = cfg.force_budget;
    opts.interval = cfg.step_interval;
    opts.include_full_trace = cfg.include_full_trace;
    opts.exact_bytes = cfg.exact_bytes;
    opts.max_in_flight = cfg.max_in_flight;
    opts.seed = cfg.seed;

    for (const auto& student_id : cfg.students) {
      opts.student_endpoint = student_id;
      rollout::EndpointStudent student(client, student_id);
      std::set<std::pair<std::string, int>> student_done;
      for (const auto& [trace, k, sid] : done) {
        if (sid == student_id) student_done.insert({trace, k});
      }
      rollout::run_transfer(
          c, correct, student, opts, student_done,
          [&](const rollout::RolloutRecord& r) {
            out << rollout::record_to_jsonl(r) << "\n";
            out.flush();
            write_blob(blob_dir, r.continuation);
          });
    }
  }
}

// ---------------------------------------------------------------------------
// tu

void cmd_tu(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  std::string hash = config_hash(cfg);
  tu::BinningScheme scheme = scheme_of(cfg);

  for (const auto& dp : cfg.datasets) {
    std::string dir = dataset_dir(cfg, dp.dataset);
    std::string rollout_path = dir + "/rollouts.jsonl";
    if (!fs::exists(rollout_path))
      throw DataError("missing rollout file: " + rollout_path);

    corpus::Corpus c = load_corpus(cfg, dp);
    std::map<std::string, std::string> teacher_of;
    for (const auto& t : c.traces) teacher_of[t.trace_id] = t.teacher_id;

    std::vector<tu::RolloutObservation> observations;
    jsonl::for_each_record(rollout_path, [&](const json& rec, int) {
      tu::RolloutObservation obs;
      obs.trace_id = rec.at("trace_id").get<std::string>();
      obs.k = rec.at("k").get<int>();
      obs.m = rec.at("m").get<int>();
      obs.student_id = rec.at("student_id").get<std::string>();
      obs.correct = rec.at("correct").get<bool>();
      observations.push_back(std::move(obs));
    });

    std::string out = jsonl::meta_record(hash).dump() + "\n";
    for (const auto& tm : tu::per_trace_metrics(observations, scheme)) {
      json rec;
      rec["trace_id"] = tm.trace_id;
      rec["student_id"] = tm.student_id;
      rec["fotu"] = tm.fotu ? json(*tm.fotu) : json(nullptr);
      rec["rr_count"] = tm.rr_count ? json(*tm.rr_count) : json(nullptr);
      rec["rr_prop"] = tm.rr_proportion ? json(*tm.rr_proportion) : json(nullptr);
      rec["hazard_bin"] = tm.hazard_bin ? json(*tm.hazard_bin) : json(nullptr);
      out += rec.dump() + "\n";
    }
    write_text(dir + "/tu.jsonl", out);

    // Per (teacher, student) aggregates.
    std::map<std::pair<std::string, std::string>,
             std::vector<tu::RolloutObservation>>
        grouped;
    for (const auto& obs : observations) {
      auto it = teacher_of.find(obs.trace_id);
      if (it == teacher_of.end())
        throw DataError("rollout references unknown trace '" + obs.trace_id +
                        "'");
      grouped[{it->second, obs.student_id}].push_back(obs);
    }
    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "teacher_id,student_id,traces,covered,fotu,sotu,regression_rate\n";
    for (const auto& [key, obs] : grouped) {
      auto gm = tu::group_metrics(obs, scheme);
      csv << key.first << "," << key.second << "," << gm.traces << ","
          << gm.covered << "," << fmt_opt(gm.mean_fotu) << ","
          << fmt_opt(gm.sotu) << "," << fmt_opt(gm.mean_rr) << "\n";
    }
    write_text(dir + "/tu_models.csv", csv.str());
  }
}

std::vector<TuRow> read_tu_rows(const std::string& path) {
  std::vector<TuRow> rows;
  jsonl::for_each_record(path, [&](const json& rec, int) {
    TuRow row;
    row.trace_id = rec.at("trace_id").get<std::string>();
    row.student_id = rec.at("student_id").get<std::string>();
    if (!rec.at("fotu").is_null()) row.fotu = rec["fotu"].get<double>();
    if (!rec.at("rr_count").is_null())
      row.rr_count = rec["rr_count"].get<int>();
    if (!rec.at("rr_prop").is_null())
      row.rr_proportion = rec["rr_prop"].get<double>();
    if (!rec.at("hazard_bin").is_null())
      row.hazard_bin = rec["hazard_bin"].get<int>();
    rows.push_back(std::move(row));
  });
  return rows;
}

// ---------------------------------------------------------------------------
// sweep

void cmd_sweep(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.embedder_endpoint.empty())
    throw ConfigError("sweep requires an embedder endpoint");
  auto client = make_client(cfg);
  std::string hash = config_hash(cfg);

  for (const auto& dp : cfg.datasets) {
    corpus::Corpus c = load_corpus(cfg, dp);
    std::vector<efficiency::TeacherProfile> profiles;
    for (const auto& t : c.traces) {
      efficiency::TeacherProfile tp;
      tp.teacher_id = t.teacher_id;
      tp.profile = efficiency::redundancy_profile(embed_steps(client, cfg, t));
      tp.step_count = t.step_count;
      profiles.push_back(std::move(tp));
    }
    auto sweep = efficiency::threshold_sweep(
        profiles, efficiency::default_sweep_thresholds());

    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "teacher_id";
    for (double tau : sweep.thresholds) csv << ",tau_" << util::format_fixed(tau, 2);
    csv << "\n";
    for (const auto& [teacher, means] : sweep.mean_scores) {
      csv << teacher;
      for (double v : means) csv << "," << fmt(v);
      csv << "\n";
    }
    csv << "rank_stability";
    for (size_t j = 0; j < sweep.thresholds.size(); ++j) {
      csv << ",";
      if (j > 0) csv << fmt(sweep.rank_stability[j]);
    }
    csv << "\n";
    std::string dir = dataset_dir(cfg, dp.dataset);
    fs::create_directories(dir);
    write_text(dir + "/sweep.csv", csv.str());
  }
}

// ---------------------------------------------------------------------------
// stats: agreement + reward models

std::vector<LabelRow> read_label_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path);
  std::vector<LabelRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto stripped = util::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto parts = util::split(stripped, ',');
    if (lineno == 1 && parts.size() >= 3 && parts[0] == "trace_id") continue;
    if (parts.size() != 3)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected trace_id,annotator_id,count");
    LabelRow row;
    row.trace_id = std::string(util::trim(parts[0]));
    row.annotator_id = std::string(util::trim(parts[1]));
    try {
      row.count = std::stoi(std::string(util::trim(parts[2])));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad count");
    }
    if (row.count < 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": negative count");
    rows.push_back(std::move(row));
  }
  return rows;
}

void cmd_stats_agreement(const RunConfig& cfg, const std::string& labels_csv,
                         const std::string& verdicts_path) {
  auto labels = read_label_rows(labels_csv);
  // annotator -> trace -> count
  std::map<std::string, std::map<std::string, int>> by_annotator;
  for (const auto& l : labels) by_annotator[l.annotator_id][l.trace_id] = l.count;
  if (!verdicts_path.empty()) {
    for (const auto& v : read_verdict_rows(verdicts_path)) {
      if (!v.failed) by_annotator["judge"][v.trace_id] = v.count;
    }
  }

  std::vector<std::string> annotators;
  for (const auto& [id, _] : by_annotator) annotators.push_back(id);
  if (annotators.size() < 2)
    throw DataError("agreement needs at least 2 annotators (including judge)");

  std::ostringstream csv;
  csv << jsonl::meta_comment(config_hash(cfg)) << "\n";
  csv << "annotator_a,annotator_b,n,spearman,kendall_tau,kappa_exact,"
         "kappa_binary\n";
  for (size_t i = 0; i < annotators.size(); ++i) {
    for (size_t j = i + 1; j < annotators.size(); ++j) {
      const auto& a = by_annotator[annotators[i]];
      const auto& b = by_annotator[annotators[j]];
      std::vector<int> va, vb;
      for (const auto& [trace, count] : a) {
        auto it = b.find(trace);
        if (it != b.end()) {
          va.push_back(count);
          vb.push_back(it->second);
        }
      }
      csv << annotators[i] << "," << annotators[j] << "," << va.size();
      if (va.size() >= 2) {
        auto s = stats::agreement_stats(va, vb);
        csv << "," << fmt_opt(s.spearman_rho) << "," << fmt_opt(s.kendall)
            << "," << fmt_opt(s.exact_kappa) << "," << fmt_opt(s.binary_kappa);
      } else {
        csv << ",,,,";
      }
      csv << "\n";
    }
  }
  fs::create_directories(report_dir(cfg));
  write_text(report_dir(cfg) + "/agreement.csv", csv.str());
}

void cmd_stats_rm(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.scorer_endpoints.empty())
    throw ConfigError("stats rm requires scorer endpoints");
  auto client = make_client(cfg);
  std::string hash = config_hash(cfg);

  for (const auto& dp : cfg.datasets) {
    corpus::Corpus c = load_corpus(cfg, dp);
    std::string out = jsonl::meta_record(hash).dump() + "\n";
    for (const auto& scorer : cfg.scorer_endpoints) {
      for (const auto& t : c.traces) {
        const corpus::Problem* p = c.find_problem(t.problem_id);
        std::string response = t.raw_reasoning;
        if (!t.final_answer_text.empty())
          response += "\n" + t.final_answer_text;
        double score = client.score_reward(p->statement, response, scorer);
        json rec;
        rec["trace_id"] = t.trace_id;
        rec["teacher_id"] = t.teacher_id;
        rec["teacher_correct"] = t.teacher_correct;
        rec["scorer"] = scorer;
        rec["score"] = score;
        out += rec.dump() + "\n";
      }
    }
    std::string dir = dataset_dir(cfg, dp.dataset);
    fs::create_directories(dir);
    write_text(dir + "/scores.jsonl", out);
  }
}

std::vector<ScoreRow> read_score_rows(const std::string& path) {
  std::vector<ScoreRow> rows;
  jsonl::for_each_record(path, [&](const json& rec, int) {
    ScoreRow row;
    row.trace_id = rec.at("trace_id").get<std::string>();
    row.teacher_id = rec.at("teacher_id").get<std::string>();
    row.teacher_correct = rec.at("teacher_correct").get<bool>();
    row.scorer = rec.at("scorer").get<std::string>();
    row.score = rec.at("score").get<double>();
    rows.push_back(std::move(row));
  });
  return rows;
}

// ---------------------------------------------------------------------------
// report

namespace {

struct DatasetBundle {
  std::string name;
  std::vector<TraceEfficiencyRow> efficiency;
  std::vector<VerdictRow> verdicts;          // may be empty
  std::vector<TuRow> tu;                     // per (trace, student)
  std::vector<ScoreRow> scores;              // may be empty
  std::vector<tu::RolloutObservation> observations;
  std::map<std::string, std::string> teacher_of;  // trace -> teacher
};

DatasetBundle load_bundle(const RunConfig& cfg, const DatasetPaths& dp) {
  DatasetBundle b;
  b.name = corpus::dataset_name(dp.dataset);
  std::string dir = dataset_dir(cfg, dp.dataset);
  std::string eff = dir + "/efficiency.jsonl";
  std::string tu_path = dir + "/tu.jsonl";
  std::string rollouts = dir + "/rollouts.jsonl";
  if (!fs::exists(eff))
    throw DataError("report requires " + eff + " (run 'efficiency' first)");
  if (!fs::exists(tu_path) || !fs::exists(rollouts))
    throw DataError("report requires " + tu_path + " and " + rollouts +
                    " (run 'rollout' then 'tu' first)");
  b.efficiency = read_efficiency_rows(eff);
  b.tu = read_tu_rows(tu_path);
  for (const auto& row : b.efficiency) b.teacher_of[row.trace_id] = row.teacher_id;
  std::string verdicts = dir + "/verdicts.jsonl";
  if (fs::exists(verdicts)) b.verdicts = read_verdict_rows(verdicts);
  std::string scores = dir + "/scores.jsonl";
  if (fs::exists(scores)) b.scores = read_score_rows(scores);
  jsonl::for_each_record(rollouts, [&](const json& rec, int) {
    tu::RolloutObservation obs;
    obs.trace_id = rec.at("trace_id").get<std::string>();
    obs.k = rec.at("k").get<int>();
    obs.m = rec.at("m").get<int>();
    obs.student_id = rec.at("student_id").get<std::string>();
    obs.correct = rec.at("correct").get<bool>();
    b.observations.push_back(std::move(obs));
  });
  return b;
}

// ModelReport per teacher for one dataset, TU metrics from one student.
std::vector<stats::ModelReport> dataset_reports(const RunConfig& cfg,
                                                const DatasetBundle& b,
                                                const std::string& student) {
  tu::BinningScheme scheme{cfg.bins, cfg.zero_bin};
  std::map<std::string, std::vector<const TraceEfficiencyRow*>> eff_by_teacher;
  for (const auto& row : b.efficiency)
    eff_by_teacher[row.teacher_id].push_back(&row);

  std::map<std::string, std::vector<double>> back_by_teacher;
  for (const auto& v : b.verdicts) {
    if (v.failed) continue;
    auto it = b.teacher_of.find(v.trace_id);
    if (it != b.teacher_of.end())
      back_by_teacher[it->second].push_back(v.proportion);
  }

  std::map<std::string, std::vector<tu::RolloutObservation>> obs_by_teacher;
  for (const auto& obs : b.observations) {
    if (obs.student_id != student) continue;
    auto it = b.teacher_of.find(obs.trace_id);
    if (it != b.teacher_of.end()) obs_by_teacher[it->second].push_back(obs);
  }

  std::map<std::string, std::vector<double>> scores_by_teacher;
  for (const auto& s : b.scores)
    scores_by_teacher[s.teacher_id].push_back(s.score);

  std::vector<stats::ModelReport> reports;
  for (const auto& [teacher, rows] : eff_by_teacher) {
    stats::ModelReport r;
    r.teacher_id = teacher;
    r.dataset = b.name;
    std::vector<double> tokens, red;
    int correct = 0;
    for (const auto* row : rows) {
      tokens.push_back(row->tokens);
      red.push_back(row->redundancy);
      correct += row->teacher_correct ? 1 : 0;
    }
    r.accuracy = static_cast<double>(correct) / rows.size();
    r.median_tokens = *util::median(tokens);
    r.mean_redundancy = mean_of(red);
    auto back_it = back_by_teacher.find(teacher);
    if (back_it != back_by_teacher.end())
      r.mean_backtracking = mean_of(back_it->second);
    auto obs_it = obs_by_teacher.find(teacher);
    if (obs_it != obs_by_teacher.end()) {
      auto gm = tu::group_metrics(obs_it->second, scheme);
      r.fotu = gm.mean_fotu;
      r.sotu = gm.sotu;
      r.regression_rate = gm.mean_rr;
    }
    auto sc_it = scores_by_teacher.find(teacher);
    if (sc_it != scores_by_teacher.end()) r.mean_reward = mean_of(sc_it->second);
    reports.push_back(std::move(r));
  }
  return reports;
}

// Unweighted per-teacher averages across datasets (Table 1 rows).
std::vector<stats::ModelReport> overall_reports(
    const std::vector<std::vector<stats::ModelReport>>& per_dataset) {
  struct Acc {
    std::vector<double> accuracy, tokens, red, back, fotu, sotu, rr, reward;
  };
  std::map<std::string, Acc> acc;
  for (const auto& reports : per_dataset) {
    for (const auto& r : reports) {
      Acc& a = acc[r.teacher_id];
      a.accuracy.push_back(r.accuracy);
      a.tokens.push_back(r.median_tokens);
      if (r.mean_redundancy) a.red.push_back(*r.mean_redundancy);
      if (r.mean_backtracking) a.back.push_back(*r.mean_backtracking);
      if (r.fotu) a.fotu.push_back(*r.fotu);
      if (r.sotu) a.sotu.push_back(*r.sotu);
      if (r.regression_rate) a.rr.push_back(*r.regression_rate);
      if (r.mean_reward) a.reward.push_back(*r.mean_reward);
    }
  }
  std::vector<stats::ModelReport> out;
  for (const auto& [teacher, a] : acc) {
    stats::ModelReport r;
    r.teacher_id = teacher;
    r.dataset = "all";
    r.accuracy = *mean_of(a.accuracy);
    r.median_tokens = *mean_of(a.tokens);
    r.mean_redundancy = mean_of(a.red);
    r.mean_backtracking = mean_of(a.back);
    r.fotu = mean_of(a.fotu);
    r.sotu = mean_of(a.sotu);
    r.regression_rate = mean_of(a.rr);
    r.mean_reward = mean_of(a.reward);
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<double> metric_value(const stats::ModelReport& r,
                                   const stats::MetricSpec& spec) {
  return spec.get(r);
}

}  // namespace

void cmd_report(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.students.empty())
    throw ConfigError("report requires a configured student");
  const std::string primary_student = cfg.students.front();
  std::string hash = config_hash(cfg);
  tu::BinningScheme scheme = scheme_of(cfg);

  std::vector<DatasetBundle> bundles;
  for (const auto& dp : cfg.datasets) bundles.push_back(load_bundle(cfg, dp));

  std::vector<std::vector<stats::ModelReport>> per_dataset;
  for (const auto& b : bundles)
    per_dataset.push_back(dataset_reports(cfg, b, primary_student));
  auto overall = overall_reports(per_dataset);

  fs::create_directories(report_dir(cfg));

  // full_results.csv: one row per (dataset, teacher), Table layout.
  {
    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "dataset,teacher_id,accuracy,median_tokens,redundancy,"
           "backtracking,fotu,sotu,regression_rate,mean_reward\n";
    for (const auto& reports : per_dataset) {
      for (const auto& r : reports) {
        csv << r.dataset << "," << r.teacher_id << "," << fmt(r.accuracy) << ","
            << fmt(r.median_tokens) << "," << fmt_opt(r.mean_redundancy) << ","
            << fmt_opt(r.mean_backtracking) << "," << fmt_opt(r.fotu) << ","
            << fmt_opt(r.sotu) << "," << fmt_opt(r.regression_rate) << ","
            << fmt_opt(r.mean_reward) << "\n";
      }
    }
    write_text(report_dir(cfg) + "/full_results.csv", csv.str());
  }

  // rank_table.csv from overall reports.
  {
    std::map<std::string, std::map<std::string, std::pair<double, double>>>
        cells;  // teacher -> metric -> (rank, delta)
    std::map<std::string, double> acc_rank;
    {
      std::vector<double> acc;
      std::vector<std::string> ids;
      for (const auto& r : overall) {
        acc.push_back(r.accuracy);
        ids.push_back(r.teacher_id);
      }
      auto ranks = stats::average_ranks(acc, false);
      for (size_t i = 0; i < ids.size(); ++i) acc_rank[ids[i]] = ranks[i];
    }
    for (const auto& spec : stats::legibility_metrics()) {
      try {
        auto table = stats::rank_models(overall, spec);
        for (const auto& e : table.entries)
          cells[e.teacher_id][spec.name] = {e.rank, e.delta_vs_acc};
      } catch (const DataError&) {
        // metric absent for this corpus; column stays blank
      }
    }
    auto borda = stats::borda_mean_rank(overall);

    std::vector<const stats::ModelReport*> ordered;
    for (const auto& r : overall) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const stats::ModelReport* a, const stats::ModelReport* b) {
                return a->accuracy > b->accuracy ||
                       (a->accuracy == b->accuracy &&
                        a->teacher_id < b->teacher_id);
              });

    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "teacher_id,accuracy,acc_rank";
    for (const auto& spec : stats::legibility_metrics())
      csv << "," << spec.name << "_rank," << spec.name << "_delta";
    csv << ",borda_mean_rank\n";
    for (const auto* r : ordered) {
      csv << r->teacher_id << "," << fmt(r->accuracy) << ","
          << fmt(acc_rank[r->teacher_id]);
      for (const auto& spec : stats::legibility_metrics()) {
        auto it = cells.find(r->teacher_id);
        if (it != cells.end() && it->second.count(spec.name)) {
          auto [rank, delta] = it->second[spec.name];
          csv << "," << fmt(rank) << "," << fmt(delta);
        } else {
          csv << ",,";
        }
      }
      auto bit = borda.find(r->teacher_id);
      csv << "," << (bit != borda.end() ? fmt(bit->second) : "") << "\n";
    }
    write_text(report_dir(cfg) + "/rank_table.csv", csv.str());
  }

  // correlation_matrix.csv over per-(dataset, teacher) reports.
  {
    std::vector<stats::ModelReport> flat;
    for (const auto& reports : per_dataset)
      flat.insert(flat.end(), reports.begin(), reports.end());
    auto matrix = stats::correlation_matrix(flat);
    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "metric";
    for (const auto& name : matrix.metrics) csv << "," << name;
    csv << "\n";
    for (size_t i = 0; i < matrix.metrics.size(); ++i) {
      csv << matrix.metrics[i];
      for (size_t j = 0; j < matrix.metrics.size(); ++j) {
        csv << ",";
        if (!std::isnan(matrix.rho[i][j])) csv << fmt(matrix.rho[i][j]);
      }
      csv << "\n";
    }
    write_text(report_dir(cfg) + "/correlation_matrix.csv", csv.str());
  }

  // stability_datasets.csv: rank stability across dataset pairs.
  {
    std::vector<std::string> splits;
    for (const auto& b : bundles) splits.push_back(b.name);
    std::vector<stats::MetricSpec> all = {stats::accuracy_metric()};
    for (const auto& m : stats::legibility_metrics()) all.push_back(m);

    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "metric,split_a,split_b,rho,shared_models\n";
    for (const auto& spec : all) {
      std::map<std::string, std::map<std::string, double>> values;
      for (size_t d = 0; d < bundles.size(); ++d) {
        for (const auto& r : per_dataset[d]) {
          if (auto v = metric_value(r, spec))
            values[bundles[d].name][r.teacher_id] = *v;
        }
      }
      auto row = stats::stability_row(values, splits, spec.name);
      for (const auto& cell : row.pairs) {
        csv << spec.name << "," << cell.split_a << "," << cell.split_b << ","
            << (cell.rho ? fmt(*cell.rho) : "") << "," << cell.shared_models
            << "\n";
      }
      if (row.average)
        csv << spec.name << ",average,," << fmt(*row.average) << ",\n";
    }
    write_text(report_dir(cfg) + "/stability_datasets.csv", csv.str());
  }

  // stability_students.csv: TU rank stability across student pairs.
  {
    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "metric,dataset,student_a,student_b,rho,shared_models\n";
    if (cfg.students.size() >= 2) {
      struct TuMetricSpec {
        const char* name;
        std::optional<double> (*get)(const tu::GroupMetrics&);
      };
      static const TuMetricSpec specs[] = {
          {"fotu", [](const tu::GroupMetrics& g) { return g.mean_fotu; }},
          {"sotu", [](const tu::GroupMetrics& g) { return g.sotu; }},
          {"regression_rate",
           [](const tu::GroupMetrics& g) { return g.mean_rr; }},
      };
      for (const auto& spec : specs) {
        for (size_t d = 0; d < bundles.size(); ++d) {
          // student -> teacher -> metric value
          std::map<std::string, std::map<std::string, double>> values;
          std::map<std::pair<std::string, std::string>,
                   std::vector<tu::RolloutObservation>>
              grouped;
          for (const auto& obs : bundles[d].observations) {
            auto it = bundles[d].teacher_of.find(obs.trace_id);
            if (it != bundles[d].teacher_of.end())
              grouped[{obs.student_id, it->second}].push_back(obs);
          }
          for (const auto& [key, obs] : grouped) {
            auto gm = tu::group_metrics(obs, scheme);
            if (auto v = spec.get(gm)) values[key.first][key.second] = *v;
          }
          auto row =
              stats::stability_row(values, cfg.students, spec.name);
          for (const auto& cell : row.pairs) {
            csv << spec.name << "," << bundles[d].name << "," << cell.split_a
                << "," << cell.split_b << ","
                << (cell.rho ? fmt(*cell.rho) : "") << ","
                << cell.shared_models << "\n";
          }
        }
      }
    }
    write_text(report_dir(cfg) + "/stability_students.csv", csv.str());
  }

  // rm_correlation.csv (present whenever any scores were gathered).
  {
    std::set<std::string> scorers;
    for (const auto& b : bundles) {
      for (const auto& s : b.scores) scorers.insert(s.scorer);
    }
    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "level,scorer,metric,rho_all,n_all,rho_correct,n_correct\n";
    for (const auto& scorer : scorers) {
      std::vector<stats::TraceScore> scores;
      std::vector<stats::TraceTuMetrics> metrics;
      for (const auto& b : bundles) {
        for (const auto& s : b.scores) {
          if (s.scorer != scorer) continue;
          scores.push_back({s.trace_id, s.teacher_id, s.teacher_correct,
                            s.score});
        }
        for (const auto& t : b.tu) {
          if (t.student_id != primary_student) continue;
          metrics.push_back({t.trace_id, t.fotu, t.rr_proportion});
        }
      }
      auto rows = stats::rm_correlation(scorer, scores, metrics, overall,
                                        overall);
      for (const auto& row : rows) {
        csv << row.level << "," << row.scorer << "," << row.metric << ","
            << fmt_opt(row.rho_all) << "," << row.n_all << ","
            << fmt_opt(row.rho_correct) << "," << row.n_correct << "\n";
      }
    }
    write_text(report_dir(cfg) + "/rm_correlation.csv", csv.str());
  }

  // transfer_curves.csv: plot-ready binned curves.
  {
    std::ostringstream csv;
    csv << jsonl::meta_comment(hash) << "\n";
    csv << "dataset,teacher_id,student_id,bin,depth_low,depth_high,samples,"
           "successes,mean\n";
    for (size_t d = 0; d < bundles.size(); ++d) {
      std::map<std::pair<std::string, std::string>,
               std::vector<tu::RolloutObservation>>
          grouped;
      for (const auto& obs : bundles[d].observations) {
        auto it = bundles[d].teacher_of.find(obs.trace_id);
        if (it != bundles[d].teacher_of.end())
          grouped[{it->second, obs.student_id}].push_back(obs);
      }
      for (const auto& [key, obs] : grouped) {
        auto curve = tu::transfer_curve(obs, scheme);
        for (int bin = scheme.first_bin(); bin <= scheme.bins; ++bin) {
          const auto& cell = curve.cells[bin - scheme.first_bin()];
          if (cell.samples == 0) continue;
          double lo = static_cast<double>(bin - 1) / scheme.bins;
          double hi = static_cast<double>(bin) / scheme.bins;
          if (bin == 0) lo = hi = 0.0;
          csv << bundles[d].name << "," << key.first << "," << key.second
              << "," << bin << "," << fmt(lo) << "," << fmt(hi) << ","
              << cell.samples << "," << cell.successes << ","
              << fmt(static_cast<double>(cell.successes) / cell.samples)
              << "\n";
        }
      }
    }
    write_text(report_dir(cfg) + "/transfer_curves.csv", csv.str());
  }
}

}  // namespace legival::cli
