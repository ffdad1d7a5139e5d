#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "legival/commands.hpp"
#include "legival/errors.hpp"
#include "legival/mock_server.hpp"
#include "legival/version.hpp"

namespace {

using legival::cli::RunConfig;

// Overlays config-file values with any flags the user actually passed.
struct Overrides {
  CLI::App* app = nullptr;
  double redundancy_threshold = 0.8;
  std::string redundancy_denominator = "m";
  int step_interval = 3;
  int bins = 50;
  int student_budget = 1024;
  int force_budget = 100;
  int max_in_flight = 8;
  std::string cache_dir;
  std::string out_dir;
  std::string tokenizer;
  long seed = 0;
  bool include_full_trace = false;
  bool zero_bin = false;
  bool exact_bytes = false;

  void attach(CLI::App* cmd) {
    app = cmd;
    cmd->add_option("--redundancy-threshold", redundancy_threshold,
                    "Redundancy cosine threshold tau (default 0.8)");
    cmd->add_option("--redundancy-denominator", redundancy_denominator,
                    "Score denominator: m (default) or m-1");
    cmd->add_option("--step-interval", step_interval,
                    "Rollout depth interval in steps (default 3)");
    cmd->add_option("--bins", bins, "Relative-depth bin count (default 50)");
    cmd->add_option("--student-budget", student_budget,
                    "Student continuation token budget (default 1024)");
    cmd->add_option("--force-budget", force_budget,
                    "Forced-pass token budget (default 100)");
    cmd->add_option("--max-in-flight", max_in_flight,
                    "Bounded request parallelism (default 8)");
    cmd->add_option("--cache-dir", cache_dir, "Response cache directory");
    cmd->add_option("--out-dir", out_dir, "Output directory");
    cmd->add_option("--tokenizer", tokenizer,
                    "Token counter: heuristic or bpe:<vocab path>");
    cmd->add_option("--seed", seed, "Sampling seed recorded in cache keys");
    cmd->add_flag("--include-full-trace", include_full_trace,
                  "Also roll out the k=m full-trace prefix");
    cmd->add_flag("--zero-bin", zero_bin,
                  "Give k=0 its own bin instead of folding it into bin 1");
    cmd->add_flag("--exact-bytes", exact_bytes,
                  "Build prefixes from raw reasoning bytes, not joined steps");
  }

  void apply(RunConfig& cfg) const {
    auto passed = [this](const std::string& name) {
      return app->count(name) > 0;
    };
    if (passed("--redundancy-threshold"))
      cfg.redundancy_tau = redundancy_threshold;
    if (passed("--redundancy-denominator"))
      cfg.redundancy_denominator_m_minus_1 = redundancy_denominator == "m-1";
    if (passed("--step-interval")) cfg.step_interval = step_interval;
    if (passed("--bins")) cfg.bins = bins;
    if (passed("--student-budget")) cfg.student_budget = student_budget;
    if (passed("--force-budget")) cfg.force_budget = force_budget;
    if (passed("--max-in-flight")) cfg.max_in_flight = max_in_flight;
    if (passed("--cache-dir")) cfg.cache_dir = cache_dir;
    if (passed("--out-dir")) cfg.out_dir = out_dir;
    if (passed("--tokenizer")) cfg.tokenizer = tokenizer;
    if (passed("--seed")) cfg.seed = static_cast<std::uint64_t>(seed);
    if (passed("--include-full-trace"))
      cfg.include_full_trace = include_full_trace;
    if (passed("--zero-bin")) cfg.zero_bin = zero_bin;
    if (passed("--exact-bytes")) cfg.exact_bytes = exact_bytes;
  }
};

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"legival: legibility metrics over reasoning-trace corpora"};
  app.set_version_flag("--version", legival::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string labels_csv;
  std::string verdicts_path;

  struct Sub {
    CLI::App* cmd;
    Overrides overrides;
  };
  std::map<std::string, Sub> subs;
  auto add_run_subcommand = [&](const std::string& name,
                                const std::string& desc) {
    auto* cmd = app.add_subcommand(name, desc);
    cmd->add_option("--config", config_path, "Run config file")->required();
    subs[name].cmd = cmd;
    subs[name].overrides.attach(cmd);
    return cmd;
  };

  add_run_subcommand("ingest", "Validate and normalize the trace corpus");
  add_run_subcommand("efficiency",
                     "Length and redundancy metrics per trace and model");
  add_run_subcommand("judge", "Backtracking classification via the LLM judge");
  add_run_subcommand("rollout", "Student continuations over trace prefixes");
  add_run_subcommand("tu", "Transfer-utility metrics from rollout records");
  add_run_subcommand("sweep", "Redundancy threshold sweep");
  auto* stats_cmd = add_run_subcommand("stats", "Statistics utilities");
  auto* agreement =
      stats_cmd->add_subcommand("agreement", "Annotator agreement from labels");
  agreement->add_option("--labels", labels_csv,
                        "CSV of trace_id,annotator_id,count")
      ->required();
  agreement->add_option("--verdicts", verdicts_path,
                        "Judge verdicts JSONL to include as annotator 'judge'");
  auto* rm = stats_cmd->add_subcommand("rm", "Gather reward-model scores");
  stats_cmd->require_subcommand(1);
  add_run_subcommand("report", "Emit the full report bundle");

  auto* mock = app.add_subcommand("mock-server",
                                  "Instrumented OpenAI-compatible test server");
  std::string mock_host = "127.0.0.1";
  int mock_port = 8999;
  legival::mockserver::MockConfig mock_cfg;
  long mock_seed = 0;
  mock->add_option("--host", mock_host, "Bind host");
  mock->add_option("--port", mock_port, "Bind port");
  mock->add_option("--mode", mock_cfg.chat_mode,
                   "Chat behavior: echo_boxed, fixed, judge, script");
  mock->add_option("--fixed-text", mock_cfg.fixed_text,
                   "Response for --mode fixed");
  mock->add_option("--latency-ms", mock_cfg.latency_ms,
                   "Artificial handler latency");
  mock->add_option("--embed-dim", mock_cfg.embed_dim,
                   "Embedding dimension (default 384)");
  mock->add_option("--seed", mock_seed, "Pseudo-embedding seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mock->parsed()) {
      mock_cfg.seed = static_cast<std::uint64_t>(mock_seed);
      legival::mockserver::MockServer server(mock_cfg);
      int port = server.start(mock_host, mock_port);
      std::cerr << "mock server listening on " << mock_host << ":" << port
                << " (mode " << mock_cfg.chat_mode << ")\n";
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      server.stop();
      return 0;
    }

    auto run = [&](const std::string& name) -> RunConfig {
      RunConfig cfg = legival::cli::load_config(config_path);
      subs[name].overrides.apply(cfg);
      legival::cli::validate_config(cfg);
      return cfg;
    };

    if (subs["ingest"].cmd->parsed()) {
      legival::cli::cmd_ingest(run("ingest"));
    } else if (subs["efficiency"].cmd->parsed()) {
      legival::cli::cmd_efficiency(run("efficiency"));
    } else if (subs["judge"].cmd->parsed()) {
      legival::cli::cmd_judge(run("judge"));
    } else if (subs["rollout"].cmd->parsed()) {
      legival::cli::cmd_rollout(run("rollout"));
    } else if (subs["tu"].cmd->parsed()) {
      legival::cli::cmd_tu(run("tu"));
    } else if (subs["sweep"].cmd->parsed()) {
      legival::cli::cmd_sweep(run("sweep"));
    } else if (subs["stats"].cmd->parsed()) {
      RunConfig cfg = run("stats");
      if (agreement->parsed()) {
        legival::cli::cmd_stats_agreement(cfg, labels_csv, verdicts_path);
      } else if (rm->parsed()) {
        legival::cli::cmd_stats_rm(cfg);
      }
    } else if (subs["report"].cmd->parsed()) {
      legival::cli::cmd_report(run("report"));
    }
  } catch (const legival::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const legival::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
