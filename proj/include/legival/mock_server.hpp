#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace legival::mockserver {

// Chat behaviors:
//   fixed       always answer with fixed_text.
//   echo_boxed  act as a depth-sensitive scripted student: scan the last
//               assistant message (the teacher prefix) for a \boxed{...}
//               payload or a "Groupings" JSON and answer with it; without
//               one, produce prose with no extractable answer. Forced-pass
//               requests (prefix ending in the forcing string) are
//               completed in the same way.
//   judge       return a backtracking verdict built from lexical cues
//               ("Wait", "However", ...) in the numbered steps.
//   script      pop responses from `script` in request order.
struct MockConfig {
  std::string chat_mode = "echo_boxed";
  std::string fixed_text = "ok";
  std::vector<std::string> script;
  int embed_dim = 384;
  int latency_ms = 0;        // artificial handler latency
  std::uint64_t seed = 0;    // perturbs embeddings and scores
  bool fence_judge_json = false;  // wrap judge verdicts in ``` fences
};

// Instrumented OpenAI-compatible test server: /v1/chat/completions,
// /v1/embeddings, /score, plus /stats for the concurrency counters it
// records. Deterministic for a fixed config and request stream.
class MockServer {
 public:
  explicit MockServer(MockConfig cfg);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds host:port (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  const std::string& base_url() const { return base_url_; }

  int max_in_flight_observed() const { return max_in_flight_.load(); }
  long total_requests() const { return total_requests_.load(); }

  // Chat request bodies in arrival order; deterministic when the client
  // runs with max_in_flight = 1.
  std::vector<std::string> chat_request_log() const;

 private:
  void install_routes();
  std::string handle_chat(const std::string& body);
  std::string handle_embed(const std::string& body);
  std::string handle_score(const std::string& body);

  MockConfig cfg_;
  std::unique_ptr<httplib::Server> server_;
  std::thread serve_thread_;
  std::string base_url_;

  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  std::atomic<long> total_requests_{0};
  std::atomic<size_t> script_cursor_{0};

  mutable std::mutex log_mu_;
  std::vector<std::string> chat_log_;
};

// Deterministic pseudo-embedding used by the mock embedder: components
// derived from a hash of the text, identical texts map to identical
// vectors. Not normalized; callers are expected to renormalize.
std::vector<double> pseudo_embedding(const std::string& text, int dim,
                                     std::uint64_t seed);

}  // namespace legival::mockserver
