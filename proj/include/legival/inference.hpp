#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace legival::inference {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::string endpoint_id;
  std::vector<Message> messages;
  int max_new_tokens = 1024;
  double temperature = 0.0;
  double top_p = 1.0;
  // When true the provider extends the final assistant message instead
  // of opening a new turn; the last message must then be an assistant one.
  bool continue_final_message = false;
  std::uint64_t seed = 0;
};

enum class FinishReason { stop, length, error };

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  TokenUsage usage;
};

struct Endpoint {
  std::string id;
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string kind;      // chat | embed | score
  std::string model;     // optional model name for the wire payload
};

struct RetryPolicy {
  int attempts = 3;
  int backoff_ms = 1000;  // exponential base; doubles per attempt
};

// Content-addressed response store, one file per request digest. Writes
// go through a temp file + rename so interrupted runs never leave a
// torn entry. Eviction is manual (delete the directory).
class DiskCache {
 public:
  explicit DiskCache(std::string dir);
  std::optional<std::string> get(const std::string& digest) const;
  void put(const std::string& digest, const std::string& payload);
  const std::string& dir() const { return dir_; }

 private:
  std::string path_for(const std::string& digest) const;
  std::string dir_;
  mutable std::mutex mu_;
};

// SHA-256 over the canonicalized request; equal requests collide by
// construction, anything else only with negligible probability.
std::string chat_cache_key(const ChatRequest& req);
std::string embed_cache_key(const std::string& endpoint_id,
                            const std::vector<std::string>& texts);
std::string score_cache_key(const std::string& endpoint_id,
                            const std::string& prompt,
                            const std::string& response);

// OpenAI-compatible chat/embeddings client plus the minimal /score
// contract. Safe for concurrent use; each call owns its connection.
class InferenceClient {
 public:
  InferenceClient(std::vector<Endpoint> endpoints, RetryPolicy retry = {},
                  std::shared_ptr<DiskCache> cache = nullptr);

  const Endpoint& endpoint(const std::string& id) const;  // ConfigError

  ChatResponse chat_complete(const ChatRequest& req);

  // One unit-norm row per input, order preserved. Rows are renormalized
  // locally no matter what the provider returned.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& endpoint_id);

  double score_reward(const std::string& prompt, const std::string& response,
                      const std::string& endpoint_id);

  struct BatchItem {
    std::optional<ChatResponse> response;
    std::string error;
    bool ok() const { return response.has_value(); }
  };

  // Order-preserving bounded-parallel execution: result[i] answers
  // reqs[i]; at most max_in_flight requests await the provider at any
  // instant; per-item failures are embedded, never batch-fatal.
  std::vector<BatchItem> run_batch(const std::vector<ChatRequest>& reqs,
                                   int max_in_flight);

  // Actual HTTP round-trips issued (cache hits excluded).
  long network_calls() const { return network_calls_.load(); }

 private:
  std::string post_json(const Endpoint& ep, const std::string& path,
                        const std::string& body);

  std::map<std::string, Endpoint> endpoints_;
  RetryPolicy retry_;
  std::shared_ptr<DiskCache> cache_;
  std::atomic<long> network_calls_{0};
};

// Credential lookup: LEGIVAL_API_KEY_<ENDPOINT_ID> with the id
// uppercased and non-alphanumerics mapped to '_'. Empty when unset.
std::string api_key_for(const std::string& endpoint_id);

}  // namespace legival::inference
