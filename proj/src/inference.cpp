#include "legival/inference.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "legival/errors.hpp"
#include "legival/util.hpp"

namespace legival::inference {

// std::map-backed json keeps keys sorted, which makes dumps canonical.
using cjson = nlohmann::json;

DiskCache::DiskCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string DiskCache::path_for(const std::string& digest) const {
  return dir_ + "/" + digest.substr(0, 2) + "/" + digest + ".json";
}

std::optional<std::string> DiskCache::get(const std::string& digest) const {
  std::ifstream in(path_for(digest), std::ios::binary);
  if (!in) return std::nullopt;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

void DiskCache::put(const std::string& digest, const std::string& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  util::write_file_atomic(path_for(digest), payload);
}

namespace {

cjson messages_to_json(const std::vector<Message>& messages) {
  cjson arr = cjson::array();
  for (const auto& m : messages)
    arr.push_back({{"role", m.role}, {"content", m.content}});
  return arr;
}

}  // namespace

std::string chat_cache_key(const ChatRequest& req) {
  cjson canon;
  canon["kind"] = "chat";
  canon["endpoint"] = req.endpoint_id;
  canon["messages"] = messages_to_json(req.messages);
  canon["max_new_tokens"] = req.max_new_tokens;
  canon["temperature"] = req.temperature;
  canon["top_p"] = req.top_p;
  canon["continue_final_message"] = req.continue_final_message;
  canon["seed"] = req.seed;
  return util::sha256_hex(canon.dump());
}

std::string embed_cache_key(const std::string& endpoint_id,
                            const std::vector<std::string>& texts) {
  cjson canon;
  canon["kind"] = "embed";
  canon["endpoint"] = endpoint_id;
  canon["texts"] = texts;
  return util::sha256_hex(canon.dump());
}

std::string score_cache_key(const std::string& endpoint_id,
                            const std::string& prompt,
                            const std::string& response) {
  cjson canon;
  canon["kind"] = "score";
  canon["endpoint"] = endpoint_id;
  canon["prompt"] = prompt;
  canon["response"] = response;
  return util::sha256_hex(canon.dump());
}

std::string api_key_for(const std::string& endpoint_id) {
  std::string name = "LEGIVAL_API_KEY_";
  for (char c : endpoint_id) {
    name.push_back(std::isalnum(static_cast<unsigned char>(c))
                       ? static_cast<char>(std::toupper(c))
                       : '_');
  }
  const char* value = std::getenv(name.c_str());
  return value ? value : "";
}

InferenceClient::InferenceClient(std::vector<Endpoint> endpoints,
                                 RetryPolicy retry,
                                 std::shared_ptr<DiskCache> cache)
    : retry_(retry), cache_(std::move(cache)) {
  for (auto& ep : endpoints) endpoints_[ep.id] = std::move(ep);
}

const Endpoint& InferenceClient::endpoint(const std::string& id) const {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end())
    throw ConfigError("endpoint not registered: '" + id + "'");
  return it->second;
}

std::string InferenceClient::post_json(const Endpoint& ep,
                                       const std::string& path,
                                       const std::string& body) {
  std::string last_error;
  for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
    if (attempt > 0) {
      long wait_ms = retry_.backoff_ms << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
    }
    httplib::Client cli(ep.base_url);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(600, 0);
    httplib::Headers headers;
    std::string key = api_key_for(ep.id);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    ++network_calls_;
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    if (res->status == 429 || res->status >= 500) {
      // Rate limited or server-side trouble: honor Retry-After if given.
      auto retry_after = res->get_header_value("Retry-After");
      if (!retry_after.empty()) {
        try {
          std::this_thread::sleep_for(
              std::chrono::seconds(std::stol(retry_after)));
        } catch (const std::exception&) {
        }
      }
      continue;
    }
    throw ProviderError(ep.id + path + ": " + last_error);
  }
  throw TransportError(ep.id + path + " failed after " +
                       std::to_string(retry_.attempts) +
                       " attempts: " + last_error);
}

ChatResponse InferenceClient::chat_complete(const ChatRequest& req) {
  const Endpoint& ep = endpoint(req.endpoint_id);
  std::string digest = chat_cache_key(req);
  if (cache_) {
    if (auto hit = cache_->get(digest)) {
      cjson cached = cjson::parse(*hit);
      ChatResponse out;
      out.text = cached.at("text").get<std::string>();
      std::string fr = cached.at("finish_reason").get<std::string>();
      out.finish_reason =
          fr == "length" ? FinishReason::length : FinishReason::stop;
      out.usage.prompt_tokens = cached.value("prompt_tokens", 0);
      out.usage.completion_tokens = cached.value("completion_tokens", 0);
      return out;
    }
  }

  cjson body;
  if (!ep.model.empty()) body["model"] = ep.model;
  body["messages"] = messages_to_json(req.messages);
  body["max_tokens"] = req.max_new_tokens;
  body["temperature"] = req.temperature;
  body["top_p"] = req.top_p;
  body["seed"] = req.seed;
  if (req.continue_final_message) {
    if (req.messages.empty() || req.messages.back().role != "assistant")
      throw DataError("continue_final_message requires a final assistant message");
    body["continue_final_message"] = true;
    body["add_generation_prompt"] = false;
  }

  std::string raw = post_json(ep, "/v1/chat/completions", body.dump());
  cjson parsed;
  try {
    parsed = cjson::parse(raw);
  } catch (const cjson::exception& e) {
    throw ProviderError(ep.id + ": unparsable completion payload: " + e.what());
  }
  if (parsed.contains("error"))
    throw ProviderError(ep.id + ": provider error: " + parsed["error"].dump());
  if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
      parsed["choices"].empty())
    throw ProviderError(ep.id + ": completion payload has no choices");

  const auto& choice = parsed["choices"][0];
  ChatResponse out;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    out.text = choice["message"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    out.text = choice["text"].get<std::string>();
  } else {
    throw ProviderError(ep.id + ": choice carries no text content");
  }
  std::string fr = choice.value("finish_reason", "stop");
  out.finish_reason = fr == "length" ? FinishReason::length : FinishReason::stop;
  if (parsed.contains("usage")) {
    out.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
    out.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
  }

  if (cache_) {
    cjson entry;
    entry["text"] = out.text;
    entry["finish_reason"] =
        out.finish_reason == FinishReason::length ? "length" : "stop";
    entry["prompt_tokens"] = out.usage.prompt_tokens;
    entry["completion_tokens"] = out.usage.completion_tokens;
    cache_->put(digest, entry.dump());
  }
  return out;
}

std::vector<std::vector<double>> InferenceClient::embed(
    const std::vector<std::string>& texts, const std::string& endpoint_id) {
  if (texts.empty()) throw DataError("embed requires a non-empty text list");
  const Endpoint& ep = endpoint(endpoint_id);
  std::string digest = embed_cache_key(endpoint_id, texts);
  if (cache_) {
    if (auto hit = cache_->get(digest)) {
      cjson cached = cjson::parse(*hit);
      return cached.at("vectors").get<std::vector<std::vector<double>>>();
    }
  }

  cjson body;
  if (!ep.model.empty()) body["model"] = ep.model;
  body["input"] = texts;
  std::string raw = post_json(ep, "/v1/embeddings", body.dump());
  cjson parsed;
  try {
    parsed = cjson::parse(raw);
  } catch (const cjson::exception& e) {
    throw ProviderError(ep.id + ": unparsable embeddings payload: " + e.what());
  }
  if (parsed.contains("error"))
    throw ProviderError(ep.id + ": provider error: " + parsed["error"].dump());
  if (!parsed.contains("data") || !parsed["data"].is_array())
    throw ProviderError(ep.id + ": embeddings payload has no data");

  std::vector<std::vector<double>> rows(texts.size());
  std::vector<bool> seen(texts.size(), false);
  for (const auto& item : parsed["data"]) {
    size_t index = item.value("index", rows.size());
    if (index >= rows.size())
      throw ProviderError(ep.id + ": embedding index out of range");
    rows[index] = item.at("embedding").get<std::vector<double>>();
    seen[index] = true;
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!seen[i])
      throw ProviderError(ep.id + ": missing embedding for input " +
                          std::to_string(i));
    if (rows[i].size() != rows[0].size())
      throw ProviderError(ep.id + ": embedding dimension mismatch at row " +
                          std::to_string(i));
    double sq = 0.0;
    for (double x : rows[i]) sq += x * x;
    double norm = std::sqrt(sq);
    if (norm == 0.0 || !std::isfinite(norm))
      throw ProviderError(ep.id + ": degenerate embedding at row " +
                          std::to_string(i));
    for (double& x : rows[i]) x /= norm;
  }

  if (cache_) {
    cjson entry;
    entry["vectors"] = rows;
    cache_->put(digest, entry.dump());
  }
  return rows;
}

double InferenceClient::score_reward(const std::string& prompt,
                                     const std::string& response,
                                     const std::string& endpoint_id) {
  const Endpoint& ep = endpoint(endpoint_id);
  std::string digest = score_cache_key(endpoint_id, prompt, response);
  if (cache_) {
    if (auto hit = cache_->get(digest)) {
      return cjson::parse(*hit).at("score").get<double>();
    }
  }
  cjson body;
  body["prompt"] = prompt;
  body["response"] = response;
  std::string raw = post_json(ep, "/score", body.dump());
  cjson parsed;
  try {
    parsed = cjson::parse(raw);
  } catch (const cjson::exception& e) {
    throw ProviderError(ep.id + ": unparsable score payload: " + e.what());
  }
  if (!parsed.contains("score") || !parsed["score"].is_number())
    throw ProviderError(ep.id + ": score payload has no numeric 'score'");
  double score = parsed["score"].get<double>();
  if (!std::isfinite(score))
    throw ProviderError(ep.id + ": non-finite score");
  if (cache_) {
    cjson entry;
    entry["score"] = score;
    cache_->put(digest, entry.dump());
  }
  return score;
}

std::vector<InferenceClient::BatchItem> InferenceClient::run_batch(
    const std::vector<ChatRequest>& reqs, int max_in_flight) {
  if (max_in_flight < 1)
    throw ConfigError("max_in_flight must be >= 1");
  std::vector<BatchItem> results(reqs.size());
  if (reqs.empty()) return results;

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= reqs.size()) break;
      try {
        results[i].response = chat_complete(reqs[i]);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };

  size_t workers = std::min<size_t>(max_in_flight, reqs.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace legival::inference
