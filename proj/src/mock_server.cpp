#include "legival/mock_server.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "legival/errors.hpp"
#include "legival/grading.hpp"
#include "legival/util.hpp"

namespace legival::mockserver {

using json = nlohmann::ordered_json;

std::vector<double> pseudo_embedding(const std::string& text, int dim,
                                     std::uint64_t seed) {
  std::uint64_t state = util::fnv1a64(text) ^ seed;
  std::vector<double> v(dim);
  for (int i = 0; i < dim; ++i) {
    state = util::splitmix64(state);
    v[i] = util::unit_double(state) * 2.0 - 1.0;
  }
  return v;
}

MockServer::MockServer(MockConfig cfg) : cfg_(std::move(cfg)) {}

MockServer::~MockServer() { stop(); }

namespace {

// RAII in-flight counter with high-water tracking.
struct InFlight {
  std::atomic<int>& current;
  std::atomic<int>& max_seen;
  InFlight(std::atomic<int>& cur, std::atomic<int>& max)
      : current(cur), max_seen(max) {
    int now = current.fetch_add(1) + 1;
    int prev = max_seen.load();
    while (now > prev && !max_seen.compare_exchange_weak(prev, now)) {
    }
  }
  ~InFlight() { current.fetch_sub(1); }
};

std::string last_assistant_content(const json& body) {
  if (!body.contains("messages") || !body["messages"].is_array()) return "";
  std::string content;
  for (const auto& m : body["messages"]) {
    if (m.value("role", "") == "assistant")
      content = m.value("content", "");
  }
  return content;
}

std::string user_content(const json& body) {
  if (!body.contains("messages") || !body["messages"].is_array()) return "";
  for (const auto& m : body["messages"]) {
    if (m.value("role", "") == "user") return m.value("content", "");
  }
  return "";
}

json chat_payload(const std::string& text, const std::string& finish) {
  json out;
  out["id"] = "mock-0";
  out["object"] = "chat.completion";
  out["choices"] = json::array(
      {{{"index", 0},
        {"message", {{"role", "assistant"}, {"content", text}}},
        {"finish_reason", finish}}});
  out["usage"] = {{"prompt_tokens", 0}, {"completion_tokens", 0}};
  return out;
}

// Scripted-student reply given the teacher prefix seen so far. Forced
// passes are detected from the forcing-string suffix on the prefix.
std::string echo_boxed_reply(const std::string& prefix) {
  bool forced_boxed = prefix.size() >= 6 &&
                      prefix.compare(prefix.size() - 6, 6, "\\boxed") == 0;
  bool forced_groupings =
      prefix.size() >= 4 &&
      prefix.compare(prefix.size() - 4, 4, "```{") == 0;

  auto boxed = grading::extract_boxed(prefix);
  auto groups = grading::parse_groupings(prefix);

  if (forced_boxed) {
    if (boxed.kind != grading::ExtractedKind::none)
      return "{" + boxed.payload + "}";
    return "{unknown}";
  }
  if (forced_groupings) {
    if (groups) {
      // Complete the forced "```{" opener into a full Groupings object.
      std::string full = grading::serialize_groupings(*groups);
      // serialize_groupings emits ```{...}```; strip the leading ```{.
      return full.substr(4);
    }
    return "}```";
  }
  if (groups) return grading::serialize_groupings(*groups);
  if (boxed.kind != grading::ExtractedKind::none)
    return "The answer is \\boxed{" + boxed.payload + "}.";
  return "Let me keep working through the remaining cases before committing "
         "to an answer.";
}

// Lexical-cue judge: steps containing a revision keyword are flagged.
std::string judge_reply(const std::string& user) {
  static const char* cues[] = {"Wait",      "However", "Alternatively",
                               "Actually",  "Hmm",     "Going back",
                               "Backtrack", "No, "};
  json steps = json::array();
  size_t pos = 0;
  int step_no = 0;
  while ((pos = user.find("Step ", pos)) != std::string::npos) {
    size_t line_end = user.find('\n', pos);
    if (line_end == std::string::npos) line_end = user.size();
    std::string line = user.substr(pos, line_end - pos);
    ++step_no;
    for (const char* cue : cues) {
      if (line.find(cue) != std::string::npos) {
        steps.push_back({{"step_number", step_no},
                         {"reason", std::string("contains revision cue '") +
                                        cue + "'"}});
        break;
      }
    }
    pos = line_end;
  }
  json verdict;
  verdict["backtracking_detected"] = !steps.empty();
  auto boxed = grading::extract_boxed(user);
  verdict["final_answer"] =
      boxed.kind == grading::ExtractedKind::none ? "" : boxed.payload;
  verdict["backtracking_steps"] = steps;
  verdict["confidence"] = steps.empty() ? 0.9 : 0.8;
  verdict["overall_reasoning"] =
      steps.empty() ? "The trace appeared linear and consistent."
                    : "Revision cues indicate backtracking.";
  return verdict.dump();
}

}  // namespace

std::string MockServer::handle_chat(const std::string& body_raw) {
  json body = json::parse(body_raw, nullptr, false);
  if (body.is_discarded()) {
    return json{{"error", {{"message", "bad request body"}}}}.dump();
  }
  {
    std::lock_guard<std::mutex> lock(log_mu_);
    chat_log_.push_back(body_raw);
  }

  std::string text;
  if (cfg_.chat_mode == "fixed") {
    text = cfg_.fixed_text;
  } else if (cfg_.chat_mode == "script") {
    size_t i = script_cursor_.fetch_add(1);
    text = cfg_.script.empty() ? ""
                               : cfg_.script[i % cfg_.script.size()];
  } else if (cfg_.chat_mode == "judge") {
    text = judge_reply(user_content(body));
    if (cfg_.fence_judge_json) text = "```json\n" + text + "\n```";
  } else {  // echo_boxed
    text = echo_boxed_reply(last_assistant_content(body));
  }
  return chat_payload(text, "stop").dump();
}

std::string MockServer::handle_embed(const std::string& body_raw) {
  json body = json::parse(body_raw, nullptr, false);
  if (body.is_discarded() || !body.contains("input"))
    return json{{"error", {{"message", "bad embeddings body"}}}}.dump();
  json data = json::array();
  int index = 0;
  for (const auto& item : body["input"]) {
    std::string text = item.is_string() ? item.get<std::string>() : item.dump();
    data.push_back({{"object", "embedding"},
                    {"index", index++},
                    {"embedding",
                     pseudo_embedding(text, cfg_.embed_dim, cfg_.seed)}});
  }
  json out;
  out["object"] = "list";
  out["data"] = data;
  return out.dump();
}

std::string MockServer::handle_score(const std::string& body_raw) {
  json body = json::parse(body_raw, nullptr, false);
  if (body.is_discarded())
    return json{{"error", {{"message", "bad score body"}}}}.dump();
  std::string prompt = body.value("prompt", "");
  std::string response = body.value("response", "");
  double score = util::unit_double(
      util::splitmix64(util::fnv1a64(prompt + "\x1f" + response) ^ cfg_.seed));
  return json{{"score", score}}.dump();
}

void MockServer::install_routes() {
  auto wrap = [this](std::string (MockServer::*handler)(const std::string&)) {
    return [this, handler](const httplib::Request& req,
                           httplib::Response& res) {
      InFlight guard(in_flight_, max_in_flight_);
      total_requests_.fetch_add(1);
      if (cfg_.latency_ms > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(cfg_.latency_ms));
      }
      res.set_content((this->*handler)(req.body), "application/json");
    };
  };
  server_->Post("/v1/chat/completions", wrap(&MockServer::handle_chat));
  server_->Post("/v1/embeddings", wrap(&MockServer::handle_embed));
  server_->Post("/score", wrap(&MockServer::handle_score));
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    json out;
    out["max_in_flight"] = max_in_flight_.load();
    out["total_requests"] = total_requests_.load();
    res.set_content(out.dump(), "application/json");
  });
}

int MockServer::start(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    throw ConfigError("mock server cannot bind " + host + ":" +
                      std::to_string(port));
  }
  serve_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  base_url_ = "http://" + host + ":" + std::to_string(bound);
  return bound;
}

void MockServer::stop() {
  if (server_) {
    server_->stop();
    if (serve_thread_.joinable()) serve_thread_.join();
    server_.reset();
  }
}

std::vector<std::string> MockServer::chat_request_log() const {
  std::lock_guard<std::mutex> lock(log_mu_);
  return chat_log_;
}

}  // namespace legival::mockserver
