#include "legival/tokens.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <vector>

#include "legival/errors.hpp"
#include "legival/util.hpp"

namespace legival::corpus {
namespace {

int heuristic_count(std::string_view text) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_word = false;
    } else if (!in_word) {
      ++words;
      in_word = true;
    }
  }
  return words;
}

std::string base64_decode(std::string_view in) {
  static constexpr auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(alphabet[i])] = i;
    return t;
  }();
  std::string out;
  int buffer = 0, bits = 0;
  for (char c : in) {
    if (c == '=') break;
    int v = table[static_cast<unsigned char>(c)];
    if (v < 0) throw ConfigError("invalid base64 in vocabulary");
    buffer = (buffer << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xff));
    }
  }
  return out;
}

enum class CharClass { letter, digit, other, space };

CharClass classify(unsigned char c) {
  if (std::isspace(c)) return CharClass::space;
  if (std::isdigit(c)) return CharClass::digit;
  if (std::isalpha(c) || c >= 0x80) return CharClass::letter;
  return CharClass::other;
}

// Cuts text into BPE chunks; see header for the rule.
std::vector<std::string_view> pre_tokenize(std::string_view text) {
  std::vector<std::string_view> chunks;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    size_t start = i;
    unsigned char c = text[i];
    if (c == ' ' && i + 1 < n &&
        classify(text[i + 1]) != CharClass::space) {
      ++i;  // space joins the following run
      c = text[i];
    }
    CharClass cls = classify(c);
    if (cls == CharClass::space) {
      while (i < n && classify(text[i]) == CharClass::space) ++i;
    } else {
      while (i < n && classify(text[i]) == cls) ++i;
    }
    chunks.push_back(text.substr(start, i - start));
  }
  return chunks;
}

int bpe_chunk_count(std::string_view chunk,
                    const std::unordered_map<std::string, int>& ranks) {
  if (chunk.size() <= 1) return static_cast<int>(chunk.size());
  // parts[i] = (offset, length) into chunk
  std::vector<std::pair<size_t, size_t>> parts;
  parts.reserve(chunk.size());
  for (size_t i = 0; i < chunk.size(); ++i) parts.emplace_back(i, 1);

  auto pair_rank = [&](size_t idx) -> int {
    std::string merged(chunk.substr(parts[idx].first,
                                    parts[idx].second + parts[idx + 1].second));
    auto it = ranks.find(merged);
    return it == ranks.end() ? std::numeric_limits<int>::max() : it->second;
  };

  while (parts.size() > 1) {
    int best_rank = std::numeric_limits<int>::max();
    size_t best_idx = 0;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
      int r = pair_rank(i);
      if (r < best_rank) {
        best_rank = r;
        best_idx = i;
      }
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    parts[best_idx].second += parts[best_idx + 1].second;
    parts.erase(parts.begin() + static_cast<long>(best_idx) + 1);
  }
  return static_cast<int>(parts.size());
}

}  // namespace

TokenCounter TokenCounter::heuristic() {
  TokenCounter tc;
  tc.mode_ = "heuristic";
  return tc;
}

TokenCounter TokenCounter::bpe_from_file(const std::string& vocab_path) {
  std::ifstream in(vocab_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open BPE vocabulary: " + vocab_path);
  auto ranks = std::make_shared<std::unordered_map<std::string, int>>();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto trimmed = util::trim(line);
    if (trimmed.empty()) continue;
    size_t sp = trimmed.find(' ');
    if (sp == std::string_view::npos) {
      throw ConfigError(vocab_path + ":" + std::to_string(lineno) +
                        ": expected '<base64> <rank>'");
    }
    std::string token = base64_decode(trimmed.substr(0, sp));
    int rank = 0;
    try {
      rank = std::stoi(std::string(trimmed.substr(sp + 1)));
    } catch (const std::exception&) {
      throw ConfigError(vocab_path + ":" + std::to_string(lineno) +
                        ": bad rank");
    }
    (*ranks)[token] = rank;
  }
  if (ranks->empty()) throw ConfigError("empty BPE vocabulary: " + vocab_path);
  TokenCounter tc;
  tc.mode_ = "bpe:" + vocab_path;
  tc.ranks_ = std::move(ranks);
  return tc;
}

TokenCounter TokenCounter::from_spec(const std::string& spec) {
  if (spec == "heuristic") return heuristic();
  if (util::starts_with(spec, "bpe:")) return bpe_from_file(spec.substr(4));
  throw ConfigError("unknown tokenizer spec: " + spec +
                    " (expected 'heuristic' or 'bpe:<path>')");
}

int TokenCounter::count(std::string_view text) const {
  if (!ranks_) return heuristic_count(text);
  int total = 0;
  for (auto chunk : pre_tokenize(text)) {
    total += bpe_chunk_count(chunk, *ranks_);
  }
  return total;
}

}  // namespace legival::corpus
