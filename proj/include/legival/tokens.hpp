#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

namespace legival::corpus {

// Pluggable token counter. Two modes:
//
//   heuristic  whitespace-separated word count. Monotone in text length,
//              which is all the rank-wise length metrics need.
//   bpe:<path> byte-level BPE over a vocabulary file. Each line is
//              "<base64 token bytes> <rank>" (the tiktoken file layout).
//              Counting is exact and deterministic for a given vocabulary.
//
// Pre-tokenization for BPE mode: text is cut into chunks before merging.
// A chunk is an optional single leading space plus a maximal run of one
// character class (letters incl. non-ASCII bytes, digits, or other
// printable), or a maximal whitespace run. Merges never cross chunks.
class TokenCounter {
 public:
  static TokenCounter heuristic();
  // Throws ConfigError when the vocabulary cannot be loaded.
  static TokenCounter bpe_from_file(const std::string& vocab_path);
  // Parses "heuristic" or "bpe:<path>".
  static TokenCounter from_spec(const std::string& spec);

  int count(std::string_view text) const;

  // Mode string recorded in every report ("heuristic" or "bpe:<path>").
  const std::string& mode() const { return mode_; }

 private:
  TokenCounter() = default;
  std::string mode_;
  // token bytes -> merge rank; empty in heuristic mode
  std::shared_ptr<const std::unordered_map<std::string, int>> ranks_;
};

}  // namespace legival::corpus
