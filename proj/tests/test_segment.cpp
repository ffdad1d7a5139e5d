#include <doctest.h>

#include <random>

#include "legival/segment.hpp"
#include "legival/util.hpp"

using namespace legival;
using corpus::segment_steps;

TEST_CASE("single sentence is one step") {
  auto steps = segment_steps("The answer is 5.");
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].text == "The answer is 5.");
  CHECK(steps[0].byte_start == 0);
  CHECK(steps[0].byte_end == 16);
}

TEST_CASE("three plain sentences split into three steps") {
  // Expected values frozen from a punkt-style reference tokenizer run on
  // this exact string: ["Compute 2+2.", "Thus 4.", "Done."]
  auto steps = segment_steps("Compute 2+2. Thus 4. Done.");
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].text == "Compute 2+2.");
  CHECK(steps[1].text == "Thus 4.");
  CHECK(steps[2].text == "Done.");
}

TEST_CASE("no split at decimal points inside math") {
  // Reference tokenizer: ["Let $x = 3.5$.", "Then double it."]
  auto steps = segment_steps("Let $x = 3.5$. Then double it.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].text == "Let $x = 3.5$.");
  CHECK(steps[1].text == "Then double it.");
}

TEST_CASE("no split at bare decimal points") {
  auto steps = segment_steps("The value 3.5 is larger than 2.25 here. Next.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].text == "The value 3.5 is larger than 2.25 here.");
}

TEST_CASE("no split inside inline math") {
  auto steps = segment_steps("We need $a. b$ to hold. Then stop.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].text == "We need $a. b$ to hold.");
}

TEST_CASE("no split inside boxed payloads") {
  auto steps =
      segment_steps("So \\boxed{1. 5} is the result. A second sentence.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].text == "So \\boxed{1. 5} is the result.");
}

TEST_CASE("abbreviations do not terminate sentences") {
  auto steps = segment_steps("Use the lemma, e.g. the first one. Then apply it.");
  REQUIRE(steps.size() == 2);
  auto steps2 = segment_steps("Dr. Smith proved it. QED.");
  REQUIRE(steps2.size() == 2);
  CHECK(steps2[0].text == "Dr. Smith proved it.");
}

TEST_CASE("question and exclamation marks terminate") {
  auto steps = segment_steps("Is it prime? No! Check again.");
  REQUIRE(steps.size() == 3);
}

TEST_CASE("empty and whitespace input give no steps") {
  CHECK(segment_steps("").empty());
  CHECK(segment_steps("  \n\t ").empty());
}

TEST_CASE("offsets reconstruct the input spans") {
  std::string raw = "First sentence here. Second one follows!  Third.";
  auto steps = segment_steps(raw);
  REQUIRE(steps.size() == 3);
  for (const auto& s : steps) {
    CHECK(raw.substr(s.byte_start, s.byte_end - s.byte_start) == s.text);
  }
  for (size_t i = 1; i < steps.size(); ++i) {
    CHECK(steps[i].byte_start >= steps[i - 1].byte_end);
  }
}

TEST_CASE("unclosed math is reported") {
  auto res = corpus::segment_trace("The price is $5 and rising. More text.");
  CHECK(res.unclosed_math);
  auto ok = corpus::segment_trace("Balanced $x$ here. Fine.");
  CHECK(!ok.unclosed_math);
}

TEST_CASE("segmentation round-trip and idempotence properties") {
  static const char* words[] = {"alpha", "beta",  "gamma", "delta",
                                "x",     "12",    "sum",   "prove",
                                "Then",  "hence", "so",    "value"};
  static const char* terminators[] = {".", "!", "?"};
  std::mt19937 rng(20240817);
  for (int iter = 0; iter < 200; ++iter) {
    std::string raw;
    int sentences = 1 + static_cast<int>(rng() % 5);
    for (int s = 0; s < sentences; ++s) {
      int len = 2 + static_cast<int>(rng() % 6);
      std::string sentence;
      for (int w = 0; w < len; ++w) {
        if (w) sentence += ' ';
        sentence += words[rng() % 12];
      }
      // Capitalize so the next sentence starts like prose.
      sentence[0] = static_cast<char>(std::toupper(sentence[0]));
      sentence += terminators[rng() % 3];
      if (s) raw += rng() % 3 == 0 ? "  " : " ";
      raw += sentence;
    }

    auto steps = segment_steps(raw);
    REQUIRE(!steps.empty());

    // Round-trip: joined steps equal the raw text modulo whitespace.
    std::string joined;
    for (size_t i = 0; i < steps.size(); ++i) {
      if (i) joined += ' ';
      joined += steps[i].text;
    }
    CHECK(util::collapse_whitespace(joined) == util::collapse_whitespace(raw));

    // Idempotence: every step re-segments to itself.
    for (const auto& s : steps) {
      auto again = segment_steps(s.text);
      REQUIRE(again.size() == 1);
      CHECK(again[0].text == s.text);
    }

    // Offsets slice the original buffer exactly.
    for (const auto& s : steps) {
      CHECK(raw.substr(s.byte_start, s.byte_end - s.byte_start) == s.text);
    }
  }
}
