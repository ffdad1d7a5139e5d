#include <doctest.h>

#include "legival/util.hpp"

using namespace legival;

TEST_CASE("sha256 known vector") {
  // echo -n "abc" | sha256sum
  CHECK(util::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(util::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("collapse_whitespace") {
  CHECK(util::collapse_whitespace("  a \t b\n\nc ") == "a b c");
  CHECK(util::collapse_whitespace("") == "");
  CHECK(util::collapse_whitespace("x") == "x");
}

TEST_CASE("median") {
  CHECK(*util::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(*util::median({1.0, 2.0, 3.0, 4.0}) == 2.5);
  CHECK(!util::median({}).has_value());
}

TEST_CASE("format_fixed is locale independent") {
  CHECK(util::format_fixed(0.5, 6) == "0.500000");
  CHECK(util::format_fixed(-1.25, 2) == "-1.25");
}

TEST_CASE("split") {
  auto parts = util::split("a,b,,c", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[2] == "");
}
