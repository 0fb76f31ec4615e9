#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "medrex/text.hpp"

using namespace medrex;

TEST_CASE("to_lower and trim") {
  CHECK(to_lower("Aspirin 81 MG") == "aspirin 81 mg");
  CHECK(to_lower("") == "");
  CHECK(trim("  x  ") == "x");
  CHECK(trim("\t\r\n") == "");
  CHECK(trim("abc") == "abc");
}

TEST_CASE("collapse_whitespace") {
  CHECK(collapse_whitespace("a  b\t\nc") == "a b c");
  CHECK(collapse_whitespace("   ") == "");
  CHECK(collapse_whitespace(" x ") == "x");
}

TEST_CASE("normalize_term lowercases, collapses, strips trailing periods") {
  CHECK(normalize_term("  Aspirin   81 MG ") == "aspirin 81 mg");
  CHECK(normalize_term("q.d.") == "q.d");
  CHECK(normalize_term("foo...") == "foo");
  CHECK(normalize_term("foo. . .") == "foo");
  CHECK(normalize_term("...") == "");
}

TEST_CASE("normalize_term is idempotent on random strings") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(0, 30);
  std::uniform_int_distribution<int> byte(32, 126);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    int n = len(rng);
    for (int j = 0; j < n; ++j) s.push_back(static_cast<char>(byte(rng)));
    auto once = normalize_term(s);
    CHECK(normalize_term(once) == once);
  }
}

TEST_CASE("normalize_surface strips surrounding quotes") {
  CHECK(normalize_surface("'aspirin'") == "aspirin");
  CHECK(normalize_surface("\"81 MG\"") == "81 mg");
  CHECK(normalize_surface("‘warfarin’") == "warfarin");
  CHECK(normalize_surface("“insulin”") == "insulin");
  CHECK(normalize_surface("o'clock") == "o'clock");
  CHECK(normalize_surface("  Plavix  75 ") == "plavix 75");
  auto once = normalize_surface("''x''");
  CHECK(normalize_surface(once) == once);
}

TEST_CASE("split") {
  auto parts = split("a|b||c", '|');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[2] == "");
  CHECK(split("", '|').size() == 1);
}

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(to_hex(0x0000000000000001ULL) == "0000000000000001");
}

TEST_CASE("fnv1a64 seeding chains") {
  auto h1 = fnv1a64("ab");
  auto h2 = fnv1a64("b", fnv1a64("a"));
  CHECK(h1 == h2);
}

TEST_CASE("hash spot check stays collision-free on 100k distinct keys") {
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100000; ++i) {
    seen.insert(fnv1a64("key-" + std::to_string(i)));
  }
  CHECK(seen.size() == 100000);
}

TEST_CASE("quote_length_at") {
  bool is_double = false;
  CHECK(quote_length_at("'", 0, &is_double) == 1);
  CHECK_FALSE(is_double);
  CHECK(quote_length_at("\"", 0, &is_double) == 1);
  CHECK(is_double);
  CHECK(quote_length_at("`", 0, &is_double) == 1);
  CHECK_FALSE(is_double);

  std::string open_single = "‘";
  std::string close_double = "”";
  CHECK(quote_length_at(open_single, 0, &is_double) == 3);
  CHECK_FALSE(is_double);
  CHECK(quote_length_at(close_double, 0, &is_double) == 3);
  CHECK(is_double);

  CHECK(quote_length_at("x", 0, &is_double) == 0);
  CHECK(quote_length_at("ab'", 2, &is_double) == 1);
}
