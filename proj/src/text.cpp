#include "medrex/text.hpp"

#include <array>
#include <cstdio>

namespace medrex {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space_char(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space_char(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space_char(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string normalize_term(std::string_view s) {
  std::string out = collapse_whitespace(to_lower(s));
  // Keep stripping until stable so the result is idempotent ("abc.." -> "abc").
  for (;;) {
    std::size_t n = out.size();
    while (!out.empty() && out.back() == '.') out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
    if (out.size() == n) break;
  }
  return out;
}

std::size_t quote_length_at(std::string_view s, std::size_t pos, bool* is_double) {
  if (pos >= s.size()) return 0;
  char c = s[pos];
  if (c == '\'' || c == '`') {
    if (is_double) *is_double = false;
    return 1;
  }
  if (c == '"') {
    if (is_double) *is_double = true;
    return 1;
  }
  // U+2018/U+2019 single, U+201C/U+201D double: E2 80 98/99/9C/9D.
  if (pos + 2 < s.size() && static_cast<unsigned char>(s[pos]) == 0xE2 &&
      static_cast<unsigned char>(s[pos + 1]) == 0x80) {
    unsigned char b = static_cast<unsigned char>(s[pos + 2]);
    if (b == 0x98 || b == 0x99) {
      if (is_double) *is_double = false;
      return 3;
    }
    if (b == 0x9C || b == 0x9D) {
      if (is_double) *is_double = true;
      return 3;
    }
  }
  return 0;
}

namespace {

// Length of a quote mark ending exactly at `end` (an exclusive byte offset).
std::size_t quote_length_before(std::string_view s, std::size_t end) {
  if (end >= 1 && quote_length_at(s, end - 1, nullptr) == 1) return 1;
  if (end >= 3 && quote_length_at(s, end - 3, nullptr) == 3) return 3;
  return 0;
}

}  // namespace

std::string normalize_surface(std::string_view s) {
  std::string_view v = trim(s);
  for (;;) {
    std::size_t lead = quote_length_at(v, 0, nullptr);
    if (lead == 0 || lead >= v.size()) break;
    std::size_t tail = quote_length_before(v, v.size());
    if (tail == 0 || lead + tail > v.size()) break;
    v = trim(v.substr(lead, v.size() - lead - tail));
  }
  return collapse_whitespace(to_lower(v));
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf, 16);
}

std::string fnv1a64_hex(std::string_view data, std::uint64_t seed) {
  return to_hex(fnv1a64(data, seed));
}

}  // namespace medrex
