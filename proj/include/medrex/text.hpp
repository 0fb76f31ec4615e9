#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medrex {

inline bool is_word_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_space_char(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Runs of whitespace become one space, leading/trailing whitespace dropped.
std::string collapse_whitespace(std::string_view s);

// Lexicon-side normalization: lowercase, whitespace collapsed, trailing
// periods removed. Idempotent.
std::string normalize_term(std::string_view s);

// Evaluation-side normalization: lowercase, whitespace collapsed, surrounding
// quote marks (straight or typographic) removed. Idempotent.
std::string normalize_surface(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

// FNV-1a, the content hash used for prompt ids, cache keys and file digests.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string fnv1a64_hex(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

// Shared by the pair parser and the surface normalizer. Position-aware so
// multi-byte typographic quotes are recognized; returns the byte length of
// the quote at `pos` (0 when there is none) and its class via `is_double`.
std::size_t quote_length_at(std::string_view s, std::size_t pos, bool* is_double = nullptr);

}  // namespace medrex
