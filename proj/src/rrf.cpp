#include "medrex/rrf.hpp"

#include "medrex/text.hpp"

namespace medrex {

bool is_valid_cui(std::string_view s) {
  if (s.size() != 8 || s[0] != 'C') return false;
  for (std::size_t i = 1; i < 8; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

bool is_valid_tui(std::string_view s) {
  if (s.size() != 4 || s[0] != 'T') return false;
  for (std::size_t i = 1; i < 4; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

namespace {

[[noreturn]] void malformed(std::string_view what, std::string_view line) {
  std::string msg = "malformed RRF row (";
  msg += what;
  msg += "): ";
  // Truncated echo of the offending line, enough to locate it in the file.
  msg += line.substr(0, 120);
  throw MalformedRow(msg);
}

}  // namespace

ConceptRow parse_conso_line(std::string_view line) {
  auto fields = split(line, '|');
  if (fields.size() < 17) malformed("expected at least 17 fields", line);
  if (!is_valid_cui(fields[0])) malformed("bad CUI", line);
  if (fields[16].size() > 1) malformed("bad SUPPRESS flag", line);
  std::string term(trim(fields[14]));
  if (term.empty()) malformed("empty term", line);
  ConceptRow row;
  row.cui = std::string(fields[0]);
  row.language = std::string(fields[1]);
  row.source_vocab = std::string(fields[11]);
  row.term = std::move(term);
  row.suppress = std::string(fields[16]);
  return row;
}

SemanticTypeRow parse_sty_line(std::string_view line) {
  auto fields = split(line, '|');
  if (fields.size() < 4) malformed("expected at least 4 fields", line);
  if (!is_valid_cui(fields[0])) malformed("bad CUI", line);
  if (!is_valid_tui(fields[1])) malformed("bad TUI", line);
  SemanticTypeRow row;
  row.cui = std::string(fields[0]);
  row.tui = std::string(fields[1]);
  row.sty_name = std::string(trim(fields[3]));
  return row;
}

}  // namespace medrex
