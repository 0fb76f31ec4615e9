#pragma once

#include <string>
#include <string_view>

#include "medrex/errors.hpp"

namespace medrex {

// One MRCONSO.RRF record, reduced to the fields this pipeline uses.
// Column layout (pipe-delimited, 0-based): 0 CUI, 1 LAT, 11 SAB, 14 STR,
// 16 SUPPRESS. A trailing pipe is tolerated.
struct ConceptRow {
  std::string cui;           // C + 7 digits
  std::string language;      // 3-letter code, e.g. ENG
  std::string source_vocab;  // SAB
  std::string term;          // non-empty after trimming
  std::string suppress;      // single-character flag, possibly empty
};

// One MRSTY.RRF record: 0 CUI, 1 TUI, 3 semantic type name.
struct SemanticTypeRow {
  std::string cui;
  std::string tui;  // T + 3 digits
  std::string sty_name;
};

bool is_valid_cui(std::string_view s);
bool is_valid_tui(std::string_view s);

// Both throw MalformedRow on short records, pattern violations, an empty
// term, or a multi-character suppress flag.
ConceptRow parse_conso_line(std::string_view line);
SemanticTypeRow parse_sty_line(std::string_view line);

}  // namespace medrex
