#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medrex/errors.hpp"
#include "medrex/rrf.hpp"

namespace medrex {

// Semantic-type gate for the medication slice of the thesaurus. Names are
// compared case-insensitively; TUI aliases cover releases where the display
// names drift.
struct SemanticFilter {
  std::vector<std::string> sty_names;
  std::vector<std::string> tuis;

  static SemanticFilter medications();

  bool accepts_name(std::string_view sty_name) const;
  bool accepts(std::string_view sty_name, std::string_view tui) const;
  bool empty() const { return sty_names.empty() && tuis.empty(); }

  bool operator==(const SemanticFilter&) const = default;
};

struct LexiconBuildOptions {
  std::vector<std::string> languages{"ENG"};
  std::string drop_suppress_flags = "OEY";  // rows whose flag is listed are dropped
  enum class OnMalformed { abort, skip };
  OnMalformed on_malformed = OnMalformed::abort;

  bool operator==(const LexiconBuildOptions&) const = default;
};

struct LexiconBuildStats {
  std::size_t conso_rows = 0;
  std::size_t sty_rows = 0;
  std::size_t malformed_conso = 0;
  std::size_t malformed_sty = 0;
  std::size_t kept_rows = 0;
};

// Normalized term -> set of (CUI, semantic type name). Immutable once built;
// safe to share across threads.
struct ConceptLexicon {
  using ConceptSet = std::set<std::pair<std::string, std::string>>;

  std::map<std::string, ConceptSet> entries;
  SemanticFilter filter;
  LexiconBuildOptions options;

  std::size_t term_count() const { return entries.size(); }
  bool contains(std::string_view normalized_term) const;
  const ConceptSet* find(std::string_view normalized_term) const;

  bool operator==(const ConceptLexicon&) const = default;
};

// Streams both RRF files and keeps memory proportional to the filtered
// output: the CUI->STY map holds only CUIs carrying an accepted type.
// Throws EmptyLexicon when nothing survives, MalformedRow under
// OnMalformed::abort.
ConceptLexicon build_lexicon(std::istream& conso, std::istream& sty, const SemanticFilter& filter,
                             const LexiconBuildOptions& options = {}, LexiconBuildStats* stats = nullptr);

// JSON-lines cache: a header record with the build config and a content
// hash, then one record per term. load verifies the hash.
void save_lexicon(const ConceptLexicon& lexicon, const std::filesystem::path& path);
void save_lexicon(const ConceptLexicon& lexicon, std::ostream& out);
ConceptLexicon load_lexicon(const std::filesystem::path& path);
ConceptLexicon load_lexicon(std::istream& in);

// Streams MRCONSO and emits the rows build_lexicon would keep, unmodified.
// Used to select which rows get chunked and embedded for retrieval.
std::size_t write_filtered_conso_rows(std::istream& conso, std::istream& sty, const SemanticFilter& filter,
                                      const LexiconBuildOptions& options, std::ostream& out);

}  // namespace medrex
