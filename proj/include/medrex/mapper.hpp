#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "medrex/aho_corasick.hpp"
#include "medrex/document.hpp"
#include "medrex/lexicon.hpp"

namespace medrex {

// One occurrence of a lexicon term inside a document. Offsets are byte
// positions into Document::text, half-open, and surface is the exact slice.
struct ConceptMatch {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string cui;
  std::string sty_name;

  bool operator==(const ConceptMatch&) const = default;
};

// Distinct medication mentions of a document, deduplicated by normalized
// form and sorted by it. Each entry keeps the earliest surface spelling.
struct MedicationList {
  std::vector<std::string> terms;
  std::vector<ConceptMatch> matches;

  bool empty() const { return terms.empty(); }
  std::string joined(std::string_view separator = ", ") const;

  bool operator==(const MedicationList&) const = default;
};

struct MatcherOptions {
  std::size_t min_term_length = 2;

  bool operator==(const MatcherOptions&) const = default;
};

// Pluggable mapping step: anything that turns a document into concept
// matches. The default implementation is the dictionary matcher below; an
// adapter around an external mapping service can be swapped in behind it.
class ConceptMapperProvider {
 public:
  virtual ~ConceptMapperProvider() = default;
  virtual std::vector<ConceptMatch> map(const Document& doc) const = 0;
};

// Deterministic dictionary matcher. Finds leftmost-longest, non-overlapping,
// case-insensitive occurrences of lexicon terms whose ends fall on word
// boundaries. The lexicon must outlive the matcher.
class LexiconMatcher : public ConceptMapperProvider {
 public:
  explicit LexiconMatcher(const ConceptLexicon& lexicon, MatcherOptions options = {});

  std::vector<ConceptMatch> map(const Document& doc) const override;
  const MatcherOptions& options() const { return options_; }

 private:
  const ConceptLexicon* lexicon_;
  MatcherOptions options_;
  AhoCorasick automaton_;
  // pattern id -> (normalized term length, smallest (cui, sty) of the term)
  std::vector<const std::pair<const std::string, ConceptLexicon::ConceptSet>*> terms_;
};

std::vector<ConceptMatch> map_concepts(const Document& doc, const ConceptLexicon& lexicon,
                                       MatcherOptions options = {});

MedicationList filter_matches(const std::vector<ConceptMatch>& matches, const SemanticFilter& filter);

// Corpus-level mapping, one match list per document (index-aligned).
std::vector<std::vector<ConceptMatch>> map_corpus(const std::vector<Document>& docs,
                                                  const ConceptMapperProvider& provider);

namespace serial {
std::vector<std::vector<ConceptMatch>> map_corpus(const std::vector<Document>& docs,
                                                  const ConceptMapperProvider& provider);
}  // namespace serial

}  // namespace medrex
