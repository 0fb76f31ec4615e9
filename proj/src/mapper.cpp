#include "medrex/mapper.hpp"

#include <cassert>
#include <cstdint>
#include <map>

#include "medrex/text.hpp"

namespace medrex {

std::string MedicationList::joined(std::string_view separator) const {
  std::string out;
  for (const auto& term : terms) {
    if (!out.empty()) out.append(separator);
    out.append(term);
  }
  return out;
}

LexiconMatcher::LexiconMatcher(const ConceptLexicon& lexicon, MatcherOptions options)
    : lexicon_(&lexicon), options_(options) {
  terms_.reserve(lexicon.entries.size());
  for (const auto& entry : lexicon.entries) {
    int id = automaton_.add_pattern(entry.first);
    assert(static_cast<std::size_t>(id) == terms_.size());
    (void)id;
    terms_.push_back(&entry);
  }
  if (!terms_.empty()) automaton_.build();
}

namespace {

// A boundary is valid when exactly one of its neighbouring characters is
// alphanumeric; positions past either end count as non-alphanumeric.
bool boundary_ok(const std::string& text, std::size_t pos) {
  bool left = pos > 0 && is_word_char(text[pos - 1]);
  bool right = pos < text.size() && is_word_char(text[pos]);
  return left != right;
}

}  // namespace

std::vector<ConceptMatch> LexiconMatcher::map(const Document& doc) const {
  std::vector<ConceptMatch> out;
  if (terms_.empty() || doc.text.empty()) return out;

  std::string lowered = to_lower(doc.text);
  // Longest boundary-valid candidate anchored at each start offset.
  std::vector<std::size_t> best_len(lowered.size(), 0);
  std::vector<int> best_pattern(lowered.size(), -1);

  automaton_.scan(lowered, [&](std::size_t end, int pattern) {
    std::size_t len = automaton_.pattern_length(pattern);
    if (len < options_.min_term_length) return;
    std::size_t start = end - len;
    if (!boundary_ok(lowered, start) || !boundary_ok(lowered, end)) return;
    if (len > best_len[start]) {
      best_len[start] = len;
      best_pattern[start] = pattern;
    }
  });

  std::size_t cursor = 0;
  for (std::size_t start = 0; start < lowered.size(); ++start) {
    if (best_pattern[start] < 0 || start < cursor) continue;
    std::size_t len = best_len[start];
    const auto& concepts = terms_[best_pattern[start]]->second;
    const auto& [cui, sty] = *concepts.begin();
    out.push_back({doc.text.substr(start, len), start, start + len, cui, sty});
    cursor = start + len;
  }
  return out;
}

std::vector<ConceptMatch> map_concepts(const Document& doc, const ConceptLexicon& lexicon,
                                       MatcherOptions options) {
  return LexiconMatcher(lexicon, options).map(doc);
}

MedicationList filter_matches(const std::vector<ConceptMatch>& matches, const SemanticFilter& filter) {
  MedicationList list;
  for (const auto& m : matches) {
    if (filter.accepts_name(m.sty_name)) list.matches.push_back(m);
  }
  // normalized form -> earliest surface spelling
  std::map<std::string, std::string> by_norm;
  for (const auto& m : list.matches) by_norm.try_emplace(normalize_term(m.surface), m.surface);
  list.terms.reserve(by_norm.size());
  for (auto& [norm, surface] : by_norm) list.terms.push_back(std::move(surface));
  return list;
}

std::vector<std::vector<ConceptMatch>> map_corpus(const std::vector<Document>& docs,
                                                  const ConceptMapperProvider& provider) {
  std::vector<std::vector<ConceptMatch>> out(docs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(docs.size()); ++i) {
    out[static_cast<std::size_t>(i)] = provider.map(docs[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace serial {

std::vector<std::vector<ConceptMatch>> map_corpus(const std::vector<Document>& docs,
                                                  const ConceptMapperProvider& provider) {
  std::vector<std::vector<ConceptMatch>> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(provider.map(doc));
  return out;
}

}  // namespace serial

}  // namespace medrex
