#pragma once

#include <string>
#include <vector>

#include "medrex/corpus.hpp"
#include "medrex/mode.hpp"

namespace medrex {

// Tuple orientation shared by the prompt templates, this parser, and the
// evaluator: the first tuple element names the drug.
inline constexpr bool kDrugFirstTuples = true;

enum class Severity { info, warning, error };

std::string_view severity_name(Severity severity);

struct Diagnostic {
  Severity severity = Severity::info;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct ExtractedPair {
  std::string head;
  std::string tail;
  std::string doc_id;
  RelationType rtype = RelationType::StrengthDrug;
  PromptMode source_mode = PromptMode::baseline;

  bool operator==(const ExtractedPair&) const = default;
};

struct ParseOutcome {
  std::vector<ExtractedPair> pairs;
  std::vector<Diagnostic> diagnostics;

  bool clean() const;
};

struct ParseOptions {
  bool deduplicate = true;

  bool operator==(const ParseOptions&) const = default;
};

// Scans arbitrary completion text for parenthesized 2-tuples of quoted (or
// bare) elements, tolerating typographic quotes, escapes, trailing commas,
// and surrounding prose. Never throws; failures surface as diagnostics.
ParseOutcome parse_pairs(std::string_view raw, std::string_view doc_id, RelationType rtype, PromptMode mode,
                         const ParseOptions& options = {});

// Canonical tuple-list rendering: [('head', 'tail'), ...]. Re-parsing the
// result yields the same pairs.
std::string serialize_pairs(const std::vector<ExtractedPair>& pairs);

}  // namespace medrex
