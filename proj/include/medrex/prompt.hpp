#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medrex/corpus.hpp"
#include "medrex/mapper.hpp"
#include "medrex/mode.hpp"

namespace medrex {

struct FewShotExample {
  std::string example_text;
  std::vector<std::pair<std::string, std::string>> example_pairs;

  bool operator==(const FewShotExample&) const = default;
};

// A prompt skeleton. Recognized placeholders: {note_text} (exactly once),
// {medication_list} (at most once), {entity_type}, {examples} (at most once,
// where the worked examples are rendered).
struct PromptTemplate {
  std::string template_id;
  PromptMode mode = PromptMode::baseline;
  std::string body;
  std::vector<FewShotExample> shots;
  std::optional<RelationType> target_rtype;

  bool operator==(const PromptTemplate&) const = default;
};

struct RenderedPrompt {
  std::string prompt_id;
  std::string text;
  std::string doc_id;
  RelationType rtype = RelationType::StrengthDrug;
  PromptMode mode = PromptMode::baseline;
  std::vector<std::string> medication_terms;
  std::string params_fingerprint;

  bool operator==(const RenderedPrompt&) const = default;
};

// Lowercase entity wording substituted for {entity_type}.
std::string_view entity_word(RelationType rtype);

// Throws TemplateError on unknown placeholders, wrong placeholder counts,
// shots without an {examples} slot, or a shot with no pairs.
void validate_template(const PromptTemplate& tmpl);

class TemplateLibrary {
 public:
  // One compiled-in base template per mode.
  static TemplateLibrary builtin();
  // Loads every *.tmpl file in the directory.
  static TemplateLibrary from_directory(const std::filesystem::path& dir);

  void add(PromptTemplate tmpl);
  const PromptTemplate& base_for(PromptMode mode) const;
  std::size_t size() const { return templates_.size(); }
  const std::vector<PromptTemplate>& templates() const { return templates_; }

 private:
  std::vector<PromptTemplate> templates_;
};

// Returns the mode's base template with {entity_type} bound to the pair's
// non-drug entity wording and target_rtype set.
PromptTemplate template_for(RelationType rtype, PromptMode mode, const TemplateLibrary& library);

// Substitutes all placeholders in one pass; values are inserted verbatim and
// never re-expanded. The medication list serializes as a comma-separated
// line of the deduplicated sorted terms, or "(none)" when empty.
RenderedPrompt render(const PromptTemplate& tmpl, const Document& doc, const MedicationList& meds,
                      PromptMode mode, std::string_view params_fingerprint = "");

// Content hash covering prompt text, mode, and generation parameters.
std::string prompt_fingerprint(std::string_view text, PromptMode mode, std::string_view params_fingerprint);

// Template file format: "key: value" front-matter lines (template_id, mode,
// optional placeholders list), then [shot] blocks ("text:" line followed by
// "pair: head | tail" lines), then a [body] line with the body verbatim to
// end of file.
PromptTemplate parse_template_text(std::string_view content, std::string_view fallback_id = "");
PromptTemplate load_template_file(const std::filesystem::path& path);
std::string template_to_text(const PromptTemplate& tmpl);

}  // namespace medrex
