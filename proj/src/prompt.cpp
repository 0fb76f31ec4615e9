#include "medrex/prompt.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "medrex/errors.hpp"
#include "medrex/text.hpp"

namespace medrex {

std::string_view mode_name(PromptMode mode) {
  switch (mode) {
    case PromptMode::baseline: return "baseline";
    case PromptMode::umls: return "umls";
    case PromptMode::rag: return "rag";
  }
  return "baseline";
}

PromptMode mode_from_name(std::string_view name) {
  if (name == "baseline") return PromptMode::baseline;
  if (name == "umls") return PromptMode::umls;
  if (name == "rag") return PromptMode::rag;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected baseline, umls, or rag)");
}

std::string_view entity_word(RelationType rtype) {
  switch (rtype) {
    case RelationType::StrengthDrug: return "strength";
    case RelationType::DurationDrug: return "duration";
    case RelationType::RouteDrug: return "route";
    case RelationType::FormDrug: return "form";
    case RelationType::AdeDrug: return "adverse drug event";
    case RelationType::DosageDrug: return "dosage";
    case RelationType::ReasonDrug: return "reason";
    case RelationType::FrequencyDrug: return "frequency";
    case RelationType::DrugAde: return "adverse drug event";
    case RelationType::DrugDosage: return "dosage";
  }
  return "?";
}

namespace {

const std::set<std::string, std::less<>> kKnownPlaceholders = {"note_text", "medication_list", "entity_type",
                                                               "examples"};

bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Walks the body invoking on_text for literal runs and on_placeholder for
// {name} tokens. Any '{' that does not open a known placeholder is an error.
template <typename TextFn, typename PlaceholderFn>
void scan_body(const std::string& body, TextFn&& on_text, PlaceholderFn&& on_placeholder) {
  std::size_t pos = 0;
  std::size_t literal_start = 0;
  while (pos < body.size()) {
    if (body[pos] != '{') {
      ++pos;
      continue;
    }
    std::size_t name_start = pos + 1;
    std::size_t name_end = name_start;
    while (name_end < body.size() && placeholder_char(body[name_end])) ++name_end;
    if (name_end >= body.size() || body[name_end] != '}' || name_end == name_start) {
      throw TemplateError("stray '{' in template body at offset " + std::to_string(pos));
    }
    std::string_view name(body.data() + name_start, name_end - name_start);
    if (!kKnownPlaceholders.count(name)) {
      throw TemplateError("unknown placeholder {" + std::string(name) + "}");
    }
    on_text(std::string_view(body.data() + literal_start, pos - literal_start));
    on_placeholder(name);
    pos = name_end + 1;
    literal_start = pos;
  }
  on_text(std::string_view(body.data() + literal_start, body.size() - literal_start));
}

std::map<std::string, std::size_t> placeholder_counts(const std::string& body) {
  std::map<std::string, std::size_t> counts;
  scan_body(
      body, [](std::string_view) {}, [&](std::string_view name) { ++counts[std::string(name)]; });
  return counts;
}

std::string render_shot_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '\\' || c == '\'') out.push_back('\\');
      out.push_back(c);
    }
    return out;
  };
  std::string out = "[";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0) out += ", ";
    out += "('" + escape(pairs[i].first) + "', '" + escape(pairs[i].second) + "')";
  }
  out += "]";
  return out;
}

std::string render_examples(const std::vector<FewShotExample>& shots) {
  std::string out;
  for (const auto& shot : shots) {
    out += "Example:\nNote:\n";
    out += shot.example_text;
    out += "\nAnswer: ";
    out += render_shot_pairs(shot.example_pairs);
    out += "\n\n";
  }
  return out;
}

}  // namespace

void validate_template(const PromptTemplate& tmpl) {
  auto counts = placeholder_counts(tmpl.body);
  auto count = [&](const char* name) {
    auto it = counts.find(name);
    return it == counts.end() ? std::size_t{0} : it->second;
  };
  if (count("note_text") != 1) {
    throw TemplateError("template '" + tmpl.template_id + "' must contain {note_text} exactly once");
  }
  if (count("medication_list") > 1) {
    throw TemplateError("template '" + tmpl.template_id + "' contains {medication_list} more than once");
  }
  if (count("examples") > 1) {
    throw TemplateError("template '" + tmpl.template_id + "' contains {examples} more than once");
  }
  if (!tmpl.shots.empty() && count("examples") == 0) {
    throw TemplateError("template '" + tmpl.template_id + "' carries shots but no {examples} slot");
  }
  for (const auto& shot : tmpl.shots) {
    if (shot.example_pairs.empty()) {
      throw TemplateError("template '" + tmpl.template_id + "' has a worked example with no pairs");
    }
  }
}

void TemplateLibrary::add(PromptTemplate tmpl) {
  validate_template(tmpl);
  templates_.push_back(std::move(tmpl));
}

const PromptTemplate& TemplateLibrary::base_for(PromptMode mode) const {
  for (const auto& tmpl : templates_) {
    if (tmpl.mode == mode && !tmpl.target_rtype) return tmpl;
  }
  throw TemplateError("no base template for mode '" + std::string(mode_name(mode)) + "'");
}

namespace {

constexpr std::string_view kNoteMarker = "Note:\n{note_text}";

std::string baseline_body() {
  return
      "You extract medication relations from clinical notes.\n"
      "From the note below, list every pair of a drug and its {entity_type} exactly as written in the "
      "note.\n"
      "Answer with one Python-style list of 2-tuples, each written as ('<drug>', '<{entity_type}>'), and "
      "nothing else.\n"
      "Answer [] when the note states no such pair.\n"
      "\n"
      "{examples}"
      "Note:\n"
      "{note_text}\n"
      "\n"
      "Answer: ";
}

// The medication block is spliced in as one contiguous run so that a
// baseline prompt and the matching list-bearing prompt differ by exactly
// one insertion.
std::string umls_body() {
  std::string body = baseline_body();
  auto pos = body.find(kNoteMarker);
  body.insert(pos,
              "Medications found in this note by a medical concept lexicon:\n"
              "{medication_list}\n"
              "\n");
  return body;
}

std::vector<FewShotExample> builtin_shots() {
  return {
      {"Continue aspirin 81 mg daily and atorvastatin 40 mg at bedtime.",
       {{"aspirin", "81 mg"}, {"atorvastatin", "40 mg"}}},
      {"Metoprolol 25 mg was continued twice daily for rate control.", {{"Metoprolol", "25 mg"}}},
  };
}

}  // namespace

TemplateLibrary TemplateLibrary::builtin() {
  TemplateLibrary library;
  library.add({"baseline-default", PromptMode::baseline, baseline_body(), builtin_shots(), std::nullopt});
  library.add({"umls-default", PromptMode::umls, umls_body(), builtin_shots(), std::nullopt});
  library.add({"rag-default", PromptMode::rag, baseline_body(), builtin_shots(), std::nullopt});
  return library;
}

TemplateLibrary TemplateLibrary::from_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw TemplateError("no .tmpl files in " + dir.string());
  TemplateLibrary library;
  for (const auto& file : files) library.add(load_template_file(file));
  return library;
}

PromptTemplate template_for(RelationType rtype, PromptMode mode, const TemplateLibrary& library) {
  PromptTemplate tmpl = library.base_for(mode);
  std::string word(entity_word(rtype));
  std::string body;
  scan_body(
      tmpl.body, [&](std::string_view text) { body.append(text); },
      [&](std::string_view name) {
        if (name == "entity_type") {
          body.append(word);
        } else {
          body.push_back('{');
          body.append(name);
          body.push_back('}');
        }
      });
  tmpl.body = std::move(body);
  tmpl.target_rtype = rtype;
  return tmpl;
}

std::string prompt_fingerprint(std::string_view text, PromptMode mode, std::string_view params_fingerprint) {
  std::string blob;
  blob.reserve(text.size() + params_fingerprint.size() + 16);
  blob.append(mode_name(mode));
  blob.push_back('\x1f');
  blob.append(params_fingerprint);
  blob.push_back('\x1f');
  blob.append(text);
  return fnv1a64_hex(blob);
}

RenderedPrompt render(const PromptTemplate& tmpl, const Document& doc, const MedicationList& meds,
                      PromptMode mode, std::string_view params_fingerprint) {
  if (tmpl.mode != mode) {
    throw TemplateError("template '" + tmpl.template_id + "' is for mode '" +
                        std::string(mode_name(tmpl.mode)) + "', not '" + std::string(mode_name(mode)) + "'");
  }
  validate_template(tmpl);

  bool inject_meds = mode != PromptMode::baseline;
  std::string meds_value = inject_meds && !meds.empty() ? meds.joined(", ") : "(none)";
  std::string examples_value = render_examples(tmpl.shots);
  std::string entity_value;
  if (tmpl.body.find("{entity_type}") != std::string::npos) {
    if (!tmpl.target_rtype) {
      throw TemplateError("template '" + tmpl.template_id + "' has {entity_type} but no bound relation type");
    }
    entity_value = std::string(entity_word(*tmpl.target_rtype));
  }

  RenderedPrompt prompt;
  bool has_med_slot = false;
  scan_body(
      tmpl.body, [&](std::string_view text) { prompt.text.append(text); },
      [&](std::string_view name) {
        if (name == "note_text") {
          prompt.text.append(doc.text);
        } else if (name == "medication_list") {
          has_med_slot = true;
          prompt.text.append(meds_value);
        } else if (name == "entity_type") {
          prompt.text.append(entity_value);
        } else if (name == "examples") {
          prompt.text.append(examples_value);
        }
      });

  prompt.doc_id = doc.doc_id;
  prompt.rtype = tmpl.target_rtype.value_or(RelationType::StrengthDrug);
  prompt.mode = mode;
  prompt.params_fingerprint = std::string(params_fingerprint);
  if (inject_meds && has_med_slot) prompt.medication_terms = meds.terms;
  prompt.prompt_id = prompt_fingerprint(prompt.text, mode, params_fingerprint);
  return prompt;
}

namespace {

std::pair<std::string_view, std::string_view> split_key_value(std::string_view line) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos) throw TemplateError("expected 'key: value' line: " + std::string(line));
  return {trim(line.substr(0, colon)), trim(line.substr(colon + 1))};
}

}  // namespace

PromptTemplate parse_template_text(std::string_view content, std::string_view fallback_id) {
  PromptTemplate tmpl;
  tmpl.template_id = std::string(fallback_id);
  std::optional<std::set<std::string>> declared;

  std::size_t pos = 0;
  FewShotExample* current_shot = nullptr;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    std::string_view line = content.substr(pos, eol == std::string_view::npos ? content.size() - pos : eol - pos);
    std::size_t next = eol == std::string_view::npos ? content.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (trim(line) == "[body]") {
      tmpl.body = std::string(content.substr(next));
      break;
    }
    if (trim(line) == "[shot]") {
      tmpl.shots.emplace_back();
      current_shot = &tmpl.shots.back();
      pos = next;
      continue;
    }
    if (trim(line).empty()) {
      pos = next;
      continue;
    }

    auto [key, value] = split_key_value(line);
    if (current_shot) {
      if (key == "text") {
        current_shot->example_text = std::string(value);
      } else if (key == "pair") {
        auto sep = value.find(" | ");
        if (sep == std::string_view::npos) {
          throw TemplateError("shot pair must be 'head | tail': " + std::string(value));
        }
        current_shot->example_pairs.emplace_back(std::string(trim(value.substr(0, sep))),
                                                 std::string(trim(value.substr(sep + 3))));
      } else {
        throw TemplateError("unexpected key in [shot] block: " + std::string(key));
      }
    } else if (key == "template_id") {
      tmpl.template_id = std::string(value);
    } else if (key == "mode") {
      tmpl.mode = mode_from_name(value);
    } else if (key == "placeholders") {
      declared.emplace();
      for (auto part : split(value, ',')) {
        auto name = trim(part);
        if (!name.empty()) declared->insert(std::string(name));
      }
    } else {
      throw TemplateError("unexpected front-matter key: " + std::string(key));
    }
    pos = next;
  }

  if (tmpl.body.empty()) throw TemplateError("template file has no [body] section");
  if (declared) {
    std::set<std::string> actual;
    for (const auto& [name, n] : placeholder_counts(tmpl.body)) actual.insert(name);
    if (actual != *declared) {
      throw TemplateError("declared placeholder list does not match body placeholders in template '" +
                          tmpl.template_id + "'");
    }
  }
  validate_template(tmpl);
  return tmpl;
}

PromptTemplate load_template_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot open template file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_template_text(std::move(buf).str(), path.stem().string());
}

std::string template_to_text(const PromptTemplate& tmpl) {
  std::string out;
  out += "template_id: " + tmpl.template_id + "\n";
  out += "mode: " + std::string(mode_name(tmpl.mode)) + "\n";
  std::string names;
  for (const auto& [name, n] : placeholder_counts(tmpl.body)) {
    if (!names.empty()) names += ", ";
    names += name;
  }
  out += "placeholders: " + names + "\n";
  for (const auto& shot : tmpl.shots) {
    out += "\n[shot]\ntext: " + shot.example_text + "\n";
    for (const auto& [head, tail] : shot.example_pairs) out += "pair: " + head + " | " + tail + "\n";
  }
  out += "\n[body]\n" + tmpl.body;
  return out;
}

}  // namespace medrex
