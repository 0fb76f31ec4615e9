#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medrex/document.hpp"

namespace medrex {

// The eight discharge-summary attribute pairs plus the two case-report pairs.
enum class RelationType {
  StrengthDrug,
  DurationDrug,
  RouteDrug,
  FormDrug,
  AdeDrug,
  DosageDrug,
  ReasonDrug,
  FrequencyDrug,
  DrugAde,
  DrugDosage,
};

const std::vector<RelationType>& all_relation_types();
std::string_view relation_name(RelationType rtype);
std::optional<RelationType> relation_from_name(std::string_view name);
// Entity category carried by the non-drug side of the pair ("Strength", "ADE", ...).
std::string_view attribute_label(RelationType rtype);
bool is_discharge_pair(RelationType rtype);  // first eight types
bool is_case_report_pair(RelationType rtype);  // Drug-ADE, Drug-Dosage

struct GoldEntity {
  std::string entity_id;
  std::string label;
  // Byte offsets into document text; (-1, -1) marks an unlocated mention
  // known only by its surface string.
  std::int64_t start = -1;
  std::int64_t end = -1;
  std::string surface;

  bool has_span() const { return start >= 0 && end >= 0; }
  bool operator==(const GoldEntity&) const = default;
};

struct GoldRelation {
  std::string doc_id;
  RelationType rtype = RelationType::StrengthDrug;
  // For discharge pairs the head is the attribute and the tail the drug;
  // for case-report pairs the head is the drug.
  GoldEntity head;
  GoldEntity tail;

  bool operator==(const GoldRelation&) const = default;
};

struct CorpusStats {
  std::map<RelationType, std::size_t> relation_counts;
  std::size_t document_count = 0;

  std::size_t total_relations() const;
  std::size_t count(RelationType rtype) const;
  bool operator==(const CorpusStats&) const = default;
};

using Corpus = std::pair<std::vector<Document>, std::vector<GoldRelation>>;

// Reads .txt files from text_dir and same-stem .ann files from ann_dir.
// Annotation lines: "T<n>\t<Label> <start> <end>\t<surface>" declare entities
// and "R<n>\t<RType> Arg1:T<i> Arg2:T<j>" declare relations (head = Arg1).
Corpus load_standoff_corpus(const std::filesystem::path& text_dir, const std::filesystem::path& ann_dir);

// Reads JSON-lines case-report records: {"text", "drug", "effect"|"dosage"}
// with optional span fields. Records sharing a text become one document.
Corpus load_ade_corpus(const std::filesystem::path& path);
Corpus load_ade_corpus(std::istream& in);

CorpusStats corpus_stats(const std::vector<GoldRelation>& relations);
CorpusStats corpus_stats(const std::vector<Document>& docs, const std::vector<GoldRelation>& relations);

// Canonical JSON-lines interchange: one {"doc_id","text","dataset_tag"}
// record per document followed by one record per relation.
void save_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace medrex
