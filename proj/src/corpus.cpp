#include "medrex/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "medrex/errors.hpp"
#include "medrex/text.hpp"

namespace medrex {

namespace {

using nlohmann::json;

const std::vector<std::pair<RelationType, std::string_view>> kRelationNames = {
    {RelationType::StrengthDrug, "Strength-Drug"}, {RelationType::DurationDrug, "Duration-Drug"},
    {RelationType::RouteDrug, "Route-Drug"},       {RelationType::FormDrug, "Form-Drug"},
    {RelationType::AdeDrug, "ADE-Drug"},           {RelationType::DosageDrug, "Dosage-Drug"},
    {RelationType::ReasonDrug, "Reason-Drug"},     {RelationType::FrequencyDrug, "Frequency-Drug"},
    {RelationType::DrugAde, "Drug-ADE"},           {RelationType::DrugDosage, "Drug-Dosage"},
};

}  // namespace

const std::vector<RelationType>& all_relation_types() {
  static const std::vector<RelationType> types = [] {
    std::vector<RelationType> v;
    for (const auto& [rtype, name] : kRelationNames) v.push_back(rtype);
    return v;
  }();
  return types;
}

std::string_view relation_name(RelationType rtype) {
  for (const auto& [t, name] : kRelationNames) {
    if (t == rtype) return name;
  }
  return "?";
}

std::optional<RelationType> relation_from_name(std::string_view name) {
  for (const auto& [t, n] : kRelationNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

std::string_view attribute_label(RelationType rtype) {
  switch (rtype) {
    case RelationType::StrengthDrug: return "Strength";
    case RelationType::DurationDrug: return "Duration";
    case RelationType::RouteDrug: return "Route";
    case RelationType::FormDrug: return "Form";
    case RelationType::AdeDrug: return "ADE";
    case RelationType::DosageDrug: return "Dosage";
    case RelationType::ReasonDrug: return "Reason";
    case RelationType::FrequencyDrug: return "Frequency";
    case RelationType::DrugAde: return "ADE";
    case RelationType::DrugDosage: return "Dosage";
  }
  return "?";
}

bool is_discharge_pair(RelationType rtype) {
  return rtype != RelationType::DrugAde && rtype != RelationType::DrugDosage;
}

bool is_case_report_pair(RelationType rtype) { return !is_discharge_pair(rtype); }

std::string_view dataset_tag_name(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::n2c2: return "n2c2";
    case DatasetTag::ade: return "ade";
    case DatasetTag::other: return "other";
  }
  return "other";
}

DatasetTag dataset_tag_from_name(std::string_view name) {
  if (name == "n2c2") return DatasetTag::n2c2;
  if (name == "ade") return DatasetTag::ade;
  return DatasetTag::other;
}

std::size_t CorpusStats::total_relations() const {
  std::size_t total = 0;
  for (const auto& [rtype, n] : relation_counts) total += n;
  return total;
}

std::size_t CorpusStats::count(RelationType rtype) const {
  auto it = relation_counts.find(rtype);
  return it == relation_counts.end() ? 0 : it->second;
}

CorpusStats corpus_stats(const std::vector<GoldRelation>& relations) {
  CorpusStats stats;
  for (const auto& rel : relations) ++stats.relation_counts[rel.rtype];
  return stats;
}

CorpusStats corpus_stats(const std::vector<Document>& docs, const std::vector<GoldRelation>& relations) {
  CorpusStats stats = corpus_stats(relations);
  stats.document_count = docs.size();
  return stats;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

std::string where(const std::string& doc_id, std::size_t line_no) {
  return doc_id + " line " + std::to_string(line_no) + ": ";
}

// Entity spans written by annotation tools collapse newlines to spaces.
bool matches_with_newlines(std::string_view slice, std::string_view surface) {
  if (slice.size() != surface.size()) return false;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    char a = slice[i] == '\n' ? ' ' : slice[i];
    if (a != surface[i]) return false;
  }
  return true;
}

void parse_entity_line(const std::string& line, const std::string& doc_id, std::size_t line_no,
                       const std::string& text, std::unordered_map<std::string, GoldEntity>& entities) {
  auto tab1 = line.find('\t');
  auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
  if (tab2 == std::string::npos) throw CorpusError(where(doc_id, line_no) + "malformed entity line");
  std::string id = line.substr(0, tab1);
  std::string middle = line.substr(tab1 + 1, tab2 - tab1 - 1);
  std::string surface = line.substr(tab2 + 1);

  auto fields = split(middle, ' ');
  if (fields.size() != 3) throw CorpusError(where(doc_id, line_no) + "expected 'Label start end'");
  GoldEntity entity;
  entity.entity_id = id;
  entity.label = std::string(fields[0]);
  try {
    entity.start = std::stoll(std::string(fields[1]));
    entity.end = std::stoll(std::string(fields[2]));
  } catch (const std::exception&) {
    throw CorpusError(where(doc_id, line_no) + "non-numeric offsets");
  }
  if (entity.start < 0 || entity.end <= entity.start ||
      static_cast<std::size_t>(entity.end) > text.size()) {
    throw OffsetMismatch(where(doc_id, line_no) + "offsets outside document");
  }
  std::string_view slice(text.data() + entity.start, static_cast<std::size_t>(entity.end - entity.start));
  if (slice == surface) {
    entity.surface = surface;
  } else if (matches_with_newlines(slice, surface)) {
    entity.surface = std::string(slice);
  } else {
    throw OffsetMismatch(where(doc_id, line_no) + "surface does not match text slice: '" + surface + "'");
  }
  entities[id] = std::move(entity);
}

struct PendingRelation {
  std::size_t line_no;
  RelationType rtype;
  std::string arg1;
  std::string arg2;
};

PendingRelation parse_relation_line(const std::string& line, const std::string& doc_id, std::size_t line_no) {
  auto tab1 = line.find('\t');
  if (tab1 == std::string::npos) throw CorpusError(where(doc_id, line_no) + "malformed relation line");
  auto fields = split(trim(std::string_view(line).substr(tab1 + 1)), ' ');
  if (fields.size() != 3) throw CorpusError(where(doc_id, line_no) + "expected '<RType> Arg1:T<i> Arg2:T<j>'");

  auto rtype = relation_from_name(fields[0]);
  if (!rtype) {
    throw UnknownRelationType(where(doc_id, line_no) + "unknown relation type '" + std::string(fields[0]) + "'");
  }
  PendingRelation rel{line_no, *rtype, "", ""};
  for (std::size_t i = 1; i < 3; ++i) {
    std::string_view f = fields[i];
    if (f.rfind("Arg1:", 0) == 0) {
      rel.arg1 = std::string(f.substr(5));
    } else if (f.rfind("Arg2:", 0) == 0) {
      rel.arg2 = std::string(f.substr(5));
    } else {
      throw CorpusError(where(doc_id, line_no) + "expected Arg1:/Arg2: references");
    }
  }
  if (rel.arg1.empty() || rel.arg2.empty()) {
    throw CorpusError(where(doc_id, line_no) + "relation is missing an argument");
  }
  return rel;
}

}  // namespace

Corpus load_standoff_corpus(const std::filesystem::path& text_dir, const std::filesystem::path& ann_dir) {
  std::vector<std::filesystem::path> text_files;
  for (const auto& entry : std::filesystem::directory_iterator(text_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") text_files.push_back(entry.path());
  }
  std::sort(text_files.begin(), text_files.end());

  Corpus corpus;
  for (const auto& text_path : text_files) {
    std::string doc_id = text_path.stem().string();
    std::string text = read_file(text_path);
    corpus.first.push_back({doc_id, text, DatasetTag::n2c2});

    auto ann_path = ann_dir / (doc_id + ".ann");
    if (!std::filesystem::exists(ann_path)) {
      throw CorpusError("missing annotation file for document " + doc_id + ": " + ann_path.string());
    }

    std::unordered_map<std::string, GoldEntity> entities;
    std::vector<PendingRelation> pending;
    std::istringstream ann(read_file(ann_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ann, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == 'T') {
        parse_entity_line(line, doc_id, line_no, text, entities);
      } else if (line[0] == 'R') {
        pending.push_back(parse_relation_line(line, doc_id, line_no));
      }
      // other annotation kinds (attributes, notes, events) are ignored
    }

    for (const auto& rel : pending) {
      auto head = entities.find(rel.arg1);
      auto tail = entities.find(rel.arg2);
      if (head == entities.end()) {
        throw DanglingReference(where(doc_id, rel.line_no) + "unknown entity " + rel.arg1);
      }
      if (tail == entities.end()) {
        throw DanglingReference(where(doc_id, rel.line_no) + "unknown entity " + rel.arg2);
      }
      corpus.second.push_back({doc_id, rel.rtype, head->second, tail->second});
    }
  }
  return corpus;
}

namespace {

std::optional<std::pair<std::int64_t, std::int64_t>> record_span(const json& record, const std::string& key) {
  std::string span_key = key + "_span";
  if (record.contains(span_key)) {
    const auto& span = record.at(span_key);
    if (!span.is_array() || span.size() != 2) throw SchemaError("bad " + span_key + " value");
    return {{span.at(0).get<std::int64_t>(), span.at(1).get<std::int64_t>()}};
  }
  if (record.contains("indexes")) {
    const auto& indexes = record.at("indexes");
    if (indexes.contains(key)) {
      const auto& idx = indexes.at(key);
      const auto& starts = idx.at("start_char");
      const auto& ends = idx.at("end_char");
      if (!starts.is_array() || starts.empty() || !ends.is_array() || ends.empty()) {
        throw SchemaError("bad indexes entry for '" + key + "'");
      }
      return {{starts.at(0).get<std::int64_t>(), ends.at(0).get<std::int64_t>()}};
    }
  }
  return std::nullopt;
}

GoldEntity ade_entity(const json& record, const std::string& key, const std::string& label,
                      const std::string& text, std::size_t line_no) {
  GoldEntity entity;
  entity.label = label;
  entity.surface = record.at(key).get<std::string>();
  if (auto span = record_span(record, key)) {
    entity.start = span->first;
    entity.end = span->second;
    if (entity.start < 0 || entity.end <= entity.start ||
        static_cast<std::size_t>(entity.end) > text.size()) {
      throw OffsetMismatch("record " + std::to_string(line_no) + ": " + key + " span outside text");
    }
    std::string_view slice(text.data() + entity.start, static_cast<std::size_t>(entity.end - entity.start));
    if (slice != entity.surface) {
      throw OffsetMismatch("record " + std::to_string(line_no) + ": " + key + " span does not match surface");
    }
  }
  return entity;
}

}  // namespace

Corpus load_ade_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_map<std::string, std::string> doc_ids;  // text -> doc_id
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("record " + std::to_string(line_no) + ": not valid JSON: " + e.what());
    }
    if (!record.contains("text") || !record.at("text").is_string()) {
      throw SchemaError("record " + std::to_string(line_no) + ": missing 'text'");
    }
    if (!record.contains("drug")) {
      throw SchemaError("record " + std::to_string(line_no) + ": missing 'drug'");
    }
    bool has_effect = record.contains("effect");
    bool has_dosage = record.contains("dosage");
    if (has_effect == has_dosage) {
      throw SchemaError("record " + std::to_string(line_no) + ": need exactly one of 'effect' or 'dosage'");
    }

    std::string text = record.at("text").get<std::string>();
    auto [it, inserted] = doc_ids.try_emplace(text, "");
    if (inserted) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "ade-%06zu", doc_ids.size() - 1);
      it->second = buf;
      corpus.first.push_back({it->second, text, DatasetTag::ade});
    }
    const std::string& doc_id = it->second;

    GoldRelation rel;
    rel.doc_id = doc_id;
    rel.rtype = has_effect ? RelationType::DrugAde : RelationType::DrugDosage;
    rel.head = ade_entity(record, "drug", "Drug", text, line_no);
    rel.tail = has_effect ? ade_entity(record, "effect", "ADE", text, line_no)
                          : ade_entity(record, "dosage", "Dosage", text, line_no);
    corpus.second.push_back(std::move(rel));
  }
  return corpus;
}

Corpus load_ade_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  return load_ade_corpus(in);
}

namespace {

json entity_to_json(const GoldEntity& entity) {
  return {{"id", entity.entity_id}, {"label", entity.label},     {"start", entity.start},
          {"end", entity.end},      {"surface", entity.surface}};
}

GoldEntity entity_from_json(const json& j) {
  GoldEntity entity;
  entity.entity_id = j.value("id", "");
  entity.label = j.at("label").get<std::string>();
  entity.start = j.at("start").get<std::int64_t>();
  entity.end = j.at("end").get<std::int64_t>();
  entity.surface = j.at("surface").get<std::string>();
  return entity;
}

}  // namespace

void save_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.first) {
    json rec{{"doc_id", doc.doc_id}, {"text", doc.text}, {"dataset_tag", dataset_tag_name(doc.dataset_tag)}};
    out << rec.dump() << '\n';
  }
  for (const auto& rel : corpus.second) {
    json rec{{"doc_id", rel.doc_id},
             {"rtype", relation_name(rel.rtype)},
             {"head", entity_to_json(rel.head)},
             {"tail", entity_to_json(rel.tail)}};
    out << rec.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot open corpus file for writing: " + path.string());
  save_corpus(corpus, out);
}

Corpus load_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("record " + std::to_string(line_no) + ": not valid JSON: " + e.what());
    }
    try {
      if (rec.contains("text")) {
        corpus.first.push_back({rec.at("doc_id").get<std::string>(), rec.at("text").get<std::string>(),
                                dataset_tag_from_name(rec.value("dataset_tag", "other"))});
      } else {
        GoldRelation rel;
        rel.doc_id = rec.at("doc_id").get<std::string>();
        std::string rtype_name = rec.at("rtype").get<std::string>();
        auto rtype = relation_from_name(rtype_name);
        if (!rtype) {
          throw UnknownRelationType("record " + std::to_string(line_no) + ": unknown relation type '" +
                                    rtype_name + "'");
        }
        rel.rtype = *rtype;
        rel.head = entity_from_json(rec.at("head"));
        rel.tail = entity_from_json(rec.at("tail"));
        corpus.second.push_back(std::move(rel));
      }
    } catch (const json::exception& e) {
      throw SchemaError("record " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  return load_corpus(in);
}

}  // namespace medrex
