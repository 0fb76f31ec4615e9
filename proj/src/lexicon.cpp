#include "medrex/lexicon.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "medrex/text.hpp"

namespace medrex {

namespace {

using nlohmann::json;

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

SemanticFilter SemanticFilter::medications() {
  SemanticFilter f;
  f.sty_names = {"organic chemical", "antibiotic", "pharmacologic substance"};
  f.tuis = {"T109", "T195", "T121"};
  return f;
}

bool SemanticFilter::accepts_name(std::string_view sty_name) const {
  std::string lowered = to_lower(trim(sty_name));
  for (const auto& name : sty_names) {
    if (to_lower(name) == lowered) return true;
  }
  return false;
}

bool SemanticFilter::accepts(std::string_view sty_name, std::string_view tui) const {
  if (accepts_name(sty_name)) return true;
  for (const auto& t : tuis) {
    if (t == tui) return true;
  }
  return false;
}

bool ConceptLexicon::contains(std::string_view normalized_term) const {
  return find(normalized_term) != nullptr;
}

const ConceptLexicon::ConceptSet* ConceptLexicon::find(std::string_view normalized_term) const {
  auto it = entries.find(std::string(normalized_term));
  return it == entries.end() ? nullptr : &it->second;
}

namespace {

// CUI -> accepted semantic type names, restricted to CUIs with at least one
// accepted type. This is the only whole-file structure kept in memory.
using StyMap = std::unordered_map<std::string, std::set<std::string>>;

StyMap build_sty_map(std::istream& sty, const SemanticFilter& filter, const LexiconBuildOptions& options,
                     LexiconBuildStats* stats) {
  StyMap map;
  std::string line;
  while (read_line(sty, line)) {
    if (line.empty()) continue;
    if (stats) ++stats->sty_rows;
    SemanticTypeRow row;
    try {
      row = parse_sty_line(line);
    } catch (const MalformedRow&) {
      if (options.on_malformed == LexiconBuildOptions::OnMalformed::abort) throw;
      if (stats) ++stats->malformed_sty;
      continue;
    }
    if (filter.accepts(row.sty_name, row.tui)) map[row.cui].insert(row.sty_name);
  }
  return map;
}

bool row_kept(const ConceptRow& row, const LexiconBuildOptions& options) {
  bool lang_ok = false;
  for (const auto& lang : options.languages) {
    if (lang == row.language) {
      lang_ok = true;
      break;
    }
  }
  if (!lang_ok) return false;
  if (!row.suppress.empty() && options.drop_suppress_flags.find(row.suppress[0]) != std::string::npos) return false;
  return true;
}

}  // namespace

ConceptLexicon build_lexicon(std::istream& conso, std::istream& sty, const SemanticFilter& filter,
                             const LexiconBuildOptions& options, LexiconBuildStats* stats) {
  StyMap sty_map = build_sty_map(sty, filter, options, stats);

  ConceptLexicon lexicon;
  lexicon.filter = filter;
  lexicon.options = options;

  std::string line;
  while (read_line(conso, line)) {
    if (line.empty()) continue;
    if (stats) ++stats->conso_rows;
    ConceptRow row;
    try {
      row = parse_conso_line(line);
    } catch (const MalformedRow&) {
      if (options.on_malformed == LexiconBuildOptions::OnMalformed::abort) throw;
      if (stats) ++stats->malformed_conso;
      continue;
    }
    if (!row_kept(row, options)) continue;
    auto it = sty_map.find(row.cui);
    if (it == sty_map.end()) continue;
    std::string term = normalize_term(row.term);
    if (term.empty()) continue;
    auto& concepts = lexicon.entries[term];
    for (const auto& sty_name : it->second) concepts.insert({row.cui, sty_name});
    if (stats) ++stats->kept_rows;
  }

  if (lexicon.entries.empty()) throw EmptyLexicon("no terms survived the semantic filter");
  return lexicon;
}

std::size_t write_filtered_conso_rows(std::istream& conso, std::istream& sty, const SemanticFilter& filter,
                                      const LexiconBuildOptions& options, std::ostream& out) {
  StyMap sty_map = build_sty_map(sty, filter, options, nullptr);
  std::size_t written = 0;
  std::string line;
  while (read_line(conso, line)) {
    if (line.empty()) continue;
    ConceptRow row;
    try {
      row = parse_conso_line(line);
    } catch (const MalformedRow&) {
      if (options.on_malformed == LexiconBuildOptions::OnMalformed::abort) throw;
      continue;
    }
    if (!row_kept(row, options)) continue;
    if (!sty_map.contains(row.cui)) continue;
    out << line << '\n';
    ++written;
  }
  return written;
}

namespace {

constexpr std::string_view kLexiconFormat = "medrex-lexicon";
constexpr int kLexiconVersion = 1;

std::string term_record(const std::string& term, const ConceptLexicon::ConceptSet& concepts) {
  json rec;
  rec["term"] = term;
  json list = json::array();
  for (const auto& [cui, sty] : concepts) list.push_back(json::array({cui, sty}));
  rec["concepts"] = std::move(list);
  return rec.dump();
}

}  // namespace

void save_lexicon(const ConceptLexicon& lexicon, std::ostream& out) {
  std::vector<std::string> records;
  records.reserve(lexicon.entries.size());
  std::uint64_t hash = fnv1a64("");
  for (const auto& [term, concepts] : lexicon.entries) {
    records.push_back(term_record(term, concepts));
    hash = fnv1a64(records.back(), hash);
  }

  json header;
  header["format"] = kLexiconFormat;
  header["version"] = kLexiconVersion;
  header["sty_names"] = lexicon.filter.sty_names;
  header["tuis"] = lexicon.filter.tuis;
  header["languages"] = lexicon.options.languages;
  header["drop_suppress_flags"] = lexicon.options.drop_suppress_flags;
  header["on_malformed"] = lexicon.options.on_malformed == LexiconBuildOptions::OnMalformed::abort ? "abort" : "skip";
  header["term_count"] = lexicon.entries.size();
  header["content_hash"] = to_hex(hash);

  out << header.dump() << '\n';
  for (const auto& rec : records) out << rec << '\n';
}

void save_lexicon(const ConceptLexicon& lexicon, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LexiconCacheError("cannot open lexicon cache for writing: " + path.string());
  save_lexicon(lexicon, out);
}

ConceptLexicon load_lexicon(std::istream& in) {
  std::string line;
  if (!read_line(in, line)) throw LexiconCacheError("empty lexicon cache");

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw LexiconCacheError(std::string("bad lexicon cache header: ") + e.what());
  }
  if (header.value("format", "") != kLexiconFormat || header.value("version", 0) != kLexiconVersion) {
    throw LexiconCacheError("unrecognized lexicon cache format");
  }

  ConceptLexicon lexicon;
  lexicon.filter.sty_names = header.at("sty_names").get<std::vector<std::string>>();
  lexicon.filter.tuis = header.at("tuis").get<std::vector<std::string>>();
  lexicon.options.languages = header.at("languages").get<std::vector<std::string>>();
  lexicon.options.drop_suppress_flags = header.at("drop_suppress_flags").get<std::string>();
  lexicon.options.on_malformed = header.value("on_malformed", "abort") == "skip"
                                     ? LexiconBuildOptions::OnMalformed::skip
                                     : LexiconBuildOptions::OnMalformed::abort;

  std::uint64_t hash = fnv1a64("");
  std::size_t count = 0;
  while (read_line(in, line)) {
    if (line.empty()) continue;
    hash = fnv1a64(line, hash);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw LexiconCacheError(std::string("bad lexicon cache record: ") + e.what());
    }
    ConceptLexicon::ConceptSet concepts;
    for (const auto& pair : rec.at("concepts")) {
      concepts.insert({pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
    }
    lexicon.entries[rec.at("term").get<std::string>()] = std::move(concepts);
    ++count;
  }

  if (header.value("term_count", std::size_t{0}) != count || header.value("content_hash", "") != to_hex(hash)) {
    throw LexiconCacheError("lexicon cache digest mismatch");
  }
  return lexicon;
}

ConceptLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LexiconCacheError("cannot open lexicon cache: " + path.string());
  return load_lexicon(in);
}

}  // namespace medrex
