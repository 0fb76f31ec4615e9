#include "medrex/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "medrex/lexicon.hpp"
#include "medrex/mapper.hpp"
#include "medrex/prompt.hpp"
#include "medrex/retriever.hpp"
#include "medrex/text.hpp"

namespace medrex {

namespace {

using nlohmann::json;

std::string path_str(const std::filesystem::path& p) { return p.generic_string(); }

std::filesystem::path path_from(const json& j, const char* key) {
  return std::filesystem::path(j.value(key, std::string{}));
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  static const std::set<std::string> kKnownKeys = {
      "mode",       "model_id", "corpus",        "ade_corpus",    "text_dir",
      "ann_dir",    "lexicon",  "index",         "chunks",        "template_dir",
      "mock_script", "output_dir", "rtypes",     "params",        "system_message",
      "embedder",   "embedding_dim", "top_k",    "parallelism",   "record_timestamps",
  };
  for (const auto& [key, value] : j.items()) {
    if (!kKnownKeys.count(key)) throw ConfigError("run config has unknown key '" + key + "'");
  }
  RunConfig cfg;
  cfg.mode = mode_from_name(j.value("mode", "baseline"));
  cfg.model_id = j.value("model_id", cfg.model_id);
  cfg.corpus_path = path_from(j, "corpus");
  cfg.ade_path = path_from(j, "ade_corpus");
  cfg.text_dir = path_from(j, "text_dir");
  cfg.ann_dir = path_from(j, "ann_dir");
  cfg.lexicon_path = path_from(j, "lexicon");
  cfg.index_path = path_from(j, "index");
  cfg.chunks_path = path_from(j, "chunks");
  cfg.template_dir = path_from(j, "template_dir");
  cfg.mock_script = path_from(j, "mock_script");
  if (j.contains("output_dir")) cfg.output_dir = path_from(j, "output_dir");
  if (j.contains("rtypes")) {
    for (const auto& name : j.at("rtypes")) {
      auto rtype = relation_from_name(name.get<std::string>());
      if (!rtype) {
        throw UnknownRelationType("run config names unknown relation type '" + name.get<std::string>() + "'");
      }
      cfg.rtypes.push_back(*rtype);
    }
  }
  if (j.contains("params")) {
    const auto& p = j.at("params");
    for (const auto& [key, value] : p.items()) {
      if (key != "max_tokens" && key != "temperature" && key != "top_p" && key != "presence_penalty") {
        throw ConfigError("run config has unknown params key '" + key + "'");
      }
    }
    cfg.params.max_tokens = p.value("max_tokens", cfg.params.max_tokens);
    cfg.params.temperature = p.value("temperature", cfg.params.temperature);
    cfg.params.top_p = p.value("top_p", cfg.params.top_p);
    cfg.params.presence_penalty = p.value("presence_penalty", cfg.params.presence_penalty);
  }
  cfg.system_message = j.value("system_message", "");
  cfg.embedder = j.value("embedder", cfg.embedder);
  cfg.embedding_dim = j.value("embedding_dim", cfg.embedding_dim);
  cfg.top_k = j.value("top_k", cfg.top_k);
  cfg.parallelism = j.value("parallelism", cfg.parallelism);
  cfg.record_timestamps = j.value("record_timestamps", cfg.record_timestamps);
  return cfg;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(std::move(buf).str());
}

namespace {

json config_to_json_value(const RunConfig& cfg) {
  json j;
  j["mode"] = mode_name(cfg.mode);
  j["model_id"] = cfg.model_id;
  j["corpus"] = path_str(cfg.corpus_path);
  j["ade_corpus"] = path_str(cfg.ade_path);
  j["text_dir"] = path_str(cfg.text_dir);
  j["ann_dir"] = path_str(cfg.ann_dir);
  j["lexicon"] = path_str(cfg.lexicon_path);
  j["index"] = path_str(cfg.index_path);
  j["chunks"] = path_str(cfg.chunks_path);
  j["template_dir"] = path_str(cfg.template_dir);
  j["mock_script"] = path_str(cfg.mock_script);
  j["output_dir"] = path_str(cfg.output_dir);
  json rtypes = json::array();
  for (auto rtype : cfg.rtypes) rtypes.push_back(relation_name(rtype));
  j["rtypes"] = std::move(rtypes);
  j["params"] = {{"max_tokens", cfg.params.max_tokens},
                 {"temperature", cfg.params.temperature},
                 {"top_p", cfg.params.top_p},
                 {"presence_penalty", cfg.params.presence_penalty}};
  j["system_message"] = cfg.system_message;
  j["embedder"] = cfg.embedder;
  j["embedding_dim"] = cfg.embedding_dim;
  j["top_k"] = cfg.top_k;
  j["parallelism"] = cfg.parallelism;
  j["record_timestamps"] = cfg.record_timestamps;
  return j;
}

}  // namespace

std::string RunConfig::to_json() const { return config_to_json_value(*this).dump(2); }

void RunConfig::validate() const {
  params.validate();
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  int sources = 0;
  if (!corpus_path.empty()) ++sources;
  if (!ade_path.empty()) ++sources;
  if (!text_dir.empty() || !ann_dir.empty()) {
    if (text_dir.empty() || ann_dir.empty()) {
      throw ConfigError("standoff corpora need both text_dir and ann_dir");
    }
    ++sources;
  }
  if (sources != 1) throw ConfigError("configure exactly one corpus source");
  if (mode == PromptMode::umls && lexicon_path.empty()) {
    throw ConfigError("umls mode needs a lexicon path");
  }
  if (mode == PromptMode::rag && (index_path.empty() || chunks_path.empty())) {
    throw ConfigError("rag mode needs index and chunks paths");
  }
  if (embedder != "hashing" && embedder != "http") {
    throw ConfigError("embedder must be 'hashing' or 'http'");
  }
  if (embedding_dim < 2) throw ConfigError("embedding_dim must be >= 2");
}

namespace {

void require_exists(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " does not exist: " + path.string());
  }
}

Corpus load_run_corpus(const RunConfig& cfg) {
  if (!cfg.ade_path.empty()) {
    require_exists(cfg.ade_path, "ade corpus");
    return load_ade_corpus(cfg.ade_path);
  }
  if (!cfg.text_dir.empty()) {
    require_exists(cfg.text_dir, "text_dir");
    require_exists(cfg.ann_dir, "ann_dir");
    return load_standoff_corpus(cfg.text_dir, cfg.ann_dir);
  }
  require_exists(cfg.corpus_path, "corpus");
  return load_corpus(cfg.corpus_path);
}

std::vector<RelationType> infer_rtypes(const std::vector<Document>& docs) {
  bool all_ade = !docs.empty();
  for (const auto& doc : docs) {
    if (doc.dataset_tag != DatasetTag::ade) all_ade = false;
  }
  if (all_ade) return {RelationType::DrugAde, RelationType::DrugDosage};
  std::vector<RelationType> rtypes;
  for (auto rtype : all_relation_types()) {
    if (is_discharge_pair(rtype)) rtypes.push_back(rtype);
  }
  return rtypes;
}

std::string severity_from_record(const std::string& name, Severity& out) {
  if (name == "info") out = Severity::info;
  else if (name == "warning") out = Severity::warning;
  else if (name == "error") out = Severity::error;
  else return "unknown severity '" + name + "'";
  return {};
}

json record_to_json(const ArtifactRecord& record) {
  json j;
  j["kind"] = "record";
  j["doc_id"] = record.doc_id;
  j["rtype"] = relation_name(record.rtype);
  j["mode"] = mode_name(record.mode);
  j["prompt_id"] = record.prompt_id;
  j["prompt"] = record.prompt_text;
  j["medication_terms"] = record.medication_terms;
  j["raw_response"] = record.raw_response;
  json pairs = json::array();
  for (const auto& pair : record.pairs) pairs.push_back(json::array({pair.head, pair.tail}));
  j["pairs"] = std::move(pairs);
  json diags = json::array();
  for (const auto& d : record.diagnostics) {
    diags.push_back(json::array({std::string(severity_name(d.severity)), d.message}));
  }
  j["diagnostics"] = std::move(diags);
  j["failed"] = record.failed;
  j["error"] = record.error;
  return j;
}

std::string artifact_content_hash(const std::vector<ArtifactRecord>& records) {
  std::uint64_t hash = fnv1a64("");
  for (const auto& record : records) hash = fnv1a64(record_to_json(record).dump(), hash);
  return to_hex(hash);
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunArtifact run_extraction(const RunConfig& cfg) {
  std::shared_ptr<ChatBackend> backend;
  if (!cfg.mock_script.empty()) {
    require_exists(cfg.mock_script, "mock script");
    backend = std::make_shared<MockBackend>(MockBackend::from_script(cfg.mock_script));
  } else {
    backend = HttpBackend::from_env();
  }
  return run_extraction(cfg, std::move(backend));
}

RunArtifact run_extraction(const RunConfig& cfg, std::shared_ptr<ChatBackend> backend) {
  cfg.validate();
  Corpus corpus = load_run_corpus(cfg);
  const auto& docs = corpus.first;

  std::vector<RelationType> rtypes = cfg.rtypes.empty() ? infer_rtypes(docs) : cfg.rtypes;
  TemplateLibrary library =
      cfg.template_dir.empty() ? TemplateLibrary::builtin() : TemplateLibrary::from_directory(cfg.template_dir);

  ConceptLexicon lexicon;
  std::unique_ptr<LexiconMatcher> matcher;
  if (cfg.mode == PromptMode::umls) {
    require_exists(cfg.lexicon_path, "lexicon");
    lexicon = load_lexicon(cfg.lexicon_path);
    matcher = std::make_unique<LexiconMatcher>(lexicon);
  }

  VectorIndex index;
  ChunkStore chunks;
  std::unique_ptr<EmbeddingProvider> embedder;
  if (cfg.mode == PromptMode::rag) {
    require_exists(cfg.index_path, "index");
    require_exists(cfg.chunks_path, "chunks");
    index = VectorIndex::load(cfg.index_path);
    chunks = ChunkStore::load(cfg.chunks_path);
    if (cfg.embedder == "http") {
      embedder = HttpEmbedder::from_env(cfg.output_dir / "embedding_cache.jsonl");
    } else {
      embedder = std::make_unique<HashingEmbedder>(cfg.embedding_dim);
    }
  }

  std::filesystem::create_directories(cfg.output_dir);
  GatewayOptions gw_options;
  gw_options.cache_path = cfg.output_dir / "response_cache.jsonl";
  gw_options.max_parallel = cfg.parallelism;
  ChatGateway gateway(std::move(backend), std::move(gw_options));

  struct Task {
    RelationType rtype;
    std::size_t doc_index;
  };
  std::vector<Task> tasks;
  tasks.reserve(rtypes.size() * docs.size());
  for (auto rtype : rtypes) {
    for (std::size_t d = 0; d < docs.size(); ++d) tasks.push_back({rtype, d});
  }

  RunArtifact artifact;
  artifact.config = cfg;
  artifact.records.resize(tasks.size());
  std::string params_fp = cfg.params.fingerprint();

#pragma omp parallel for schedule(dynamic) num_threads(cfg.parallelism)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(tasks.size()); ++t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const Document& doc = docs[task.doc_index];
    ArtifactRecord& record = artifact.records[static_cast<std::size_t>(t)];
    record.doc_id = doc.doc_id;
    record.rtype = task.rtype;
    record.mode = cfg.mode;
    try {
      MedicationList meds;
      if (cfg.mode == PromptMode::umls) meds = filter_matches(matcher->map(doc), lexicon.filter);

      PromptTemplate tmpl = template_for(task.rtype, cfg.mode, library);
      RenderedPrompt prompt = render(tmpl, doc, meds, cfg.mode, params_fp);
      if (cfg.mode == PromptMode::rag) {
        EmbeddingVector query = embed({prompt.text}, *embedder)[0];
        auto hits = query_top_k(index, query, cfg.top_k);
        prompt = augment_prompt(prompt, hits, chunks);
      }

      ChatResponse resp = gateway.complete({cfg.model_id, cfg.system_message, prompt.text, cfg.params});
      ParseOutcome outcome = parse_pairs(resp.raw_text, doc.doc_id, task.rtype, cfg.mode);

      record.prompt_id = prompt.prompt_id;
      record.prompt_text = prompt.text;
      record.medication_terms = prompt.medication_terms;
      record.raw_response = resp.raw_text;
      record.pairs = std::move(outcome.pairs);
      record.diagnostics = std::move(outcome.diagnostics);
    } catch (const std::exception& e) {
      record.failed = true;
      record.error = "(" + doc.doc_id + ", " + std::string(relation_name(task.rtype)) + ") " + e.what();
    }
  }

  artifact.content_hash = artifact_content_hash(artifact.records);
  artifact.stats = gateway.stats();
  return artifact;
}

void save_artifact(const RunArtifact& artifact, std::ostream& out) {
  json header;
  header["kind"] = "header";
  header["config"] = config_to_json_value(artifact.config);
  header["tuple_orientation"] = "drug-first";
  header["query_embedding"] = "full-prompt";
  out << header.dump() << '\n';
  for (const auto& record : artifact.records) out << record_to_json(record).dump() << '\n';
  json footer{{"kind", "footer"}, {"content_hash", artifact.content_hash}};
  out << footer.dump() << '\n';
}

void save_artifact(const RunArtifact& artifact, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open artifact file for writing: " + path.string());
  save_artifact(artifact, out);
}

RunArtifact load_artifact(std::istream& in) {
  RunArtifact artifact;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  bool saw_footer = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("artifact line " + std::to_string(line_no) + ": not valid JSON: " + e.what());
    }
    std::string kind = j.value("kind", "");
    if (kind == "header") {
      artifact.config = RunConfig::from_json(j.at("config").dump());
      saw_header = true;
    } else if (kind == "record") {
      ArtifactRecord record;
      record.doc_id = j.at("doc_id").get<std::string>();
      std::string rtype_name = j.at("rtype").get<std::string>();
      auto rtype = relation_from_name(rtype_name);
      if (!rtype) {
        throw UnknownRelationType("artifact line " + std::to_string(line_no) + ": unknown relation type '" +
                                  rtype_name + "'");
      }
      record.rtype = *rtype;
      record.mode = mode_from_name(j.at("mode").get<std::string>());
      record.prompt_id = j.at("prompt_id").get<std::string>();
      record.prompt_text = j.at("prompt").get<std::string>();
      record.medication_terms = j.at("medication_terms").get<std::vector<std::string>>();
      record.raw_response = j.at("raw_response").get<std::string>();
      for (const auto& pair : j.at("pairs")) {
        record.pairs.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::string>(),
                                record.doc_id, record.rtype, record.mode});
      }
      for (const auto& diag : j.at("diagnostics")) {
        Severity severity = Severity::info;
        std::string err = severity_from_record(diag.at(0).get<std::string>(), severity);
        if (!err.empty()) throw ConfigError("artifact line " + std::to_string(line_no) + ": " + err);
        record.diagnostics.push_back({severity, diag.at(1).get<std::string>()});
      }
      record.failed = j.value("failed", false);
      record.error = j.value("error", "");
      artifact.records.push_back(std::move(record));
    } else if (kind == "footer") {
      artifact.content_hash = j.at("content_hash").get<std::string>();
      saw_footer = true;
    } else {
      throw ConfigError("artifact line " + std::to_string(line_no) + ": unknown record kind '" + kind + "'");
    }
  }
  if (!saw_header || !saw_footer) throw ConfigError("artifact is missing its header or footer");
  if (artifact.content_hash != artifact_content_hash(artifact.records)) {
    throw ConfigError("artifact digest mismatch: file was modified or truncated");
  }
  return artifact;
}

RunArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open artifact file: " + path.string());
  return load_artifact(in);
}

std::string slice_identity(std::vector<std::string> doc_ids) {
  std::sort(doc_ids.begin(), doc_ids.end());
  doc_ids.erase(std::unique(doc_ids.begin(), doc_ids.end()), doc_ids.end());
  std::uint64_t hash = fnv1a64("");
  for (const auto& id : doc_ids) {
    hash = fnv1a64(id, hash);
    hash = fnv1a64("\n", hash);
  }
  return "fnv:" + to_hex(hash);
}

EvalReport evaluate_run(const RunArtifact& artifact, const std::vector<GoldRelation>& gold,
                        const EvalOptions& options) {
  EvalReport report;
  report.mode = std::string(mode_name(artifact.config.mode));
  report.model_id = artifact.config.model_id;
  report.lenient = options.lenient;
  if (artifact.config.record_timestamps) report.timestamp = utc_timestamp();

  std::vector<std::string> doc_ids;
  for (const auto& record : artifact.records) doc_ids.push_back(record.doc_id);
  report.slice_id = slice_identity(doc_ids);

  if (artifact.records.empty()) return report;

  std::set<std::string> artifact_docs(doc_ids.begin(), doc_ids.end());
  for (const auto& rel : gold) {
    if (!artifact_docs.count(rel.doc_id)) {
      throw SliceMismatch("gold document '" + rel.doc_id + "' is not covered by the artifact");
    }
  }

  std::vector<RelationType> rtype_order;
  for (const auto& record : artifact.records) {
    if (std::find(rtype_order.begin(), rtype_order.end(), record.rtype) == rtype_order.end()) {
      rtype_order.push_back(record.rtype);
    }
  }

  std::vector<EvalCounts> all_counts;
  for (auto rtype : rtype_order) {
    std::map<std::string, DocumentPairs> by_doc;
    for (const auto& record : artifact.records) {
      if (record.rtype != rtype) continue;
      auto& entry = by_doc[record.doc_id];
      entry.pred.insert(entry.pred.end(), record.pairs.begin(), record.pairs.end());
    }
    for (const auto& rel : gold) {
      if (rel.rtype != rtype) continue;
      auto it = by_doc.find(rel.doc_id);
      if (it == by_doc.end()) continue;  // this rtype never ran for that doc
      it->second.gold.push_back(rel);
    }
    std::vector<DocumentPairs> docs;
    docs.reserve(by_doc.size());
    for (auto& [doc_id, pairs] : by_doc) docs.push_back(std::move(pairs));
    std::vector<EvalCounts> counts = score_documents(docs, options);

    EvalCounts total;
    for (const auto& c : counts) total += c;
    all_counts.push_back(total);
    MetricTriple m = metrics_from_counts(total);
    report.per_relation.push_back({rtype, m.precision, m.recall, m.f1, total});
  }

  report.macro_average = macro_average(report.per_relation);
  report.micro_overall = micro_metrics(all_counts);
  return report;
}

namespace {

std::string report_label(const EvalReport& report, std::size_t index) {
  return std::to_string(index + 1) + ":" + report.mode + "/" + report.model_id;
}

const RelationMetrics* find_row(const EvalReport& report, RelationType rtype) {
  for (const auto& row : report.per_relation) {
    if (row.rtype == rtype) return &row;
  }
  return nullptr;
}

std::vector<RelationType> comparison_rtype_order(const std::vector<EvalReport>& reports) {
  std::vector<RelationType> order;
  for (const auto& report : reports) {
    for (const auto& row : report.per_relation) {
      if (std::find(order.begin(), order.end(), row.rtype) == order.end()) order.push_back(row.rtype);
    }
  }
  return order;
}

}  // namespace

std::string render_comparison(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw ConfigError("comparison needs at least two reports");
  auto order = comparison_rtype_order(reports);

  std::string out;
  char buf[200];
  out += "Columns: P / R / F1";
  for (std::size_t i = 1; i < reports.size(); ++i) out += "; dF1 vs report 1";
  out += "\n";
  std::snprintf(buf, sizeof(buf), "%-16s", "Relation");
  out += buf;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " | %-24s", report_label(reports[i], i).c_str());
    out += buf;
  }
  out += "\n";

  auto append_row = [&](const std::string& name, auto metric_of) {
    std::snprintf(buf, sizeof(buf), "%-16s", name.c_str());
    out += buf;
    const std::optional<MetricTriple> first = metric_of(reports[0]);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const std::optional<MetricTriple> m = metric_of(reports[i]);
      if (!m) {
        std::snprintf(buf, sizeof(buf), " | %-24s", "-");
      } else if (i == 0 || !first) {
        std::snprintf(buf, sizeof(buf), " | %.3f %.3f %.3f         ", m->precision, m->recall, m->f1);
      } else {
        std::snprintf(buf, sizeof(buf), " | %.3f %.3f %.3f (%+.3f)", m->precision, m->recall, m->f1,
                      m->f1 - first->f1);
      }
      out += buf;
    }
    out += "\n";
  };

  for (auto rtype : order) {
    append_row(std::string(relation_name(rtype)), [rtype](const EvalReport& r) -> std::optional<MetricTriple> {
      const RelationMetrics* row = find_row(r, rtype);
      if (!row) return std::nullopt;
      return MetricTriple{row->precision, row->recall, row->f1};
    });
  }
  append_row("Average",
             [](const EvalReport& r) -> std::optional<MetricTriple> { return r.macro_average; });
  return out;
}

std::string comparison_json(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw ConfigError("comparison needs at least two reports");
  auto order = comparison_rtype_order(reports);

  json j;
  json labels = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) labels.push_back(report_label(reports[i], i));
  j["labels"] = std::move(labels);

  json rows = json::array();
  for (auto rtype : order) {
    json row;
    row["relation"] = relation_name(rtype);
    json metrics = json::array();
    json deltas = json::array();
    const RelationMetrics* first = find_row(reports[0], rtype);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const RelationMetrics* m = find_row(reports[i], rtype);
      if (!m) {
        metrics.push_back(nullptr);
        deltas.push_back(nullptr);
        continue;
      }
      metrics.push_back({{"precision", m->precision}, {"recall", m->recall}, {"f1", m->f1}});
      if (i == 0 || !first) {
        deltas.push_back(nullptr);
      } else {
        deltas.push_back(m->f1 - first->f1);
      }
    }
    row["metrics"] = std::move(metrics);
    row["f1_delta"] = std::move(deltas);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);

  json avg;
  json avg_metrics = json::array();
  json avg_deltas = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& m = reports[i].macro_average;
    avg_metrics.push_back({{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}});
    if (i == 0) {
      avg_deltas.push_back(nullptr);
    } else {
      avg_deltas.push_back(m.f1 - reports[0].macro_average.f1);
    }
  }
  avg["metrics"] = std::move(avg_metrics);
  avg["f1_delta"] = std::move(avg_deltas);
  j["average"] = std::move(avg);
  return j.dump(2);
}

}  // namespace medrex
