#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "medrex/corpus.hpp"
#include "medrex/evaluator.hpp"
#include "medrex/lexicon.hpp"
#include "medrex/mapper.hpp"
#include "medrex/prompt.hpp"
#include "medrex/retriever.hpp"
#include "medrex/runner.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

medrex::SemanticFilter filter_from_flags(const std::vector<std::string>& sty_names,
                                         const std::vector<std::string>& tuis) {
  if (sty_names.empty() && tuis.empty()) return medrex::SemanticFilter::medications();
  medrex::SemanticFilter filter;
  filter.sty_names = sty_names;
  filter.tuis = tuis;
  return filter;
}

medrex::Corpus load_any_corpus(const std::string& corpus, const std::string& ade, const std::string& text_dir,
                               const std::string& ann_dir) {
  if (!ade.empty()) return medrex::load_ade_corpus(ade);
  if (!text_dir.empty() || !ann_dir.empty()) {
    if (text_dir.empty() || ann_dir.empty()) {
      throw medrex::ConfigError("standoff corpora need both --text-dir and --ann-dir");
    }
    return medrex::load_standoff_corpus(text_dir, ann_dir);
  }
  if (corpus.empty()) throw medrex::ConfigError("no corpus given (--corpus, --ade, or --text-dir/--ann-dir)");
  return medrex::load_corpus(corpus);
}

std::unique_ptr<medrex::EmbeddingProvider> make_embedder(const std::string& kind, std::size_t dim,
                                                         const std::string& cache) {
  if (kind == "http") return medrex::HttpEmbedder::from_env(cache);
  if (kind == "hashing") return std::make_unique<medrex::HashingEmbedder>(dim);
  throw medrex::ConfigError("embedder must be 'hashing' or 'http'");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw medrex::ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

int cmd_ingest_lexicon(const std::string& conso, const std::string& sty, const std::string& out,
                       const std::vector<std::string>& languages, const std::vector<std::string>& sty_names,
                       const std::vector<std::string>& tuis, bool skip_malformed) {
  std::ifstream conso_in(conso);
  if (!conso_in) throw medrex::ConfigError("cannot open concept file: " + conso);
  std::ifstream sty_in(sty);
  if (!sty_in) throw medrex::ConfigError("cannot open semantic-type file: " + sty);

  medrex::LexiconBuildOptions options;
  if (!languages.empty()) options.languages = languages;
  if (skip_malformed) options.on_malformed = medrex::LexiconBuildOptions::OnMalformed::skip;

  medrex::LexiconBuildStats stats;
  auto lexicon = medrex::build_lexicon(conso_in, sty_in, filter_from_flags(sty_names, tuis), options, &stats);
  medrex::save_lexicon(lexicon, out);
  std::cout << "terms: " << lexicon.term_count() << "\nconcept rows read: " << stats.conso_rows
            << " (kept " << stats.kept_rows << ", malformed " << stats.malformed_conso << ")"
            << "\nsemantic rows read: " << stats.sty_rows << " (malformed " << stats.malformed_sty << ")\n"
            << "wrote " << out << "\n";
  return 0;
}

int cmd_build_index(const std::string& rows_path, const std::string& conso, const std::string& sty,
                    bool no_filter, const std::string& index_path, const std::string& chunks_path,
                    std::size_t max_tokens, const std::string& embedder_kind, std::size_t dim,
                    const std::string& embed_cache) {
  std::string rows;
  if (!rows_path.empty()) {
    rows = slurp(rows_path);
  } else {
    if (conso.empty() || sty.empty()) {
      throw medrex::ConfigError("need either --rows or both --conso and --sty");
    }
    std::ifstream conso_in(conso);
    if (!conso_in) throw medrex::ConfigError("cannot open concept file: " + conso);
    if (no_filter) {
      std::ostringstream buf;
      buf << conso_in.rdbuf();
      rows = std::move(buf).str();
    } else {
      std::ifstream sty_in(sty);
      if (!sty_in) throw medrex::ConfigError("cannot open semantic-type file: " + sty);
      std::ostringstream buf;
      medrex::write_filtered_conso_rows(conso_in, sty_in, medrex::SemanticFilter::medications(), {}, buf);
      rows = std::move(buf).str();
    }
  }

  std::istringstream row_stream(rows);
  auto chunks = medrex::chunk_rows(row_stream, max_tokens);
  auto embedder = make_embedder(embedder_kind, dim, embed_cache);

  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& chunk : chunks) texts.push_back(chunk.text);
  auto vectors = medrex::embed(texts, *embedder);

  medrex::VectorIndex index;
  medrex::ChunkStore store;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    index.add(chunks[i].chunk_id, vectors[i]);
    store.add(chunks[i]);
  }
  index.save(std::filesystem::path(index_path));
  store.save(std::filesystem::path(chunks_path));
  std::cout << "chunks: " << chunks.size() << " (dim " << index.dim() << ")\nwrote " << index_path << " and "
            << chunks_path << "\n";
  return 0;
}

int cmd_map_concepts(const std::string& lexicon_path, const std::string& corpus_path, const std::string& out) {
  auto lexicon = medrex::load_lexicon(std::filesystem::path(lexicon_path));
  auto corpus = medrex::load_corpus(corpus_path);
  medrex::LexiconMatcher matcher(lexicon);
  auto matches = medrex::map_corpus(corpus.first, matcher);

  std::ofstream out_file(out);
  if (!out_file) throw medrex::ConfigError("cannot open output file: " + out);
  for (std::size_t i = 0; i < corpus.first.size(); ++i) {
    auto meds = medrex::filter_matches(matches[i], lexicon.filter);
    json rec;
    rec["doc_id"] = corpus.first[i].doc_id;
    json match_list = json::array();
    for (const auto& m : matches[i]) {
      match_list.push_back({{"surface", m.surface},
                            {"start", m.start},
                            {"end", m.end},
                            {"cui", m.cui},
                            {"sty", m.sty_name}});
    }
    rec["matches"] = std::move(match_list);
    rec["medication_list"] = meds.terms;
    out_file << rec.dump() << '\n';
  }
  std::cout << "mapped " << corpus.first.size() << " documents -> " << out << "\n";
  return 0;
}

int cmd_render(const std::string& rtype_name, const std::string& mode_name_arg, const std::string& doc_id,
               const std::string& corpus_path, const std::string& lexicon_path,
               const std::string& template_dir) {
  auto rtype = medrex::relation_from_name(rtype_name);
  if (!rtype) throw medrex::UnknownRelationType("unknown relation type '" + rtype_name + "'");
  auto mode = medrex::mode_from_name(mode_name_arg);
  auto corpus = medrex::load_corpus(corpus_path);

  const medrex::Document* doc = nullptr;
  for (const auto& d : corpus.first) {
    if (d.doc_id == doc_id) doc = &d;
  }
  if (!doc) throw medrex::ConfigError("no document '" + doc_id + "' in " + corpus_path);

  auto library = template_dir.empty() ? medrex::TemplateLibrary::builtin()
                                      : medrex::TemplateLibrary::from_directory(template_dir);
  medrex::MedicationList meds;
  medrex::ConceptLexicon lexicon;
  if (mode == medrex::PromptMode::umls) {
    if (lexicon_path.empty()) throw medrex::ConfigError("umls mode needs --lexicon");
    lexicon = medrex::load_lexicon(std::filesystem::path(lexicon_path));
    medrex::LexiconMatcher matcher(lexicon);
    meds = medrex::filter_matches(matcher.map(*doc), lexicon.filter);
  }
  auto tmpl = medrex::template_for(*rtype, mode, library);
  auto prompt = medrex::render(tmpl, *doc, meds, mode, medrex::GenerationParams{}.fingerprint());
  std::cout << prompt.text << "\n--\nprompt_id: " << prompt.prompt_id << "\n";
  return 0;
}

int cmd_run_extraction(const std::string& config_path, const std::string& artifact_override) {
  auto cfg = medrex::RunConfig::from_json_file(config_path);
  auto artifact = medrex::run_extraction(cfg);
  std::filesystem::path out = artifact_override.empty()
                                  ? cfg.output_dir / "artifact.jsonl"
                                  : std::filesystem::path(artifact_override);
  std::filesystem::create_directories(out.parent_path().empty() ? "." : out.parent_path());
  medrex::save_artifact(artifact, out);

  std::size_t failed = 0;
  for (const auto& record : artifact.records) {
    if (record.failed) ++failed;
  }
  std::cout << "records: " << artifact.records.size() << " (failed " << failed << ")\nbackend calls: "
            << artifact.stats.backend_calls << ", cache hits: " << artifact.stats.cache_hits
            << ", retries: " << artifact.stats.retries << "\nwrote " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& artifact_path, const std::string& gold_path, bool lenient,
                 const std::string& out_json) {
  auto artifact = medrex::load_artifact(std::filesystem::path(artifact_path));
  auto gold = medrex::load_corpus(gold_path);
  medrex::EvalOptions options;
  options.lenient = lenient;
  auto report = medrex::evaluate_run(artifact, gold.second, options);
  std::cout << medrex::render_report_table(report);
  if (!out_json.empty()) {
    std::ofstream out(out_json);
    if (!out) throw medrex::ConfigError("cannot open report file: " + out_json);
    out << medrex::report_to_json(report) << "\n";
    std::cout << "wrote " << out_json << "\n";
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& report_paths, bool as_json) {
  std::vector<medrex::EvalReport> reports;
  for (const auto& path : report_paths) reports.push_back(medrex::report_from_json(slurp(path)));
  std::cout << (as_json ? medrex::comparison_json(reports) + "\n" : medrex::render_comparison(reports));
  return 0;
}

int cmd_stats(const std::string& corpus, const std::string& ade, const std::string& text_dir,
              const std::string& ann_dir) {
  auto loaded = load_any_corpus(corpus, ade, text_dir, ann_dir);
  auto stats = medrex::corpus_stats(loaded.first, loaded.second);
  std::cout << "documents: " << stats.document_count << "\n";
  for (auto rtype : medrex::all_relation_types()) {
    if (stats.count(rtype) > 0) {
      std::cout << medrex::relation_name(rtype) << ": " << stats.count(rtype) << "\n";
    }
  }
  std::cout << "total relations: " << stats.total_relations() << "\n";
  return 0;
}

int cmd_query_index(const std::string& index_path, const std::string& chunks_path, const std::string& query,
                    std::size_t k, const std::string& embedder_kind, std::size_t dim) {
  auto index = medrex::VectorIndex::load(std::filesystem::path(index_path));
  auto embedder = make_embedder(embedder_kind, dim, "");
  auto vectors = medrex::embed({query}, *embedder);
  auto hits = medrex::query_top_k(index, vectors[0], k);

  medrex::ChunkStore chunks;
  if (!chunks_path.empty()) chunks = medrex::ChunkStore::load(std::filesystem::path(chunks_path));
  for (const auto& hit : hits) {
    char line[64];
    std::snprintf(line, sizeof(line), "%8lld  %.6f", static_cast<long long>(hit.chunk_id), hit.score);
    std::cout << line;
    if (!chunks.empty()) {
      const auto& chunk = chunks.get(hit.chunk_id);
      std::string preview = chunk.text.substr(0, 60);
      for (auto& c : preview) {
        if (c == '\n') c = ' ';
      }
      std::cout << "  " << preview;
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"medication relation extraction pipeline"};
  app.require_subcommand(1);

  // ingest-lexicon
  std::string conso, sty, out;
  std::vector<std::string> languages, sty_names, tuis;
  bool skip_malformed = false;
  auto* ingest = app.add_subcommand("ingest-lexicon", "build a term lexicon from concept files");
  ingest->add_option("--conso", conso, "MRCONSO.RRF-style concept file")->required();
  ingest->add_option("--sty", sty, "MRSTY.RRF-style semantic-type file")->required();
  ingest->add_option("--out", out, "lexicon cache output path")->required();
  ingest->add_option("--lang", languages, "language codes to keep (default ENG)");
  ingest->add_option("--sty-names", sty_names, "semantic type names to keep (default medication groups)");
  ingest->add_option("--tui", tuis, "semantic type ids to keep");
  ingest->add_flag("--skip-malformed", skip_malformed, "skip malformed rows instead of aborting");

  // build-index
  std::string rows_path, index_path, chunks_path, embedder_kind = "hashing", embed_cache;
  std::size_t max_tokens = 8192, dim = 256;
  bool no_filter = false;
  auto* build = app.add_subcommand("build-index", "chunk and embed lexicon rows into a vector index");
  build->add_option("--rows", rows_path, "pre-filtered row file to index");
  build->add_option("--conso", conso, "concept file (filtered unless --no-filter)");
  build->add_option("--sty", sty, "semantic-type file for filtering");
  build->add_flag("--no-filter", no_filter, "index the whole concept file");
  build->add_option("--index", index_path, "index output path")->required();
  build->add_option("--chunks", chunks_path, "chunk store output path")->required();
  build->add_option("--max-tokens", max_tokens, "chunk token budget");
  build->add_option("--embedder", embedder_kind, "hashing or http");
  build->add_option("--dim", dim, "hashing embedder dimension");
  build->add_option("--embed-cache", embed_cache, "embedding cache path for the http embedder");

  // map-concepts
  std::string lexicon_path, corpus_path, map_out;
  auto* map_cmd = app.add_subcommand("map-concepts", "map lexicon terms over a corpus");
  map_cmd->add_option("--lexicon", lexicon_path, "lexicon cache path")->required();
  map_cmd->add_option("--corpus", corpus_path, "canonical corpus file")->required();
  map_cmd->add_option("--out", map_out, "matches output path")->required();

  // render
  std::string rtype_name, prompt_mode = "baseline", doc_id, template_dir;
  auto* render_cmd = app.add_subcommand("render", "render one prompt for inspection");
  render_cmd->add_option("--rtype", rtype_name, "relation type name")->required();
  render_cmd->add_option("--mode", prompt_mode, "baseline, umls, or rag");
  render_cmd->add_option("--doc", doc_id, "document id")->required();
  render_cmd->add_option("--corpus", corpus_path, "canonical corpus file")->required();
  render_cmd->add_option("--lexicon", lexicon_path, "lexicon cache (umls mode)");
  render_cmd->add_option("--template-dir", template_dir, "template directory");

  // run-extraction
  std::string config_path, artifact_override;
  auto* run_cmd = app.add_subcommand("run-extraction", "run the extraction pipeline from a config file");
  run_cmd->add_option("--config", config_path, "run config JSON")->required();
  run_cmd->add_option("--artifact", artifact_override, "artifact output override");

  // evaluate
  std::string artifact_path, gold_path, report_out;
  bool lenient = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "score an artifact against gold relations");
  eval_cmd->add_option("--artifact", artifact_path, "artifact file")->required();
  eval_cmd->add_option("--gold", gold_path, "canonical corpus with gold relations")->required();
  eval_cmd->add_flag("--lenient", lenient, "containment-based matching");
  eval_cmd->add_option("--out", report_out, "write the report JSON here");

  // compare
  std::vector<std::string> report_paths;
  bool compare_json_flag = false;
  auto* compare_cmd = app.add_subcommand("compare", "compare two or more report JSON files");
  compare_cmd->add_option("--report", report_paths, "report JSON paths")->required()->expected(2, -1);
  compare_cmd->add_flag("--json", compare_json_flag, "emit JSON instead of a table");

  // stats
  std::string ade_path, text_dir, ann_dir;
  auto* stats_cmd = app.add_subcommand("stats", "relation counts for a corpus");
  stats_cmd->add_option("--corpus", corpus_path, "canonical corpus file");
  stats_cmd->add_option("--ade", ade_path, "case-report JSON-lines file");
  stats_cmd->add_option("--text-dir", text_dir, "standoff text directory");
  stats_cmd->add_option("--ann-dir", ann_dir, "standoff annotation directory");

  // query-index
  std::string query_text;
  std::size_t k = 30;
  auto* query_cmd = app.add_subcommand("query-index", "retrieve top-k chunks for a query");
  query_cmd->add_option("--index", index_path, "index file")->required();
  query_cmd->add_option("--chunks", chunks_path, "chunk store file (for previews)");
  query_cmd->add_option("--query", query_text, "query text")->required();
  query_cmd->add_option("--k", k, "number of hits");
  query_cmd->add_option("--embedder", embedder_kind, "hashing or http");
  query_cmd->add_option("--dim", dim, "hashing embedder dimension");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      return cmd_ingest_lexicon(conso, sty, out, languages, sty_names, tuis, skip_malformed);
    }
    if (build->parsed()) {
      return cmd_build_index(rows_path, conso, sty, no_filter, index_path, chunks_path, max_tokens,
                             embedder_kind, dim, embed_cache);
    }
    if (map_cmd->parsed()) return cmd_map_concepts(lexicon_path, corpus_path, map_out);
    if (render_cmd->parsed()) {
      return cmd_render(rtype_name, prompt_mode, doc_id, corpus_path, lexicon_path, template_dir);
    }
    if (run_cmd->parsed()) return cmd_run_extraction(config_path, artifact_override);
    if (eval_cmd->parsed()) return cmd_evaluate(artifact_path, gold_path, lenient, report_out);
    if (compare_cmd->parsed()) return cmd_compare(report_paths, compare_json_flag);
    if (stats_cmd->parsed()) return cmd_stats(corpus_path, ade_path, text_dir, ann_dir);
    if (query_cmd->parsed()) return cmd_query_index(index_path, chunks_path, query_text, k, embedder_kind, dim);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
