#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "medrex/evaluator.hpp"
#include "medrex/gateway.hpp"
#include "medrex/pair_parser.hpp"

namespace medrex {

struct RunConfig {
  PromptMode mode = PromptMode::baseline;
  std::string model_id = "gpt-4-32k";

  // Corpus source: exactly one of canonical file, case-report file, or
  // standoff directory pair.
  std::filesystem::path corpus_path;
  std::filesystem::path ade_path;
  std::filesystem::path text_dir;
  std::filesystem::path ann_dir;

  std::filesystem::path lexicon_path;  // required in umls mode
  std::filesystem::path index_path;    // required in rag mode
  std::filesystem::path chunks_path;   // required in rag mode
  std::filesystem::path template_dir;  // empty -> compiled-in templates
  std::filesystem::path mock_script;   // empty -> live endpoint from env
  std::filesystem::path output_dir = ".";

  std::vector<RelationType> rtypes;  // empty -> inferred from the dataset
  GenerationParams params;
  std::string system_message;
  std::string embedder = "hashing";  // or "http"
  std::size_t embedding_dim = 256;
  std::size_t top_k = 30;
  int parallelism = 4;
  bool record_timestamps = false;

  static RunConfig from_json(const std::string& text);
  static RunConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
  // Logical checks only (mode requirements, ranges); path existence is
  // checked when the run starts.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

struct ArtifactRecord {
  std::string doc_id;
  RelationType rtype = RelationType::StrengthDrug;
  PromptMode mode = PromptMode::baseline;
  std::string prompt_id;
  std::string prompt_text;
  std::vector<std::string> medication_terms;
  std::string raw_response;
  std::vector<ExtractedPair> pairs;
  std::vector<Diagnostic> diagnostics;
  bool failed = false;
  std::string error;

  bool operator==(const ArtifactRecord&) const = default;
};

struct RunArtifact {
  RunConfig config;
  std::vector<ArtifactRecord> records;
  std::string content_hash;
  // Gateway counters from the producing run; not serialized.
  GatewayStats stats;
};

// Executes the configured pipeline for every (document, relation type)
// task. A failing task is recorded with its error and does not abort the
// run; reruns resume through the on-disk response cache.
RunArtifact run_extraction(const RunConfig& cfg);
RunArtifact run_extraction(const RunConfig& cfg, std::shared_ptr<ChatBackend> backend);

void save_artifact(const RunArtifact& artifact, std::ostream& out);
void save_artifact(const RunArtifact& artifact, const std::filesystem::path& path);
RunArtifact load_artifact(std::istream& in);
RunArtifact load_artifact(const std::filesystem::path& path);

// Digest over the sorted distinct doc ids of a corpus slice.
std::string slice_identity(std::vector<std::string> doc_ids);

// Scores the artifact against gold relations. Every gold doc_id must be
// covered by the artifact, otherwise SliceMismatch.
EvalReport evaluate_run(const RunArtifact& artifact, const std::vector<GoldRelation>& gold,
                        const EvalOptions& options = {});

// Side-by-side per-relation metrics with F1 deltas against the first
// report. Needs at least two reports.
std::string render_comparison(const std::vector<EvalReport>& reports);
std::string comparison_json(const std::vector<EvalReport>& reports);

}  // namespace medrex
