#pragma once

#include <string>
#include <vector>

#include "medrex/corpus.hpp"
#include "medrex/mode.hpp"
#include "medrex/pair_parser.hpp"

namespace medrex {

struct EvalCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  EvalCounts& operator+=(const EvalCounts& other);
  bool operator==(const EvalCounts&) const = default;
};

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const MetricTriple&) const = default;
};

struct RelationMetrics {
  RelationType rtype = RelationType::StrengthDrug;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  EvalCounts counts;

  bool operator==(const RelationMetrics&) const = default;
};

struct EvalReport {
  std::string mode;
  std::string model_id;
  std::string slice_id;
  std::string timestamp;  // empty in deterministic runs
  bool lenient = false;
  std::vector<RelationMetrics> per_relation;
  MetricTriple macro_average;
  MetricTriple micro_overall;

  bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
  // Lenient matching credits a prediction when each side of the gold pair
  // contains or is contained by the predicted side after normalization.
  bool lenient = false;

  bool operator==(const EvalOptions&) const = default;
};

// Gold tuple in the shared orientation (drug first), regardless of which
// side of the relation carries the drug.
std::pair<std::string, std::string> gold_pair_strings(const GoldRelation& rel);

// Set-semantics matching of normalized (drug, attribute) tuples. Throws
// MixedDocuments when the inputs span more than one doc_id or rtype.
EvalCounts score_document(const std::vector<ExtractedPair>& pred, const std::vector<GoldRelation>& gold,
                          const EvalOptions& options = {});

MetricTriple metrics_from_counts(const EvalCounts& counts);

// Sums counts across documents first, then computes the metrics.
MetricTriple micro_metrics(const std::vector<EvalCounts>& counts);

// Unweighted arithmetic column mean; throws EmptyRows on empty input.
MetricTriple macro_average(const std::vector<RelationMetrics>& rows);

struct DocumentPairs {
  std::vector<ExtractedPair> pred;
  std::vector<GoldRelation> gold;
};

// Per-document scoring across a corpus slice (index-aligned counts).
std::vector<EvalCounts> score_documents(const std::vector<DocumentPairs>& docs,
                                        const EvalOptions& options = {});

namespace serial {
std::vector<EvalCounts> score_documents(const std::vector<DocumentPairs>& docs,
                                        const EvalOptions& options = {});
}  // namespace serial

// Fixed-width per-relation table with Average and Micro rows, metrics at
// 3 decimals.
std::string render_report_table(const EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace medrex
