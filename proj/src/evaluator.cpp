#include "medrex/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "medrex/errors.hpp"
#include "medrex/text.hpp"

namespace medrex {

namespace {

using nlohmann::json;
using PairSet = std::set<std::pair<std::string, std::string>>;

}  // namespace

EvalCounts& EvalCounts::operator+=(const EvalCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

std::pair<std::string, std::string> gold_pair_strings(const GoldRelation& rel) {
  static_assert(kDrugFirstTuples);
  if (is_case_report_pair(rel.rtype)) return {rel.head.surface, rel.tail.surface};
  return {rel.tail.surface, rel.head.surface};
}

namespace {

void check_single_slice(const std::vector<ExtractedPair>& pred, const std::vector<GoldRelation>& gold) {
  std::set<std::string> doc_ids;
  std::set<RelationType> rtypes;
  for (const auto& p : pred) {
    doc_ids.insert(p.doc_id);
    rtypes.insert(p.rtype);
  }
  for (const auto& g : gold) {
    doc_ids.insert(g.doc_id);
    rtypes.insert(g.rtype);
  }
  if (doc_ids.size() > 1) {
    throw MixedDocuments("scoring input spans " + std::to_string(doc_ids.size()) + " doc_ids");
  }
  if (rtypes.size() > 1) {
    throw MixedDocuments("scoring input spans " + std::to_string(rtypes.size()) + " relation types");
  }
}

bool lenient_component(const std::string& a, const std::string& b) {
  return a == b || a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

EvalCounts count_matches(const PairSet& pred, const PairSet& gold, bool lenient) {
  EvalCounts counts;
  if (!lenient) {
    for (const auto& p : pred) {
      if (gold.count(p)) ++counts.tp;
    }
  } else {
    std::vector<bool> taken(gold.size(), false);
    for (const auto& p : pred) {
      std::size_t gi = 0;
      for (const auto& g : gold) {
        if (!taken[gi] && lenient_component(p.first, g.first) && lenient_component(p.second, g.second)) {
          taken[gi] = true;
          ++counts.tp;
          break;
        }
        ++gi;
      }
    }
  }
  counts.fp = pred.size() - counts.tp;
  counts.fn = gold.size() - counts.tp;
  return counts;
}

}  // namespace

EvalCounts score_document(const std::vector<ExtractedPair>& pred, const std::vector<GoldRelation>& gold,
                          const EvalOptions& options) {
  check_single_slice(pred, gold);
  PairSet pred_set;
  for (const auto& p : pred) pred_set.insert({normalize_surface(p.head), normalize_surface(p.tail)});
  PairSet gold_set;
  for (const auto& g : gold) {
    auto [drug, attribute] = gold_pair_strings(g);
    gold_set.insert({normalize_surface(drug), normalize_surface(attribute)});
  }
  return count_matches(pred_set, gold_set, options.lenient);
}

MetricTriple metrics_from_counts(const EvalCounts& counts) {
  MetricTriple m;
  if (counts.tp + counts.fp > 0) m.precision = static_cast<double>(counts.tp) / (counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) m.recall = static_cast<double>(counts.tp) / (counts.tp + counts.fn);
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

MetricTriple micro_metrics(const std::vector<EvalCounts>& counts) {
  EvalCounts total;
  for (const auto& c : counts) total += c;
  return metrics_from_counts(total);
}

MetricTriple macro_average(const std::vector<RelationMetrics>& rows) {
  if (rows.empty()) throw EmptyRows("macro average over zero rows");
  MetricTriple mean;
  for (const auto& row : rows) {
    mean.precision += row.precision;
    mean.recall += row.recall;
    mean.f1 += row.f1;
  }
  mean.precision /= rows.size();
  mean.recall /= rows.size();
  mean.f1 /= rows.size();
  return mean;
}

std::vector<EvalCounts> score_documents(const std::vector<DocumentPairs>& docs, const EvalOptions& options) {
  std::vector<EvalCounts> counts(docs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(docs.size()); ++i) {
    auto idx = static_cast<std::size_t>(i);
    counts[idx] = score_document(docs[idx].pred, docs[idx].gold, options);
  }
  return counts;
}

namespace serial {

std::vector<EvalCounts> score_documents(const std::vector<DocumentPairs>& docs, const EvalOptions& options) {
  std::vector<EvalCounts> counts;
  counts.reserve(docs.size());
  for (const auto& doc : docs) counts.push_back(score_document(doc.pred, doc.gold, options));
  return counts;
}

}  // namespace serial

std::string render_report_table(const EvalReport& report) {
  std::string out;
  out += "mode=" + report.mode + " model=" + report.model_id + " slice=" + report.slice_id +
         (report.lenient ? " matching=lenient" : " matching=strict") + "\n";
  if (!report.timestamp.empty()) out += "generated=" + report.timestamp + "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %6s %6s %6s %7s %7s %7s\n", "Relation", "P", "R", "F1", "TP",
                "FP", "FN");
  out += line;
  for (const auto& row : report.per_relation) {
    std::snprintf(line, sizeof(line), "%-16s %6.3f %6.3f %6.3f %7zu %7zu %7zu\n",
                  std::string(relation_name(row.rtype)).c_str(), row.precision, row.recall, row.f1,
                  row.counts.tp, row.counts.fp, row.counts.fn);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-16s %6.3f %6.3f %6.3f\n", "Average", report.macro_average.precision,
                report.macro_average.recall, report.macro_average.f1);
  out += line;
  std::snprintf(line, sizeof(line), "%-16s %6.3f %6.3f %6.3f\n", "Micro", report.micro_overall.precision,
                report.micro_overall.recall, report.micro_overall.f1);
  out += line;
  return out;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["mode"] = report.mode;
  j["model_id"] = report.model_id;
  j["slice_id"] = report.slice_id;
  j["timestamp"] = report.timestamp;
  j["lenient"] = report.lenient;
  json rows = json::array();
  for (const auto& row : report.per_relation) {
    rows.push_back({{"rtype", relation_name(row.rtype)},
                    {"precision", row.precision},
                    {"recall", row.recall},
                    {"f1", row.f1},
                    {"tp", row.counts.tp},
                    {"fp", row.counts.fp},
                    {"fn", row.counts.fn}});
  }
  j["per_relation"] = std::move(rows);
  j["macro_average"] = {{"precision", report.macro_average.precision},
                        {"recall", report.macro_average.recall},
                        {"f1", report.macro_average.f1}};
  j["micro_overall"] = {{"precision", report.micro_overall.precision},
                        {"recall", report.micro_overall.recall},
                        {"f1", report.micro_overall.f1}};
  return j.dump(2);
}

namespace {

MetricTriple triple_from_json(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report JSON: ") + e.what());
  }
  EvalReport report;
  report.mode = j.value("mode", "");
  report.model_id = j.value("model_id", "");
  report.slice_id = j.value("slice_id", "");
  report.timestamp = j.value("timestamp", "");
  report.lenient = j.value("lenient", false);
  for (const auto& row : j.at("per_relation")) {
    RelationMetrics metrics;
    std::string rtype_name = row.at("rtype").get<std::string>();
    auto rtype = relation_from_name(rtype_name);
    if (!rtype) throw UnknownRelationType("report row with unknown relation type '" + rtype_name + "'");
    metrics.rtype = *rtype;
    metrics.precision = row.at("precision").get<double>();
    metrics.recall = row.at("recall").get<double>();
    metrics.f1 = row.at("f1").get<double>();
    metrics.counts = {row.at("tp").get<std::size_t>(), row.at("fp").get<std::size_t>(),
                      row.at("fn").get<std::size_t>()};
    report.per_relation.push_back(metrics);
  }
  report.macro_average = triple_from_json(j.at("macro_average"));
  report.micro_overall = triple_from_json(j.at("micro_overall"));
  return report;
}

}  // namespace medrex
