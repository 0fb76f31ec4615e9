#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "medrex/errors.hpp"
#include "medrex/evaluator.hpp"
#include "medrex/text.hpp"

using namespace medrex;

namespace {

ExtractedPair make_pred(const std::string& drug, const std::string& attr, const std::string& doc = "d1",
                        RelationType rtype = RelationType::StrengthDrug) {
  ExtractedPair p;
  p.head = drug;
  p.tail = attr;
  p.doc_id = doc;
  p.rtype = rtype;
  return p;
}

GoldRelation make_gold(const std::string& drug, const std::string& attr, const std::string& doc = "d1",
                       RelationType rtype = RelationType::StrengthDrug) {
  GoldRelation rel;
  rel.doc_id = doc;
  rel.rtype = rtype;
  if (is_case_report_pair(rtype)) {
    rel.head.label = "Drug";
    rel.head.surface = drug;
    rel.tail.label = std::string(attribute_label(rtype));
    rel.tail.surface = attr;
  } else {
    rel.head.label = std::string(attribute_label(rtype));
    rel.head.surface = attr;
    rel.tail.label = "Drug";
    rel.tail.surface = drug;
  }
  return rel;
}

}  // namespace

TEST_CASE("gold tuples always come out drug first") {
  auto discharge = make_gold("Aspirin", "81 mg");
  auto [d1, a1] = gold_pair_strings(discharge);
  CHECK(d1 == "Aspirin");
  CHECK(a1 == "81 mg");

  auto case_report = make_gold("penicillin", "rash", "d2", RelationType::DrugAde);
  auto [d2, a2] = gold_pair_strings(case_report);
  CHECK(d2 == "penicillin");
  CHECK(a2 == "rash");
}

TEST_CASE("strict scoring on one document") {
  std::vector<ExtractedPair> pred = {
      make_pred("aspirin", "81 mg"),
      make_pred("plavix", "75 mg"),
      make_pred("bogus", "1 mg"),
  };
  std::vector<GoldRelation> gold = {
      make_gold("Aspirin", "81 MG"),
      make_gold("warfarin", "5 mg"),
      make_gold("plavix", "75 mg"),
  };
  auto counts = score_document(pred, gold);
  CHECK(counts.tp == 2);
  CHECK(counts.fp == 1);
  CHECK(counts.fn == 1);
}

TEST_CASE("scoring uses set semantics on both sides") {
  std::vector<ExtractedPair> pred = {
      make_pred("aspirin", "81 mg"),
      make_pred("ASPIRIN", "81 mg"),
      make_pred("'aspirin'", "81 mg"),
  };
  std::vector<GoldRelation> gold = {
      make_gold("aspirin", "81 mg"),
      make_gold("Aspirin", "81 mg"),
  };
  auto counts = score_document(pred, gold);
  CHECK(counts.tp == 1);
  CHECK(counts.fp == 0);
  CHECK(counts.fn == 0);
}

TEST_CASE("empty sides") {
  CHECK(score_document({}, {}) == EvalCounts{0, 0, 0});
  auto only_pred = score_document({make_pred("a", "b")}, {});
  CHECK(only_pred == EvalCounts{0, 1, 0});
  auto only_gold = score_document({}, {make_gold("a", "b")});
  CHECK(only_gold == EvalCounts{0, 0, 1});
}

TEST_CASE("lenient matching credits containment both ways") {
  EvalOptions lenient;
  lenient.lenient = true;

  auto counts = score_document({make_pred("aspirin", "81")}, {make_gold("aspirin EC", "81 mg")}, lenient);
  CHECK(counts == EvalCounts{1, 0, 0});

  auto strict = score_document({make_pred("aspirin", "81")}, {make_gold("aspirin EC", "81 mg")});
  CHECK(strict == EvalCounts{0, 1, 1});

  // one prediction can satisfy only one gold pair
  auto one_of_two = score_document({make_pred("aspirin", "81")},
                                   {make_gold("aspirin ec", "81 mg"), make_gold("aspirin xr", "81 mg")},
                                   lenient);
  CHECK(one_of_two.tp == 1);
  CHECK(one_of_two.fn == 1);
  CHECK(one_of_two.fp == 0);

  // both components must relate; sharing only the drug is not enough
  auto mismatch = score_document({make_pred("aspirin", "daily")}, {make_gold("aspirin", "81 mg")}, lenient);
  CHECK(mismatch == EvalCounts{0, 1, 1});
}

TEST_CASE("mixed slices are rejected") {
  CHECK_THROWS_AS(score_document({make_pred("a", "b", "d1"), make_pred("c", "d", "d2")}, {}),
                  MixedDocuments);
  CHECK_THROWS_AS(score_document({make_pred("a", "b", "d1")}, {make_gold("x", "y", "d2")}), MixedDocuments);
  CHECK_THROWS_AS(score_document({make_pred("a", "b", "d1", RelationType::StrengthDrug),
                                  make_pred("c", "d", "d1", RelationType::RouteDrug)},
                                 {}),
                  MixedDocuments);
}

TEST_CASE("metric arithmetic") {
  CHECK(metrics_from_counts({0, 0, 0}) == MetricTriple{0.0, 0.0, 0.0});
  CHECK(metrics_from_counts({5, 0, 0}) == MetricTriple{1.0, 1.0, 1.0});

  auto m = metrics_from_counts({3, 1, 2});
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(2 * 0.75 * 0.6 / (0.75 + 0.6)));
}

TEST_CASE("micro pools counts while macro averages rows") {
  std::vector<EvalCounts> counts = {{9, 1, 1}, {0, 1, 1}};
  auto micro = micro_metrics(counts);
  CHECK(micro.precision == doctest::Approx(9.0 / 11.0));
  CHECK(micro.recall == doctest::Approx(9.0 / 11.0));

  std::vector<RelationMetrics> rows(2);
  rows[0].rtype = RelationType::StrengthDrug;
  rows[0].precision = 0.9;
  rows[0].recall = 0.9;
  rows[0].f1 = 0.9;
  rows[1].rtype = RelationType::RouteDrug;
  rows[1].precision = 0.0;
  rows[1].recall = 0.0;
  rows[1].f1 = 0.0;
  auto macro = macro_average(rows);
  CHECK(macro.precision == doctest::Approx(0.45));
  CHECK(macro.f1 == doctest::Approx(0.45));
  CHECK(macro.precision != doctest::Approx(micro.precision));

  CHECK_THROWS_AS(macro_average({}), EmptyRows);
}

TEST_CASE("metrics stay inside their bounds") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> n(0, 40);
  for (int i = 0; i < 2000; ++i) {
    EvalCounts counts{static_cast<std::size_t>(n(rng)), static_cast<std::size_t>(n(rng)),
                      static_cast<std::size_t>(n(rng))};
    auto m = metrics_from_counts(counts);
    CHECK(m.precision >= 0.0);
    CHECK(m.precision <= 1.0);
    CHECK(m.recall >= 0.0);
    CHECK(m.recall <= 1.0);
    CHECK(m.f1 >= 0.0);
    CHECK(m.f1 <= (m.precision + m.recall) / 2.0 + 1e-12);
  }
}

TEST_CASE("strict scoring matches an independent set oracle") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> n(0, 12);
  std::uniform_int_distribution<int> word(0, 9);
  auto surface = [&](int w) { return "term" + std::to_string(w); };

  for (int round = 0; round < 500; ++round) {
    std::vector<ExtractedPair> pred;
    std::vector<GoldRelation> gold;
    int np = n(rng), ng = n(rng);
    for (int i = 0; i < np; ++i) pred.push_back(make_pred(surface(word(rng)), surface(word(rng))));
    for (int i = 0; i < ng; ++i) gold.push_back(make_gold(surface(word(rng)), surface(word(rng))));

    std::set<std::pair<std::string, std::string>> pred_set, gold_set;
    for (const auto& p : pred) pred_set.insert({normalize_surface(p.head), normalize_surface(p.tail)});
    for (const auto& g : gold) {
      auto [drug, attr] = gold_pair_strings(g);
      gold_set.insert({normalize_surface(drug), normalize_surface(attr)});
    }
    std::size_t tp = 0;
    for (const auto& p : pred_set) tp += gold_set.count(p);

    auto counts = score_document(pred, gold);
    CHECK(counts.tp == tp);
    CHECK(counts.fp == pred_set.size() - tp);
    CHECK(counts.fn == gold_set.size() - tp);
  }
}

TEST_CASE("document batches score identically in serial and parallel") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> n(0, 10);
  std::uniform_int_distribution<int> word(0, 6);
  auto surface = [&](int w) { return "w" + std::to_string(w); };

  std::vector<DocumentPairs> docs(150);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::string id = "doc" + std::to_string(d);
    int np = n(rng), ng = n(rng);
    for (int i = 0; i < np; ++i) docs[d].pred.push_back(make_pred(surface(word(rng)), surface(word(rng)), id));
    for (int i = 0; i < ng; ++i) docs[d].gold.push_back(make_gold(surface(word(rng)), surface(word(rng)), id));
  }

  for (bool lenient : {false, true}) {
    EvalOptions options;
    options.lenient = lenient;
    auto parallel = score_documents(docs, options);
    auto reference = serial::score_documents(docs, options);
    CHECK(parallel == reference);
    REQUIRE(parallel.size() == docs.size());
  }
}

TEST_CASE("report table rendering") {
  EvalReport report;
  report.mode = "baseline";
  report.model_id = "gpt-4-32k";
  report.slice_id = "fnv:00";
  report.lenient = false;

  RelationMetrics row;
  row.rtype = RelationType::StrengthDrug;
  row.precision = 0.75;
  row.recall = 0.5;
  row.f1 = 0.6;
  row.counts = {3, 1, 3};
  report.per_relation.push_back(row);
  report.macro_average = {0.75, 0.5, 0.6};
  report.micro_overall = {0.75, 0.5, 0.6};

  auto table = render_report_table(report);
  CHECK(table.find("mode=baseline") != std::string::npos);
  CHECK(table.find("model=gpt-4-32k") != std::string::npos);
  CHECK(table.find("matching=strict") != std::string::npos);
  CHECK(table.find("Strength-Drug") != std::string::npos);
  CHECK(table.find("0.750") != std::string::npos);
  CHECK(table.find("0.600") != std::string::npos);
  CHECK(table.find("Average") != std::string::npos);
  CHECK(table.find("Micro") != std::string::npos);
  CHECK(table.find("generated=") == std::string::npos);

  report.lenient = true;
  report.timestamp = "2024-05-01T00:00:00Z";
  auto lenient_table = render_report_table(report);
  CHECK(lenient_table.find("matching=lenient") != std::string::npos);
  CHECK(lenient_table.find("generated=2024-05-01T00:00:00Z") != std::string::npos);
}

TEST_CASE("reports round-trip through json") {
  EvalReport report;
  report.mode = "umls";
  report.model_id = "gpt-3.5-turbo";
  report.slice_id = "fnv:1234";
  report.lenient = true;
  RelationMetrics row;
  row.rtype = RelationType::ReasonDrug;
  row.precision = 0.5;
  row.recall = 0.25;
  row.f1 = 1.0 / 3.0;
  row.counts = {1, 1, 3};
  report.per_relation.push_back(row);
  report.macro_average = {0.5, 0.25, 1.0 / 3.0};
  report.micro_overall = {0.5, 0.25, 1.0 / 3.0};

  auto loaded = report_from_json(report_to_json(report));
  CHECK(loaded == report);

  auto text = report_to_json(report);
  auto pos = text.find("Reason-Drug");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "Banana-Drug");
  CHECK_THROWS_AS(report_from_json(text), UnknownRelationType);
  CHECK_THROWS_AS(report_from_json("not json"), ConfigError);
}
