#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "medrex/evaluator.hpp"
#include "medrex/mapper.hpp"
#include "medrex/retriever.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn, int repeats) {
  fn();  // warm-up
  auto start = Clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  auto stop = Clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

void print_row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-16s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx\n", name, serial_ms, parallel_ms,
              parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
}

medrex::ConceptLexicon synthetic_lexicon(std::size_t terms, std::mt19937_64& rng) {
  medrex::ConceptLexicon lexicon;
  lexicon.filter = medrex::SemanticFilter::medications();
  std::uniform_int_distribution<int> len(4, 12);
  std::uniform_int_distribution<int> letter(0, 25);
  for (std::size_t i = 0; i < terms; ++i) {
    std::string term;
    int n = len(rng);
    for (int j = 0; j < n; ++j) term.push_back(static_cast<char>('a' + letter(rng)));
    char cui[16];
    std::snprintf(cui, sizeof(cui), "C%07zu", i);
    lexicon.entries[term].insert({cui, "Pharmacologic Substance"});
  }
  return lexicon;
}

std::vector<medrex::Document> synthetic_docs(const medrex::ConceptLexicon& lexicon, std::size_t count,
                                             std::size_t words_per_doc, std::mt19937_64& rng) {
  std::vector<std::string> vocabulary;
  for (const auto& [term, concepts] : lexicon.entries) vocabulary.push_back(term);
  static const char* kFiller[] = {"patient", "was", "given", "daily", "with", "food",
                                  "and",     "the", "dose",  "held",  "for", "review"};
  std::uniform_int_distribution<std::size_t> pick_term(0, vocabulary.size() - 1);
  std::uniform_int_distribution<int> pick_filler(0, 11);
  std::uniform_int_distribution<int> coin(0, 9);

  std::vector<medrex::Document> docs(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string text;
    for (std::size_t w = 0; w < words_per_doc; ++w) {
      if (!text.empty()) text.push_back(' ');
      if (coin(rng) == 0) {
        text += vocabulary[pick_term(rng)];
      } else {
        text += kFiller[pick_filler(rng)];
      }
    }
    char id[32];
    std::snprintf(id, sizeof(id), "doc-%05zu", i);
    docs[i] = {id, std::move(text), medrex::DatasetTag::other};
  }
  return docs;
}

void bench_mapper(std::mt19937_64& rng) {
  auto lexicon = synthetic_lexicon(2000, rng);
  auto docs = synthetic_docs(lexicon, 400, 1500, rng);
  medrex::LexiconMatcher matcher(lexicon);

  double serial_ms = time_ms([&] { medrex::serial::map_corpus(docs, matcher); }, 3);
  double parallel_ms = time_ms([&] { medrex::map_corpus(docs, matcher); }, 3);
  print_row("map_corpus", serial_ms, parallel_ms);
}

void bench_retrieval(std::mt19937_64& rng) {
  constexpr std::size_t kVectors = 20000;
  constexpr std::size_t kDim = 128;
  std::normal_distribution<double> gauss(0.0, 1.0);

  medrex::VectorIndex index;
  for (std::size_t i = 0; i < kVectors; ++i) {
    medrex::EmbeddingVector vec;
    vec.values.resize(kDim);
    for (auto& v : vec.values) v = static_cast<float>(gauss(rng));
    index.add(static_cast<std::int64_t>(i), std::move(vec));
  }
  medrex::EmbeddingVector query;
  query.values.resize(kDim);
  for (auto& v : query.values) v = static_cast<float>(gauss(rng));

  double serial_ms = time_ms([&] { medrex::serial::query_top_k(index, query, 30); }, 10);
  double parallel_ms = time_ms([&] { medrex::query_top_k(index, query, 30); }, 10);
  print_row("query_top_k", serial_ms, parallel_ms);
}

void bench_scoring(std::mt19937_64& rng) {
  constexpr std::size_t kDocs = 4000;
  std::uniform_int_distribution<int> pair_count(0, 24);
  std::uniform_int_distribution<int> word(0, 399);

  auto surface = [&](int w) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "term%03d", w);
    return std::string(buf);
  };

  std::vector<medrex::DocumentPairs> docs(kDocs);
  for (std::size_t i = 0; i < kDocs; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "doc-%05zu", i);
    int preds = pair_count(rng);
    for (int p = 0; p < preds; ++p) {
      medrex::ExtractedPair pair;
      pair.head = surface(word(rng));
      pair.tail = surface(word(rng));
      pair.doc_id = id;
      pair.rtype = medrex::RelationType::StrengthDrug;
      docs[i].pred.push_back(std::move(pair));
    }
    int golds = pair_count(rng);
    for (int g = 0; g < golds; ++g) {
      medrex::GoldRelation rel;
      rel.doc_id = id;
      rel.rtype = medrex::RelationType::StrengthDrug;
      rel.head.label = "Strength";
      rel.head.surface = surface(word(rng));
      rel.tail.label = "Drug";
      rel.tail.surface = surface(word(rng));
      docs[i].gold.push_back(std::move(rel));
    }
  }

  medrex::EvalOptions lenient;
  lenient.lenient = true;
  double serial_ms = time_ms([&] { medrex::serial::score_documents(docs, lenient); }, 5);
  double parallel_ms = time_ms([&] { medrex::score_documents(docs, lenient); }, 5);
  print_row("score_documents", serial_ms, parallel_ms);
}

}  // namespace

int main() {
  std::mt19937_64 rng(20240229);
  std::printf("threaded kernels vs the serial reference\n\n");
  bench_mapper(rng);
  bench_retrieval(rng);
  bench_scoring(rng);
  return 0;
}
