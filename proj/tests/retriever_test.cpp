#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "medrex/errors.hpp"
#include "medrex/retriever.hpp"

using namespace medrex;
namespace fs = std::filesystem;

namespace {

EmbeddingVector vec(std::initializer_list<float> values) {
  EmbeddingVector v;
  v.values = values;
  return v;
}

std::string concat_chunks(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const auto& chunk : chunks) out += chunk.text;
  return out;
}

}  // namespace

TEST_CASE("token counting") {
  CHECK(count_tokens("") == 0);
  CHECK(count_tokens("   \n\t ") == 0);
  CHECK(count_tokens("aspirin") == 1);
  CHECK(count_tokens("aspirin 81 mg") == 3);
  CHECK(count_tokens("C0004057|ENG|aspirin") == 5);
  CHECK(count_tokens("a.b") == 3);
  CHECK(count_tokens("don't stop") == 4);
  CHECK(count_tokens("  x   y ") == 2);
  CHECK(count_tokens("...") == 3);
}

TEST_CASE("row chunking reconstructs the stream byte for byte") {
  std::string data =
      "C0004057|ENG|Aspirin\n"
      "C0004058|ENG|Warfarin\n"
      "C0004059|ENG|Lisinopril\n"
      "C0004060|ENG|Metformin\n";
  std::istringstream in(data);
  auto chunks = chunk_rows(in, 10);
  REQUIRE(chunks.size() >= 2);
  CHECK(concat_chunks(chunks) == data);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(chunks[i].chunk_id == static_cast<std::int64_t>(i));
    CHECK(chunks[i].token_count == count_tokens(chunks[i].text));
    CHECK(chunks[i].token_count <= 10);
    CHECK_FALSE(chunks[i].text.empty());
  }
}

TEST_CASE("chunking keeps whole rows and is greedy") {
  // each row is 5 tokens; a 10-token budget packs exactly two rows per chunk
  std::string data = "a b c d e\nf g h i j\nk l m n o\n";
  std::istringstream in(data);
  auto chunks = chunk_rows(in, 10);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].text == "a b c d e\nf g h i j\n");
  CHECK(chunks[1].text == "k l m n o\n");
}

TEST_CASE("a stream without a trailing newline reconstructs too") {
  std::string data = "alpha beta\ngamma delta";
  std::istringstream in(data);
  auto chunks = chunk_rows(in, 2);
  REQUIRE(chunks.size() == 2);
  CHECK(concat_chunks(chunks) == data);
}

TEST_CASE("oversized rows are refused") {
  std::istringstream in("one two three four five\n");
  CHECK_THROWS_AS(chunk_rows(in, 3), RowTooLarge);
}

TEST_CASE("custom token counters are honored") {
  std::istringstream in("aa\nbb\ncc\n");
  auto by_bytes = [](std::string_view row) { return row.size(); };
  auto chunks = chunk_rows(in, 6, by_bytes);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].text == "aa\nbb\n");
  CHECK(chunks[0].token_count == 6);
}

TEST_CASE("random streams always reconstruct within budget") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> rows(0, 40);
  std::uniform_int_distribution<int> words(1, 8);
  std::uniform_int_distribution<int> word_len(1, 6);
  std::uniform_int_distribution<int> letter(0, 25);

  for (int round = 0; round < 100; ++round) {
    std::string data;
    int n = rows(rng);
    for (int r = 0; r < n; ++r) {
      int w = words(rng);
      for (int i = 0; i < w; ++i) {
        if (i > 0) data += ' ';
        int len = word_len(rng);
        for (int j = 0; j < len; ++j) data.push_back(static_cast<char>('a' + letter(rng)));
      }
      data += '\n';
    }
    if (round % 3 == 0 && !data.empty()) data.pop_back();  // drop trailing newline sometimes

    std::istringstream in(data);
    auto chunks = chunk_rows(in, 12);
    CHECK(concat_chunks(chunks) == data);
    for (const auto& chunk : chunks) {
      CHECK(chunk.token_count <= 12);
      CHECK(chunk.token_count == count_tokens(chunk.text));
    }
  }
}

TEST_CASE("cosine similarity") {
  auto a = vec({1.0f, 0.0f});
  auto b = vec({0.0f, 1.0f});
  auto c = vec({2.0f, 0.0f});

  CHECK(cosine(a, b) == doctest::Approx(0.0));
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, c) == doctest::Approx(1.0));
  CHECK(cosine(a, b) == cosine(b, a));
  CHECK(cosine(vec({1.0f, 1.0f}), vec({-1.0f, -1.0f})) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(cosine(a, vec({1.0f, 2.0f, 3.0f})), DimensionMismatch);
  CHECK_THROWS_AS(cosine(a, vec({0.0f, 0.0f})), ZeroVector);
}

TEST_CASE("vector index validates additions") {
  VectorIndex index;
  index.add(0, vec({1.0f, 2.0f}));
  CHECK(index.size() == 1);
  CHECK(index.dim() == 2);

  CHECK_THROWS_AS(index.add(0, vec({3.0f, 4.0f})), ConfigError);         // duplicate id
  CHECK_THROWS_AS(index.add(1, vec({1.0f, 2.0f, 3.0f})), DimensionMismatch);
  CHECK_THROWS_AS(index.add(2, vec({0.0f, 0.0f})), ZeroVector);
  CHECK_THROWS_AS(index.add(3, vec({})), DimensionMismatch);
  EmbeddingVector nan_vec;
  nan_vec.values = {std::nanf(""), 1.0f};
  CHECK_THROWS_AS(index.add(4, std::move(nan_vec)), ConfigError);
}

TEST_CASE("vector index round-trips through its file form") {
  VectorIndex index;
  index.add(7, vec({0.5f, -1.25f, 3.0f}));
  index.add(2, vec({1.0f, 0.0f, 0.125f}));

  std::ostringstream out;
  index.save(out);
  std::istringstream in(out.str());
  auto loaded = VectorIndex::load(in);
  CHECK(loaded.size() == 2);
  CHECK(loaded.dim() == 3);
  CHECK(loaded.entries() == index.entries());
}

TEST_CASE("top-k ordering and tie breaks") {
  VectorIndex index;
  index.add(0, vec({1.0f, 0.0f}));
  index.add(1, vec({0.0f, 1.0f}));
  index.add(2, vec({1.0f, 1.0f}));
  index.add(3, vec({2.0f, 0.0f}));  // same direction as id 0

  auto hits = query_top_k(index, vec({1.0f, 0.0f}), 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].chunk_id == 0);  // ties on score resolve to the lower id
  CHECK(hits[1].chunk_id == 3);
  CHECK(hits[0].score == doctest::Approx(1.0));
  CHECK(hits[2].chunk_id == 2);

  CHECK(query_top_k(index, vec({1.0f, 0.0f}), 99).size() == 4);
  CHECK_THROWS_AS(query_top_k(index, vec({1.0f, 0.0f}), 0), ConfigError);
  CHECK_THROWS_AS(query_top_k(VectorIndex{}, vec({1.0f, 0.0f}), 5), EmptyIndex);
}

TEST_CASE("top-k agrees with a full sort oracle and the serial reference") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr std::size_t kDim = 16;

  VectorIndex index;
  for (std::size_t i = 0; i < 500; ++i) {
    EmbeddingVector v;
    v.values.resize(kDim);
    for (auto& x : v.values) x = static_cast<float>(gauss(rng));
    if (i % 50 == 0 && i > 0) {
      v = index.entries().begin()->second;  // plant exact ties
    }
    index.add(static_cast<std::int64_t>(i), std::move(v));
  }

  for (int round = 0; round < 20; ++round) {
    EmbeddingVector q;
    q.values.resize(kDim);
    for (auto& x : q.values) x = static_cast<float>(gauss(rng));

    std::vector<RetrievalHit> oracle;
    for (const auto& [id, v] : index.entries()) oracle.push_back({id, cosine(v, q)});
    std::stable_sort(oracle.begin(), oracle.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.chunk_id < b.chunk_id;
    });

    for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{30}}) {
      auto got = query_top_k(index, q, k);
      auto ref = serial::query_top_k(index, q, k);
      REQUIRE(got.size() == k);
      CHECK(got == ref);
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(got[i].chunk_id == oracle[i].chunk_id);
        CHECK(got[i].score == oracle[i].score);
      }
    }
  }
}

TEST_CASE("hashing embedder basics") {
  HashingEmbedder embedder(64);
  CHECK(embedder.dim() == 64);
  CHECK(embedder.name() == "hashing");
  CHECK_THROWS_AS(HashingEmbedder(1), ConfigError);

  auto vectors = embedder.embed({"aspirin 81 mg", "aspirin 81 mg", "warfarin 5 mg", ""});
  REQUIRE(vectors.size() == 4);
  CHECK(vectors[0] == vectors[1]);
  CHECK(vectors[0] != vectors[2]);
  for (const auto& v : vectors) {
    REQUIRE(v.dim() == 64);
    double norm = 0.0;
    for (float x : v.values) norm += static_cast<double>(x) * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("embedding wrapper validates provider output") {
  class BrokenProvider : public EmbeddingProvider {
   public:
    explicit BrokenProvider(int failure_mode) : mode(failure_mode) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
      std::vector<EmbeddingVector> out;
      if (mode == 0) return out;  // wrong count
      for (std::size_t i = 0; i < texts.size(); ++i) {
        EmbeddingVector v;
        v.values = {1.0f, 2.0f};
        if (mode == 1 && i == 1) v.values.push_back(3.0f);        // dimension drift
        if (mode == 2 && i == 0) v.values[0] = std::nanf("");     // non-finite
        out.push_back(std::move(v));
      }
      return out;
    }
    std::size_t dim() const override { return 2; }
    std::string name() const override { return "broken"; }
    int mode;
  };

  BrokenProvider wrong_count(0), drift(1), non_finite(2);
  CHECK_THROWS_AS(embed({"a", "b"}, wrong_count), BackendError);
  CHECK_THROWS_AS(embed({"a", "b"}, drift), DimensionMismatch);
  CHECK_THROWS_AS(embed({"a", "b"}, non_finite), BackendError);

  HashingEmbedder ok(32);
  CHECK(embed({"a", "b"}, ok).size() == 2);
}

TEST_CASE("chunk store lookups") {
  ChunkStore store;
  store.add({0, "first\n", 1});
  store.add({5, "second\n", 1});
  CHECK(store.get(5).text == "second\n");
  CHECK_THROWS_AS(store.get(1), MissingChunk);
  CHECK_THROWS_AS(store.add({0, "dup\n", 1}), ConfigError);

  std::ostringstream out;
  store.save(out);
  std::istringstream in(out.str());
  auto loaded = ChunkStore::load(in);
  CHECK(loaded.size() == 2);
  CHECK(loaded.chunks() == store.chunks());
}

TEST_CASE("prompt augmentation appends retrieved rows under one header") {
  RenderedPrompt prompt;
  prompt.text = "Instructions...\nNote:\nmy note\n\nAnswer: ";
  prompt.doc_id = "doc-1";
  prompt.mode = PromptMode::rag;
  prompt.params_fingerprint = "fp";
  prompt.prompt_id = prompt_fingerprint(prompt.text, prompt.mode, prompt.params_fingerprint);

  ChunkStore chunks;
  chunks.add({0, "C1|aspirin\n", 2});
  chunks.add({1, "C2|warfarin\n", 2});

  auto augmented = augment_prompt(prompt, {{1, 0.9}, {0, 0.5}}, chunks);
  CHECK(augmented.mode == PromptMode::rag);
  CHECK(augmented.text == prompt.text + "\n\nRetrieved lexicon context:\nC2|warfarin\nC1|aspirin\n");
  CHECK(augmented.prompt_id == prompt_fingerprint(augmented.text, PromptMode::rag, "fp"));
  CHECK(augmented.prompt_id != prompt.prompt_id);

  auto unchanged = augment_prompt(prompt, {}, chunks);
  CHECK(unchanged.text == prompt.text);
  CHECK(unchanged.mode == PromptMode::rag);
}

TEST_CASE("http embedder batches misses and caches results") {
  httplib::Server server;
  std::atomic<int> hits{0};

  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json data = nlohmann::json::array();
    for (std::size_t i = 0; i < body["input"].size(); ++i) {
      std::string text = body["input"][i];
      float bias = text == "aspirin" ? 1.0f : 2.0f;
      data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", {bias, 0.5f, 0.25f}}});
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  fs::path cache = fs::temp_directory_path() / ("medrex-embcache-" + std::to_string(::getpid()) + ".jsonl");
  fs::remove(cache);
  std::string url = "http://127.0.0.1:" + std::to_string(port);

  {
    HttpEmbedder embedder(url, "key", "test-model", cache);
    auto vectors = embedder.embed({"aspirin", "warfarin"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0].values[0] == doctest::Approx(1.0f));
    CHECK(vectors[1].values[0] == doctest::Approx(2.0f));
    CHECK(hits == 1);
    CHECK(embedder.dim() == 3);
  }
  {
    HttpEmbedder embedder(url, "key", "test-model", cache);
    auto vectors = embedder.embed({"aspirin", "warfarin"});
    REQUIRE(vectors.size() == 2);
    CHECK(hits == 1);  // everything served from the disk cache
    auto more = embedder.embed({"aspirin", "lisinopril"});
    CHECK(hits == 2);  // one miss triggers one more batch
  }

  fs::remove(cache);
  server.stop();
  runner.join();
}
