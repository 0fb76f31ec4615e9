#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "medrex/prompt.hpp"

namespace medrex {

// Counts maximal alphanumeric runs and individual punctuation marks as one
// token each; whitespace separates and is free.
std::size_t count_tokens(std::string_view text);

using TokenCounter = std::function<std::size_t(std::string_view)>;

struct Chunk {
  std::int64_t chunk_id = 0;
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const Chunk&) const = default;
};

// Greedy packing of whole rows up to the token budget; concatenating chunk
// texts in id order reproduces the input stream byte-exactly.
std::vector<Chunk> chunk_rows(std::istream& rows, std::size_t max_tokens = 8192,
                              const TokenCounter& counter = {});

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class VectorIndex {
 public:
  // Rejects dimension drift, non-finite values, all-zero vectors, and
  // duplicate chunk ids.
  void add(std::int64_t chunk_id, EmbeddingVector vec);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  const std::map<std::int64_t, EmbeddingVector>& entries() const { return entries_; }

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(std::istream& in);
  static VectorIndex load(const std::filesystem::path& path);

 private:
  std::map<std::int64_t, EmbeddingVector> entries_;
  std::size_t dim_ = 0;
};

struct RetrievalHit {
  std::int64_t chunk_id = 0;
  double score = 0.0;

  bool operator==(const RetrievalHit&) const = default;
};

// Exact exhaustive scan: hits sorted by score descending, ties by ascending
// chunk_id, length min(k, index size).
std::vector<RetrievalHit> query_top_k(const VectorIndex& index, const EmbeddingVector& query,
                                      std::size_t k = 30);

namespace serial {
std::vector<RetrievalHit> query_top_k(const VectorIndex& index, const EmbeddingVector& query,
                                      std::size_t k = 30);
}  // namespace serial

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
  // 0 when the dimension is unknown until the first call.
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
};

// Deterministic dependency-free embedder: hashed byte n-grams (n = 1..3)
// over buckets 1..dim-1 plus a constant bias bucket, L2-normalized. Never
// produces a zero vector; equal texts give equal vectors.
class HashingEmbedder : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dim = 256);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  EmbeddingVector embed_one(std::string_view text) const;
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "hashing"; }

 private:
  std::size_t dim_;
};

// OpenAI-compatible embeddings endpoint with an optional disk cache keyed
// by (model, text) so interrupted index builds resume without re-billing.
class HttpEmbedder : public EmbeddingProvider {
 public:
  HttpEmbedder(std::string endpoint_url, std::string api_key, std::string model_id,
               std::filesystem::path cache_path = {});
  // Reads MEDREX_EMBED_ENDPOINT, MEDREX_EMBED_API_KEY, MEDREX_EMBED_MODEL.
  static std::unique_ptr<HttpEmbedder> from_env(std::filesystem::path cache_path = {});

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "http:" + model_id_; }

 private:
  EmbeddingVector lookup_or_mark(const std::string& text, std::vector<std::size_t>& misses);

  std::string base_;
  std::string path_;
  std::string api_key_;
  std::string model_id_;
  std::filesystem::path cache_path_;
  std::map<std::string, EmbeddingVector> cache_;
  std::size_t dim_ = 0;
};

// Shape-checked batch embedding: one finite vector per text, constant dim.
std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, EmbeddingProvider& provider);

class ChunkStore {
 public:
  void add(Chunk chunk);
  const Chunk& get(std::int64_t chunk_id) const;  // MissingChunk when absent
  bool empty() const { return chunks_.empty(); }
  std::size_t size() const { return chunks_.size(); }
  const std::map<std::int64_t, Chunk>& chunks() const { return chunks_; }

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static ChunkStore load(std::istream& in);
  static ChunkStore load(const std::filesystem::path& path);

 private:
  std::map<std::int64_t, Chunk> chunks_;
};

// Appends the retrieved chunk texts under a delimiter header (skipped when
// there are no hits), switches the mode to rag, and refreshes prompt_id.
RenderedPrompt augment_prompt(const RenderedPrompt& prompt, const std::vector<RetrievalHit>& hits,
                              const ChunkStore& chunks);

}  // namespace medrex
