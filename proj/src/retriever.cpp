#include "medrex/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>

#include "httplib.h"
#include "json.hpp"
#include "medrex/errors.hpp"
#include "medrex/text.hpp"

namespace medrex {

namespace {

using nlohmann::json;

}  // namespace

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char c = text[pos];
    if (is_word_char(c)) {
      ++count;
      while (pos < text.size() && is_word_char(text[pos])) ++pos;
    } else {
      if (!is_space_char(c)) ++count;
      ++pos;
    }
  }
  return count;
}

std::vector<Chunk> chunk_rows(std::istream& rows, std::size_t max_tokens, const TokenCounter& counter) {
  const TokenCounter& count = counter ? counter : TokenCounter(count_tokens);
  std::vector<Chunk> chunks;
  Chunk current;
  std::size_t running_tokens = 0;
  std::size_t row_no = 0;

  auto flush = [&] {
    if (current.text.empty()) return;
    current.chunk_id = static_cast<std::int64_t>(chunks.size());
    current.token_count = count(current.text);
    chunks.push_back(std::move(current));
    current = Chunk{};
    running_tokens = 0;
  };

  std::string row;
  while (std::getline(rows, row)) {
    ++row_no;
    if (!rows.eof()) row.push_back('\n');  // eof here means the stream had no final newline
    std::size_t row_tokens = count(row);
    if (row_tokens > max_tokens) {
      throw RowTooLarge("row " + std::to_string(row_no) + " holds " + std::to_string(row_tokens) +
                        " tokens, over the " + std::to_string(max_tokens) + " budget");
    }
    if (running_tokens + row_tokens > max_tokens) flush();
    current.text += row;
    running_tokens += row_tokens;
  }
  flush();
  return chunks;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("cosine over dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  double dot = 0, norm_a = 0, norm_b = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double x = a.values[i];
    double y = b.values[i];
    dot += x * y;
    norm_a += x * x;
    norm_b += y * y;
  }
  if (norm_a == 0 || norm_b == 0) throw ZeroVector("cosine of an all-zero vector is undefined");
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

void VectorIndex::add(std::int64_t chunk_id, EmbeddingVector vec) {
  if (vec.values.empty()) throw DimensionMismatch("empty embedding vector");
  bool all_zero = true;
  for (float v : vec.values) {
    if (!std::isfinite(v)) throw ConfigError("non-finite embedding value for chunk " + std::to_string(chunk_id));
    if (v != 0.0f) all_zero = false;
  }
  if (all_zero) throw ZeroVector("all-zero embedding for chunk " + std::to_string(chunk_id));
  if (dim_ == 0) {
    dim_ = vec.dim();
  } else if (vec.dim() != dim_) {
    throw DimensionMismatch("chunk " + std::to_string(chunk_id) + " has dim " + std::to_string(vec.dim()) +
                            ", index has " + std::to_string(dim_));
  }
  if (!entries_.emplace(chunk_id, std::move(vec)).second) {
    throw ConfigError("duplicate chunk id " + std::to_string(chunk_id) + " in index");
  }
}

void VectorIndex::save(std::ostream& out) const {
  for (const auto& [id, vec] : entries_) {
    json rec{{"chunk_id", id}, {"vector", vec.values}};
    out << rec.dump() << '\n';
  }
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open index file for writing: " + path.string());
  save(out);
}

VectorIndex VectorIndex::load(std::istream& in) {
  VectorIndex index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("index line " + std::to_string(line_no) + ": not valid JSON: " + e.what());
    }
    index.add(rec.at("chunk_id").get<std::int64_t>(), {rec.at("vector").get<std::vector<float>>()});
  }
  return index;
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open index file: " + path.string());
  return load(in);
}

namespace {

std::vector<RetrievalHit> sort_and_clip(std::vector<RetrievalHit> hits, std::size_t k) {
  std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

void check_query(const VectorIndex& index, std::size_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (index.empty()) throw EmptyIndex("query against an empty index");
}

}  // namespace

std::vector<RetrievalHit> query_top_k(const VectorIndex& index, const EmbeddingVector& query, std::size_t k) {
  check_query(index, k);
  std::vector<const std::pair<const std::int64_t, EmbeddingVector>*> entries;
  entries.reserve(index.size());
  for (const auto& entry : index.entries()) entries.push_back(&entry);

  std::vector<RetrievalHit> hits(entries.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(entries.size()); ++i) {
    const auto& [id, vec] = *entries[static_cast<std::size_t>(i)];
    hits[static_cast<std::size_t>(i)] = {id, cosine(query, vec)};
  }
  return sort_and_clip(std::move(hits), k);
}

namespace serial {

std::vector<RetrievalHit> query_top_k(const VectorIndex& index, const EmbeddingVector& query, std::size_t k) {
  check_query(index, k);
  std::vector<RetrievalHit> hits;
  hits.reserve(index.size());
  for (const auto& [id, vec] : index.entries()) hits.push_back({id, cosine(query, vec)});
  return sort_and_clip(std::move(hits), k);
}

}  // namespace serial

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim < 2) throw ConfigError("hashing embedder needs dim >= 2");
}

EmbeddingVector HashingEmbedder::embed_one(std::string_view text) const {
  std::vector<double> buckets(dim_, 0.0);
  buckets[0] = 1.0;  // bias keeps every vector nonzero
  for (std::size_t n = 1; n <= 3; ++n) {
    if (text.size() < n) break;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      std::uint64_t h = fnv1a64(text.substr(i, n), 0x9e3779b97f4a7c15ULL + n);
      buckets[1 + h % (dim_ - 1)] += 1.0;
    }
  }
  double norm = 0;
  for (double v : buckets) norm += v * v;
  norm = std::sqrt(norm);
  EmbeddingVector vec;
  vec.values.reserve(dim_);
  for (double v : buckets) vec.values.push_back(static_cast<float>(v / norm));
  return vec;
}

std::vector<EmbeddingVector> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out(texts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(texts.size()); ++i) {
    out[static_cast<std::size_t>(i)] = embed_one(texts[static_cast<std::size_t>(i)]);
  }
  return out;
}

HttpEmbedder::HttpEmbedder(std::string endpoint_url, std::string api_key, std::string model_id,
                           std::filesystem::path cache_path)
    : api_key_(std::move(api_key)), model_id_(std::move(model_id)), cache_path_(std::move(cache_path)) {
  auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + endpoint_url);
  auto path_start = endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = endpoint_url;
    path_ = "/v1/embeddings";
  } else {
    base_ = endpoint_url.substr(0, path_start);
    path_ = endpoint_url.substr(path_start);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_.rfind("https://", 0) == 0) {
    throw ConfigError("built without TLS support; use an http:// endpoint");
  }
#endif
  if (!cache_path_.empty() && std::filesystem::exists(cache_path_)) {
    std::ifstream in(cache_path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("key") || !rec.contains("vector")) continue;
      EmbeddingVector vec{rec.at("vector").get<std::vector<float>>()};
      if (dim_ == 0) dim_ = vec.dim();
      cache_[rec.at("key").get<std::string>()] = std::move(vec);
    }
  }
}

std::unique_ptr<HttpEmbedder> HttpEmbedder::from_env(std::filesystem::path cache_path) {
  const char* endpoint = std::getenv("MEDREX_EMBED_ENDPOINT");
  if (!endpoint || !*endpoint) throw ConfigError("MEDREX_EMBED_ENDPOINT is not set");
  const char* key = std::getenv("MEDREX_EMBED_API_KEY");
  const char* model = std::getenv("MEDREX_EMBED_MODEL");
  return std::make_unique<HttpEmbedder>(endpoint, key ? key : "",
                                        model && *model ? model : "text-embedding-ada-002",
                                        std::move(cache_path));
}

std::vector<EmbeddingVector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::size_t> misses;
  std::vector<std::string> keys(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys[i] = fnv1a64_hex(model_id_ + '\x1f' + texts[i]);
    auto it = cache_.find(keys[i]);
    if (it != cache_.end()) {
      out[i] = it->second;
    } else {
      misses.push_back(i);
    }
  }
  if (misses.empty()) return out;

  json body;
  body["model"] = model_id_;
  json input = json::array();
  for (std::size_t i : misses) input.push_back(texts[i]);
  body["input"] = std::move(input);

  httplib::Client client(base_);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
    headers.emplace("api-key", api_key_);
  }
  auto result = client.Post(path_, headers, body.dump(), "application/json");
  if (!result) throw TransientBackendError("connection failure: " + httplib::to_string(result.error()));
  if (result->status == 401 || result->status == 403) {
    throw AuthError("embeddings endpoint rejected credential (HTTP " + std::to_string(result->status) + ")");
  }
  if (result->status == 429 || result->status >= 500) {
    throw TransientBackendError("HTTP " + std::to_string(result->status) + " from embeddings endpoint");
  }
  if (result->status != 200) {
    throw BackendError("HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200));
  }

  json parsed;
  try {
    parsed = json::parse(result->body);
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embeddings body: ") + e.what());
  }
  const auto& data = parsed.at("data");
  if (!data.is_array() || data.size() != misses.size()) {
    throw BackendError("embeddings endpoint returned " + std::to_string(data.size()) + " vectors for " +
                       std::to_string(misses.size()) + " inputs");
  }

  std::ofstream cache_out;
  if (!cache_path_.empty()) cache_out.open(cache_path_, std::ios::app);
  for (std::size_t j = 0; j < misses.size(); ++j) {
    std::size_t i = misses[j];
    EmbeddingVector vec{data.at(j).at("embedding").get<std::vector<float>>()};
    if (dim_ == 0) dim_ = vec.dim();
    if (cache_out.is_open()) {
      json rec{{"key", keys[i]}, {"vector", vec.values}};
      cache_out << rec.dump() << '\n';
    }
    cache_[keys[i]] = vec;
    out[i] = std::move(vec);
  }
  return out;
}

std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, EmbeddingProvider& provider) {
  std::vector<EmbeddingVector> out = provider.embed(texts);
  if (out.size() != texts.size()) {
    throw BackendError("provider returned " + std::to_string(out.size()) + " vectors for " +
                       std::to_string(texts.size()) + " texts");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].dim() != out[0].dim()) {
      throw DimensionMismatch("embedding " + std::to_string(i) + " has dim " + std::to_string(out[i].dim()) +
                              ", expected " + std::to_string(out[0].dim()));
    }
    for (float v : out[i].values) {
      if (!std::isfinite(v)) throw BackendError("non-finite embedding value at index " + std::to_string(i));
    }
  }
  return out;
}

void ChunkStore::add(Chunk chunk) {
  std::int64_t id = chunk.chunk_id;
  if (!chunks_.emplace(id, std::move(chunk)).second) {
    throw ConfigError("duplicate chunk id " + std::to_string(id) + " in chunk store");
  }
}

const Chunk& ChunkStore::get(std::int64_t chunk_id) const {
  auto it = chunks_.find(chunk_id);
  if (it == chunks_.end()) throw MissingChunk("no chunk with id " + std::to_string(chunk_id));
  return it->second;
}

void ChunkStore::save(std::ostream& out) const {
  for (const auto& [id, chunk] : chunks_) {
    json rec{{"chunk_id", id}, {"text", chunk.text}, {"token_count", chunk.token_count}};
    out << rec.dump() << '\n';
  }
}

void ChunkStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open chunk store for writing: " + path.string());
  save(out);
}

ChunkStore ChunkStore::load(std::istream& in) {
  ChunkStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("chunk store line " + std::to_string(line_no) + ": not valid JSON: " + e.what());
    }
    store.add({rec.at("chunk_id").get<std::int64_t>(), rec.at("text").get<std::string>(),
               rec.at("token_count").get<std::size_t>()});
  }
  return store;
}

ChunkStore ChunkStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open chunk store: " + path.string());
  return load(in);
}

RenderedPrompt augment_prompt(const RenderedPrompt& prompt, const std::vector<RetrievalHit>& hits,
                              const ChunkStore& chunks) {
  RenderedPrompt out = prompt;
  out.mode = PromptMode::rag;
  if (!hits.empty()) {
    out.text += "\n\nRetrieved lexicon context:\n";
    for (const auto& hit : hits) out.text += chunks.get(hit.chunk_id).text;
  }
  out.prompt_id = prompt_fingerprint(out.text, out.mode, out.params_fingerprint);
  return out;
}

}  // namespace medrex
