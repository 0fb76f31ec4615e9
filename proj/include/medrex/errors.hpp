#pragma once

#include <stdexcept>
#include <string>

namespace medrex {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// RRF ingest
struct MalformedRow : Error {
  using Error::Error;
};
struct EmptyLexicon : Error {
  using Error::Error;
};
struct LexiconCacheError : Error {
  using Error::Error;
};

// Corpus loading
struct CorpusError : Error {
  using Error::Error;
};
struct DanglingReference : CorpusError {
  using CorpusError::CorpusError;
};
struct OffsetMismatch : CorpusError {
  using CorpusError::CorpusError;
};
struct SchemaError : CorpusError {
  using CorpusError::CorpusError;
};
struct UnknownRelationType : CorpusError {
  using CorpusError::CorpusError;
};

// Prompt templates
struct TemplateError : Error {
  using Error::Error;
};

// Chat/embedding backends
struct BackendError : Error {
  using Error::Error;
};
struct AuthError : BackendError {
  using BackendError::BackendError;
};
// Retryable failure (rate limit, 5xx, connection reset). Backends throw it,
// the gateway turns it into retries and eventually ExhaustedRetries.
struct TransientBackendError : BackendError {
  using BackendError::BackendError;
};
struct ExhaustedRetries : BackendError {
  using BackendError::BackendError;
};
struct BackendScriptMiss : BackendError {
  using BackendError::BackendError;
};

// Retrieval
struct DimensionMismatch : Error {
  using Error::Error;
};
struct ZeroVector : Error {
  using Error::Error;
};
struct RowTooLarge : Error {
  using Error::Error;
};
struct EmptyIndex : Error {
  using Error::Error;
};
struct MissingChunk : Error {
  using Error::Error;
};

// Evaluation
struct MixedDocuments : Error {
  using Error::Error;
};
struct EmptyRows : Error {
  using Error::Error;
};

// Run orchestration
struct SliceMismatch : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace medrex
