#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "medrex/errors.hpp"

namespace medrex {

struct GenerationParams {
  int max_tokens = 200;
  double temperature = 0.0;
  double top_p = 0.95;
  double presence_penalty = -1.0;

  // Stable textual form folded into request keys and prompt ids.
  std::string fingerprint() const;
  // Throws ConfigError when temperature < 0 or top_p is outside (0, 1].
  void validate() const;

  bool operator==(const GenerationParams&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::string system_message;
  std::string user_message;
  GenerationParams params;

  bool operator==(const ChatRequest&) const = default;
};

enum class FinishReason { stop, length, error };

std::string_view finish_reason_name(FinishReason reason);
FinishReason finish_reason_from_name(std::string_view name);

struct ChatResponse {
  std::string raw_text;
  FinishReason finish_reason = FinishReason::stop;
  long latency_ms = 0;
  bool cached = false;
  int attempts = 1;
};

// Content hash over model, both messages, and generation parameters; any
// field change changes the key.
std::string hash_request(const ChatRequest& req);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual std::string name() const = 0;
};

// Scripted backend: rules are tried in file order; a rule fires when its
// match string equals the request hash or occurs inside the user message.
class MockBackend : public ChatBackend {
 public:
  MockBackend() = default;
  static MockBackend from_script(const std::filesystem::path& path);
  static MockBackend from_script(std::istream& in);

  void add_rule(std::string match, std::string response);
  ChatResponse complete(const ChatRequest& req) override;  // BackendScriptMiss when no rule fires
  std::string name() const override { return "mock"; }

 private:
  struct Rule {
    std::string match;
    std::string response;
  };
  std::vector<Rule> rules_;
};

// OpenAI-compatible chat-completion endpoint. HTTP 401/403 raise AuthError;
// 429 and 5xx raise TransientBackendError (retryable); connection failures
// are treated as transient.
class HttpBackend : public ChatBackend {
 public:
  HttpBackend(std::string endpoint_url, std::string api_key);
  // Reads MEDREX_LLM_ENDPOINT and MEDREX_LLM_API_KEY.
  static std::unique_ptr<HttpBackend> from_env();

  ChatResponse complete(const ChatRequest& req) override;
  std::string name() const override { return "http"; }

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
};

struct RetryPolicy {
  int max_retries = 4;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay_for(int retry_index) const;
};

struct GatewayStats {
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

struct GatewayOptions {
  std::filesystem::path cache_path;  // empty -> in-memory cache only
  RetryPolicy retry;
  int max_parallel = 4;
  // Injectable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

// Serves completions through a disk-persisted response cache with bounded
// request parallelism, retrying transient backend failures with exponential
// backoff. Identical in-flight requests are collapsed to one backend call.
class ChatGateway {
 public:
  ChatGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {});

  ChatResponse complete(const ChatRequest& req);
  GatewayStats stats() const;
  std::size_t cache_size() const;

 private:
  ChatResponse call_with_retries(const ChatRequest& req);
  void persist(const std::string& key, const ChatResponse& resp);

  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions options_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::unordered_map<std::string, ChatResponse> cache_;
  std::set<std::string> in_flight_;
  int active_calls_ = 0;
  GatewayStats stats_;

  std::mutex file_mutex_;
};

}  // namespace medrex
