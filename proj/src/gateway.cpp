#include "medrex/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "medrex/text.hpp"

namespace medrex {

namespace {

using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string GenerationParams::fingerprint() const {
  return "mt=" + std::to_string(max_tokens) + "|t=" + format_real(temperature) + "|tp=" +
         format_real(top_p) + "|pp=" + format_real(presence_penalty);
}

void GenerationParams::validate() const {
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0 && top_p <= 1)) throw ConfigError("top_p must be in (0, 1]");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

std::string_view finish_reason_name(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "stop";
}

FinishReason finish_reason_from_name(std::string_view name) {
  if (name == "length") return FinishReason::length;
  if (name == "error") return FinishReason::error;
  return FinishReason::stop;
}

std::string hash_request(const ChatRequest& req) {
  std::string blob;
  blob.reserve(req.model_id.size() + req.system_message.size() + req.user_message.size() + 48);
  blob.append(req.model_id);
  blob.push_back('\x1f');
  blob.append(req.system_message);
  blob.push_back('\x1f');
  blob.append(req.user_message);
  blob.push_back('\x1f');
  blob.append(req.params.fingerprint());
  return fnv1a64_hex(blob);
}

MockBackend MockBackend::from_script(std::istream& in) {
  MockBackend backend;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("mock script line " + std::to_string(line_no) + ": not valid JSON: " + e.what());
    }
    if (!rec.contains("match") || !rec.contains("response")) {
      throw ConfigError("mock script line " + std::to_string(line_no) + ": needs 'match' and 'response'");
    }
    backend.add_rule(rec.at("match").get<std::string>(), rec.at("response").get<std::string>());
  }
  return backend;
}

MockBackend MockBackend::from_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script: " + path.string());
  return from_script(in);
}

void MockBackend::add_rule(std::string match, std::string response) {
  rules_.push_back({std::move(match), std::move(response)});
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
  std::string key = hash_request(req);
  for (const auto& rule : rules_) {
    if (rule.match == key || req.user_message.find(rule.match) != std::string::npos) {
      return {rule.response, FinishReason::stop, 0, false, 1};
    }
  }
  std::string head = req.user_message.substr(0, 80);
  throw BackendScriptMiss("no mock rule matches request " + key + " (prompt starts: " + head + ")");
}

HttpBackend::HttpBackend(std::string endpoint_url, std::string api_key) : api_key_(std::move(api_key)) {
  auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + endpoint_url);
  auto path_start = endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = endpoint_url;
    path_ = "/v1/chat/completions";
  } else {
    base_ = endpoint_url.substr(0, path_start);
    path_ = endpoint_url.substr(path_start);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_.rfind("https://", 0) == 0) {
    throw ConfigError("built without TLS support; use an http:// endpoint");
  }
#endif
}

std::unique_ptr<HttpBackend> HttpBackend::from_env() {
  const char* endpoint = std::getenv("MEDREX_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) {
    throw ConfigError("MEDREX_LLM_ENDPOINT is not set (or pass a mock script instead)");
  }
  const char* key = std::getenv("MEDREX_LLM_API_KEY");
  return std::make_unique<HttpBackend>(endpoint, key ? key : "");
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  json body;
  body["model"] = req.model_id;
  body["messages"] = json::array();
  if (!req.system_message.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", req.system_message}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", req.user_message}});
  body["max_tokens"] = req.params.max_tokens;
  body["temperature"] = req.params.temperature;
  body["top_p"] = req.params.top_p;
  body["presence_penalty"] = req.params.presence_penalty;

  httplib::Client client(base_);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
    headers.emplace("api-key", api_key_);
  }

  auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path_, headers, body.dump(), "application/json");
  auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

  if (!result) {
    throw TransientBackendError("connection failure: " + httplib::to_string(result.error()));
  }
  if (result->status == 401 || result->status == 403) {
    throw AuthError("endpoint rejected credential (HTTP " + std::to_string(result->status) + ")");
  }
  if (result->status == 429 || result->status >= 500) {
    throw TransientBackendError("HTTP " + std::to_string(result->status) + " from endpoint");
  }
  if (result->status != 200) {
    throw BackendError("HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200));
  }

  json parsed;
  try {
    parsed = json::parse(result->body);
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed completion body: ") + e.what());
  }
  ChatResponse resp;
  try {
    const auto& choice = parsed.at("choices").at(0);
    resp.raw_text = choice.at("message").at("content").get<std::string>();
    resp.finish_reason = finish_reason_from_name(choice.value("finish_reason", "stop"));
  } catch (const json::exception& e) {
    throw BackendError(std::string("completion body missing fields: ") + e.what());
  }
  resp.latency_ms = static_cast<long>(elapsed.count());
  return resp;
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry_index) const {
  double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, retry_index);
  double capped = std::min(ms, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long>(capped));
}

ChatGateway::ChatGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (options_.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (!options_.sleeper) {
    options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (!options_.cache_path.empty() && std::filesystem::exists(options_.cache_path)) {
    std::ifstream in(options_.cache_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      // a killed run can leave a truncated final line; skip what will not parse
      if (rec.is_discarded() || !rec.contains("key") || !rec.contains("response")) continue;
      ChatResponse resp;
      resp.raw_text = rec.at("response").get<std::string>();
      resp.finish_reason = finish_reason_from_name(rec.value("finish_reason", "stop"));
      resp.attempts = 0;
      cache_[rec.at("key").get<std::string>()] = std::move(resp);
    }
  }
}

ChatResponse ChatGateway::complete(const ChatRequest& req) {
  req.params.validate();
  if (req.user_message.empty()) throw ConfigError("chat request has an empty user message");
  std::string key = hash_request(req);

  std::unique_lock lock(mutex_);
  for (;;) {
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++stats_.cache_hits;
      ChatResponse resp = it->second;
      resp.cached = true;
      resp.latency_ms = 0;
      resp.attempts = 0;
      return resp;
    }
    if (!in_flight_.count(key)) break;
    cv_.wait(lock);
  }
  in_flight_.insert(key);
  cv_.wait(lock, [&] { return active_calls_ < options_.max_parallel; });
  ++active_calls_;
  lock.unlock();

  ChatResponse resp;
  try {
    resp = call_with_retries(req);
  } catch (...) {
    lock.lock();
    in_flight_.erase(key);
    --active_calls_;
    cv_.notify_all();
    throw;
  }

  persist(key, resp);
  lock.lock();
  cache_[key] = resp;
  in_flight_.erase(key);
  --active_calls_;
  cv_.notify_all();
  return resp;
}

ChatResponse ChatGateway::call_with_retries(const ChatRequest& req) {
  for (int attempt = 0;; ++attempt) {
    try {
      {
        std::lock_guard guard(mutex_);
        ++stats_.backend_calls;
      }
      ChatResponse resp = backend_->complete(req);
      resp.attempts = attempt + 1;
      resp.cached = false;
      return resp;
    } catch (const TransientBackendError& e) {
      if (attempt >= options_.retry.max_retries) {
        throw ExhaustedRetries("gave up after " + std::to_string(attempt + 1) + " attempts: " + e.what());
      }
      {
        std::lock_guard guard(mutex_);
        ++stats_.retries;
      }
      options_.sleeper(options_.retry.delay_for(attempt));
    }
  }
}

void ChatGateway::persist(const std::string& key, const ChatResponse& resp) {
  if (options_.cache_path.empty()) return;
  json rec;
  rec["key"] = key;
  rec["response"] = resp.raw_text;
  rec["finish_reason"] = std::string(finish_reason_name(resp.finish_reason));
  rec["timestamp"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
  std::lock_guard guard(file_mutex_);
  std::ofstream out(options_.cache_path, std::ios::app);
  if (!out) throw ConfigError("cannot append to response cache: " + options_.cache_path.string());
  out << rec.dump() << '\n';
}

GatewayStats ChatGateway::stats() const {
  std::lock_guard guard(mutex_);
  return stats_;
}

std::size_t ChatGateway::cache_size() const {
  std::lock_guard guard(mutex_);
  return cache_.size();
}

}  // namespace medrex
