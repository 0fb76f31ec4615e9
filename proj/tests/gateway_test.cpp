#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "medrex/errors.hpp"
#include "medrex/gateway.hpp"

using namespace medrex;
namespace fs = std::filesystem;

namespace {

ChatRequest sample_request(const std::string& user = "extract pairs from this note") {
  ChatRequest req;
  req.model_id = "gpt-4-32k";
  req.system_message = "";
  req.user_message = user;
  return req;
}

class CountingBackend : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest& req) override {
    ++calls;
    ChatResponse resp;
    resp.raw_text = "[('aspirin', '81 mg')]";
    resp.finish_reason = FinishReason::stop;
    resp.latency_ms = 1;
    return resp;
  }
  std::string name() const override { return "counting"; }

  std::atomic<int> calls{0};
};

class FlakyBackend : public ChatBackend {
 public:
  explicit FlakyBackend(int failures) : failures_left(failures) {}

  ChatResponse complete(const ChatRequest& req) override {
    ++calls;
    if (failures_left.fetch_sub(1) > 0) throw TransientBackendError("simulated 429");
    ChatResponse resp;
    resp.raw_text = "ok";
    return resp;
  }
  std::string name() const override { return "flaky"; }

  std::atomic<int> failures_left;
  std::atomic<int> calls{0};
};

class SlowBackend : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest& req) override {
    int now = ++active;
    int seen = max_active.load();
    while (now > seen && !max_active.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    --active;
    ++calls;
    ChatResponse resp;
    resp.raw_text = "slow:" + req.user_message;
    return resp;
  }
  std::string name() const override { return "slow"; }

  std::atomic<int> active{0};
  std::atomic<int> max_active{0};
  std::atomic<int> calls{0};
};

}  // namespace

TEST_CASE("generation parameter validation and fingerprints") {
  GenerationParams params;
  CHECK_NOTHROW(params.validate());

  GenerationParams bad = params;
  bad.temperature = -0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = params;
  bad.top_p = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = params;
  bad.top_p = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = params;
  bad.max_tokens = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(params.fingerprint() == GenerationParams{}.fingerprint());
  GenerationParams other = params;
  other.max_tokens = 100;
  CHECK(params.fingerprint() != other.fingerprint());
  other = params;
  other.temperature = 0.7;
  CHECK(params.fingerprint() != other.fingerprint());
}

TEST_CASE("request hashing covers every field") {
  auto base = sample_request();
  auto key = hash_request(base);
  CHECK(key == hash_request(sample_request()));

  auto changed = base;
  changed.model_id = "gpt-3.5-turbo";
  CHECK(hash_request(changed) != key);
  changed = base;
  changed.system_message = "you are terse";
  CHECK(hash_request(changed) != key);
  changed = base;
  changed.user_message += "!";
  CHECK(hash_request(changed) != key);
  changed = base;
  changed.params.temperature = 1.0;
  CHECK(hash_request(changed) != key);
}

TEST_CASE("finish reasons round-trip") {
  CHECK(finish_reason_from_name(finish_reason_name(FinishReason::stop)) == FinishReason::stop);
  CHECK(finish_reason_from_name(finish_reason_name(FinishReason::length)) == FinishReason::length);
  CHECK(finish_reason_from_name(finish_reason_name(FinishReason::error)) == FinishReason::error);
}

TEST_CASE("scripted backend matches by hash or substring, first rule wins") {
  auto req = sample_request("note mentions aspirin today");
  std::istringstream script(
      R"({"match":")" + hash_request(req) + R"(","response":"by-hash"})" "\n"
      R"({"match":"aspirin","response":"by-substring"})" "\n");
  auto backend = MockBackend::from_script(script);

  CHECK(backend.complete(req).raw_text == "by-hash");
  CHECK(backend.complete(sample_request("aspirin elsewhere")).raw_text == "by-substring");
  CHECK_THROWS_AS(backend.complete(sample_request("nothing matches")), BackendScriptMiss);

  std::istringstream bad("not json\n");
  CHECK_THROWS_AS(MockBackend::from_script(bad), ConfigError);
}

TEST_CASE("gateway serves repeats from the cache") {
  auto backend = std::make_shared<CountingBackend>();
  ChatGateway gateway(backend);

  auto first = gateway.complete(sample_request());
  CHECK_FALSE(first.cached);
  CHECK(first.attempts == 1);

  auto second = gateway.complete(sample_request());
  CHECK(second.cached);
  CHECK(second.attempts == 0);
  CHECK(second.latency_ms == 0);
  CHECK(second.raw_text == first.raw_text);

  CHECK(backend->calls == 1);
  auto stats = gateway.stats();
  CHECK(stats.backend_calls == 1);
  CHECK(stats.cache_hits == 1);
  CHECK(stats.retries == 0);
  CHECK(gateway.cache_size() == 1);

  CHECK_THROWS_AS(gateway.complete(sample_request("")), ConfigError);
}

TEST_CASE("gateway cache persists across instances") {
  fs::path cache = fs::temp_directory_path() / ("medrex-gwcache-" + std::to_string(::getpid()) + ".jsonl");
  fs::remove(cache);

  {
    auto backend = std::make_shared<CountingBackend>();
    GatewayOptions options;
    options.cache_path = cache;
    ChatGateway gateway(std::move(backend), options);
    gateway.complete(sample_request());
    gateway.complete(sample_request("a different prompt"));
  }
  {
    auto backend = std::make_shared<CountingBackend>();
    GatewayOptions options;
    options.cache_path = cache;
    ChatGateway gateway(backend, options);
    CHECK(gateway.cache_size() == 2);
    auto resp = gateway.complete(sample_request());
    CHECK(resp.cached);
    CHECK(backend->calls == 0);
  }
  {
    // a truncated trailing line is tolerated, valid lines still load
    std::ofstream out(cache, std::ios::app);
    out << "{\"key\":\"zzz\",\"resp";
    out.close();
    auto backend = std::make_shared<CountingBackend>();
    GatewayOptions options;
    options.cache_path = cache;
    ChatGateway gateway(backend, options);
    CHECK(gateway.cache_size() == 2);
  }
  fs::remove(cache);
}

TEST_CASE("retry policy delays grow and saturate") {
  RetryPolicy policy;
  CHECK(policy.delay_for(0) == std::chrono::milliseconds(500));
  CHECK(policy.delay_for(1) == std::chrono::milliseconds(1000));
  CHECK(policy.delay_for(2) == std::chrono::milliseconds(2000));
  CHECK(policy.delay_for(3) == std::chrono::milliseconds(4000));
  CHECK(policy.delay_for(4) == std::chrono::milliseconds(8000));
  CHECK(policy.delay_for(9) == std::chrono::milliseconds(8000));
}

TEST_CASE("transient failures are retried with backoff") {
  auto backend = std::make_shared<FlakyBackend>(2);
  std::vector<std::chrono::milliseconds> delays;
  GatewayOptions options;
  options.sleeper = [&](std::chrono::milliseconds d) { delays.push_back(d); };
  ChatGateway gateway(backend, options);

  auto resp = gateway.complete(sample_request());
  CHECK(resp.raw_text == "ok");
  CHECK(resp.attempts == 3);
  CHECK(backend->calls == 3);
  REQUIRE(delays.size() == 2);
  CHECK(delays[0] == std::chrono::milliseconds(500));
  CHECK(delays[1] == std::chrono::milliseconds(1000));

  auto stats = gateway.stats();
  CHECK(stats.backend_calls == 3);
  CHECK(stats.retries == 2);
}

TEST_CASE("the retry budget is bounded") {
  auto backend = std::make_shared<FlakyBackend>(1000);
  std::vector<std::chrono::milliseconds> delays;
  GatewayOptions options;
  options.retry.max_retries = 3;
  options.sleeper = [&](std::chrono::milliseconds d) { delays.push_back(d); };
  ChatGateway gateway(backend, options);

  CHECK_THROWS_AS(gateway.complete(sample_request()), ExhaustedRetries);
  CHECK(backend->calls == 4);  // initial try plus three retries
  CHECK(delays.size() == 3);
  for (std::size_t i = 1; i < delays.size(); ++i) CHECK(delays[i] >= delays[i - 1]);
}

TEST_CASE("auth failures are not retried") {
  class AuthFailBackend : public ChatBackend {
   public:
    ChatResponse complete(const ChatRequest&) override {
      ++calls;
      throw AuthError("401 from upstream");
    }
    std::string name() const override { return "authfail"; }
    std::atomic<int> calls{0};
  };

  auto backend = std::make_shared<AuthFailBackend>();
  GatewayOptions options;
  options.sleeper = [](std::chrono::milliseconds) {};
  ChatGateway gateway(backend, options);
  CHECK_THROWS_AS(gateway.complete(sample_request()), AuthError);
  CHECK(backend->calls == 1);
}

TEST_CASE("identical concurrent requests collapse to one backend call") {
  auto backend = std::make_shared<SlowBackend>();
  ChatGateway gateway(backend);

  std::vector<std::thread> threads;
  std::vector<std::string> results(4);
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] { results[static_cast<std::size_t>(i)] = gateway.complete(sample_request()).raw_text; });
  }
  for (auto& t : threads) t.join();

  CHECK(backend->calls == 1);
  for (const auto& r : results) CHECK(r == results[0]);
  CHECK(gateway.stats().cache_hits == 3);
}

TEST_CASE("distinct requests respect the parallelism cap") {
  auto backend = std::make_shared<SlowBackend>();
  GatewayOptions options;
  options.max_parallel = 2;
  ChatGateway gateway(backend, options);

  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { gateway.complete(sample_request("prompt " + std::to_string(i))); });
  }
  for (auto& t : threads) t.join();

  CHECK(backend->calls == 8);
  CHECK(backend->max_active <= 2);

  GatewayOptions bad;
  bad.max_parallel = 0;
  CHECK_THROWS_AS(ChatGateway(std::make_shared<SlowBackend>(), bad), ConfigError);
  CHECK_THROWS_AS(ChatGateway(nullptr), ConfigError);
}

TEST_CASE("http backend speaks the chat completion protocol") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string last_body;
  std::mutex body_mutex;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++hits;
    {
      std::lock_guard<std::mutex> lock(body_mutex);
      last_body = req.body;
    }
    if (n <= 2) {
      res.status = 429;
      res.set_content("rate limited", "text/plain");
      return;
    }
    nlohmann::json reply = {
        {"choices",
         {{{"message", {{"role", "assistant"}, {"content", "[('aspirin', '81 mg')]"}}},
           {"finish_reason", "stop"}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/v1/auth-fails/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("bad key", "text/plain");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  {
    auto backend = std::make_shared<HttpBackend>("http://127.0.0.1:" + std::to_string(port), "test-key");
    GatewayOptions options;
    options.sleeper = [](std::chrono::milliseconds) {};
    ChatGateway gateway(backend, options);

    auto req = sample_request("note text here");
    req.system_message = "you extract relations";
    auto resp = gateway.complete(req);
    CHECK(resp.raw_text == "[('aspirin', '81 mg')]");
    CHECK(resp.finish_reason == FinishReason::stop);
    CHECK(resp.attempts == 3);
    CHECK(gateway.stats().retries == 2);

    std::lock_guard<std::mutex> lock(body_mutex);
    auto body = nlohmann::json::parse(last_body);
    CHECK(body["model"] == "gpt-4-32k");
    CHECK(body["max_tokens"] == 200);
    CHECK(body["temperature"] == 0.0);
    CHECK(body["top_p"] == 0.95);
    CHECK(body["presence_penalty"] == -1.0);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "note text here");
  }
  {
    HttpBackend backend("http://127.0.0.1:" + std::to_string(port) + "/v1/auth-fails/chat/completions",
                        "bad-key");
    CHECK_THROWS_AS(backend.complete(sample_request()), AuthError);
  }

  server.stop();
  runner.join();
}
