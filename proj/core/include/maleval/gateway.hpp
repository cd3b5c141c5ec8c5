#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "maleval/json_util.hpp"

namespace maleval::gateway {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

struct ModelSpec {
  std::string provider = "mock";
  std::string model = "mock-model";
  double temperature = 0.0;  // deterministic decoding by default
  int max_output_tokens = 1024;
  std::size_t context_budget = 8192;     // input token budget for truncation
  double chars_per_token = 4.0;          // heuristic estimator, provider-overridable

  std::string spec_hash() const;
  std::string tag() const { return provider + ":" + model; }
};

struct ChatExchange {
  std::string prompt;
  std::string reply;
  std::size_t prompt_tokens = 0;
  std::size_t reply_tokens = 0;
  double latency_ms = 0.0;
  bool cache_hit = false;
  std::string spec_hash;
};

/// One scripted rule: a prompt matches when it contains every `contains`
/// substring. Rules are tried in order; the first match wins. A rule with an
/// empty `contains` list is a catch-all.
struct MockRule {
  std::vector<std::string> contains;
  std::string reply;
  int transient_failures = 0;  // raise RateLimited this many times before replying
};

struct MockScript {
  std::vector<MockRule> rules;
  std::string default_reply;

  static MockScript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Index of the first matching rule, or nullopt for the default reply.
  std::optional<std::size_t> match(const std::string& prompt) const;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string send(const ModelSpec& spec, const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)) {}
  std::string send(const ModelSpec& spec, const std::string& prompt) override;
  std::string name() const override { return "mock"; }

 private:
  MockScript script_;
  std::map<std::size_t, int> failures_used_;
  std::mutex mutex_;
};

struct ProviderConfig {
  std::string name;
  std::string base_url;                       // e.g. http://127.0.0.1:8080
  std::string path = "/v1/chat/completions";  // chat-completion endpoint
  std::string auth_header = "Authorization";
  std::string auth_scheme = "Bearer";         // empty = raw key in header
  double chars_per_token = 4.0;
};

/// Minimal TOML subset: `[providers.<name>]` sections with `key = "value"`
/// or `key = number` lines.
std::map<std::string, ProviderConfig> load_providers(const std::filesystem::path& path);

/// Reads MALEVAL_API_KEY_<PROVIDER> (provider upper-cased).
std::optional<std::string> provider_api_key(const std::string& provider);

class HttpBackend : public Backend {
 public:
  HttpBackend(ProviderConfig config, std::string api_key);
  std::string send(const ModelSpec& spec, const std::string& prompt) override;
  std::string name() const override { return config_.name; }

 private:
  ProviderConfig config_;
  std::string api_key_;
};

/// Dispatches on ModelSpec::provider, letting one gateway serve the
/// evaluated model and the judge even when they live on different backends.
class RoutingBackend : public Backend {
 public:
  void add(const std::string& provider, std::shared_ptr<Backend> backend);
  std::string send(const ModelSpec& spec, const std::string& prompt) override;
  std::string name() const override { return "routing"; }

 private:
  std::map<std::string, std::shared_ptr<Backend>> backends_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 100;
  int max_delay_ms = 5000;
  bool sleep_between = true;  // disabled in fault-injection tests
};

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;  // unset = in-memory cache only
  RetryPolicy retry;
  int max_inflight = 8;  // per-provider request semaphore
};

struct GatewayStats {
  std::uint64_t requests = 0;
  std::uint64_t backend_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
  std::uint64_t repairs = 0;          // structured-output repair prompts issued
  std::uint64_t unparseable = 0;      // structured replies rejected twice
};

/// Uniform access to chat-completion backends with caching, bounded retry,
/// an in-flight semaphore, and structured-output validation. Safe for
/// concurrent callers.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options);

  ChatExchange complete(const ModelSpec& spec, const std::string& prompt);

  /// Validates the reply against the registered schema. On violation, one
  /// repair re-prompt (with the validation error appended) is issued; a
  /// second violation raises UnparseableReply carrying both raw replies.
  json complete_structured(const ModelSpec& spec, const std::string& prompt,
                           const std::string& schema_id);

  GatewayStats stats() const;
  void reset_stats();

 private:
  std::optional<std::string> cache_lookup(const std::string& key, const std::string& prompt);
  void cache_store(const std::string& key, const std::string& prompt, const std::string& reply);
  std::string send_with_retry(const ModelSpec& spec, const std::string& prompt);

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;

  mutable std::mutex mutex_;
  std::map<std::string, std::string> memory_cache_;
  GatewayStats stats_;

  std::mutex inflight_mutex_;
  std::condition_variable inflight_cv_;
  std::map<std::string, int> inflight_by_provider_;
};

/// Registered structured-reply schemas: ir_reply, behavior_report,
/// rq_judgement, eas_judgement, report_parse. Returns an error description
/// or nullopt when the document is valid.
std::optional<std::string> validate_schema(const std::string& schema_id, const json& doc);

/// Strips markdown code fences and leading/trailing noise around a JSON body.
std::string extract_json_body(const std::string& reply);

std::size_t estimate_tokens(std::string_view text, double chars_per_token);

struct FitResult {
  std::size_t included = 0;     // leading blocks that fit
  std::size_t token_total = 0;  // tokens consumed including overhead
};

/// Greedy prefix fit of rendered blocks into the spec's context budget.
/// Never splits a block; raises BudgetTooSmall when the first block does
/// not fit.
FitResult fit_blocks(const std::vector<std::string>& blocks, const ModelSpec& spec,
                     std::size_t overhead_tokens);

}  // namespace maleval::gateway
