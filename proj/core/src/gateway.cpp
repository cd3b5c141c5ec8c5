#include "maleval/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#ifdef MALEVAL_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "maleval/errors.hpp"

namespace maleval::gateway {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string ModelSpec::spec_hash() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "|%.6g|%d|%zu", temperature, max_output_tokens,
                context_budget);
  return hex64(fnv1a64(provider + "|" + model + buf));
}

MockScript MockScript::load(const std::filesystem::path& path) {
  MockScript script;
  for (const auto& line : read_jsonl_file(path)) {
    if (line.contains("default_reply")) {
      script.default_reply = line["default_reply"].get<std::string>();
      continue;
    }
    MockRule rule;
    if (line.contains("contains")) {
      for (const auto& token : line["contains"]) {
        rule.contains.push_back(token.get<std::string>());
      }
    }
    if (!line.contains("reply") || !line["reply"].is_string()) {
      raise(ErrorKind::SchemaViolation, path.string() + ": mock rule without 'reply'");
    }
    rule.reply = line["reply"].get<std::string>();
    if (line.contains("transient_failures")) {
      rule.transient_failures = line["transient_failures"].get<int>();
    }
    script.rules.push_back(std::move(rule));
  }
  return script;
}

void MockScript::save(const std::filesystem::path& path) const {
  std::vector<json> lines;
  for (const auto& rule : rules) {
    json line;
    line["contains"] = rule.contains;
    line["reply"] = rule.reply;
    if (rule.transient_failures > 0) {
      line["transient_failures"] = rule.transient_failures;
    }
    lines.push_back(std::move(line));
  }
  if (!default_reply.empty()) {
    lines.push_back(json{{"default_reply", default_reply}});
  }
  write_jsonl_file(path, lines);
}

std::optional<std::size_t> MockScript::match(const std::string& prompt) const {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    bool all = true;
    for (const auto& token : rules[i].contains) {
      if (prompt.find(token) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) {
      return i;
    }
  }
  return std::nullopt;
}

std::string MockBackend::send(const ModelSpec& spec, const std::string& prompt) {
  (void)spec;
  const auto rule_index = script_.match(prompt);
  if (!rule_index.has_value()) {
    if (script_.default_reply.empty()) {
      raise(ErrorKind::ProviderError, "mock script has no matching rule and no default reply");
    }
    return script_.default_reply;
  }
  const MockRule& rule = script_.rules[*rule_index];
  if (rule.transient_failures > 0) {
    std::lock_guard<std::mutex> lock(mutex_);
    int& used = failures_used_[*rule_index];
    if (used < rule.transient_failures) {
      ++used;
      raise(ErrorKind::RateLimited, "scripted transient failure");
    }
  }
  return rule.reply;
}

std::map<std::string, ProviderConfig> load_providers(const std::filesystem::path& path) {
  std::map<std::string, ProviderConfig> providers;
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  ProviderConfig* current = nullptr;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    line = line.substr(first);
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) {
        raise(ErrorKind::ConfigError, path.string() + ": malformed section header");
      }
      std::string section = line.substr(1, close - 1);
      const std::string prefix = "providers.";
      if (section.rfind(prefix, 0) != 0) {
        current = nullptr;
        continue;
      }
      const std::string name = section.substr(prefix.size());
      current = &providers[name];
      current->name = name;
      continue;
    }
    if (current == nullptr) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "base_url") current->base_url = value;
    else if (key == "path") current->path = value;
    else if (key == "auth_header") current->auth_header = value;
    else if (key == "auth_scheme") current->auth_scheme = value;
    else if (key == "chars_per_token") current->chars_per_token = std::stod(value);
  }
  return providers;
}

std::optional<std::string> provider_api_key(const std::string& provider) {
  std::string var = "MALEVAL_API_KEY_";
  for (char c : provider) {
    var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  const char* value = std::getenv(var.c_str());
  if (value == nullptr || *value == '\0') {
    return std::nullopt;
  }
  return std::string(value);
}

HttpBackend::HttpBackend(ProviderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  if (api_key_.empty()) {
    raise(ErrorKind::AuthError, "no API key for provider '" + config_.name +
                                    "' (set MALEVAL_API_KEY_<PROVIDER>)");
  }
}

std::string HttpBackend::send(const ModelSpec& spec, const std::string& prompt) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);

  json body;
  body["model"] = spec.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = spec.temperature;
  body["max_tokens"] = spec.max_output_tokens;

  httplib::Headers headers;
  const std::string auth_value =
      config_.auth_scheme.empty() ? api_key_ : config_.auth_scheme + " " + api_key_;
  headers.emplace(config_.auth_header, auth_value);

  auto result = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!result) {
    raise(ErrorKind::ProviderError,
          "provider '" + config_.name + "': " + httplib::to_string(result.error()));
  }
  if (result->status == 401 || result->status == 403) {
    raise(ErrorKind::AuthError, "provider '" + config_.name + "' rejected credentials (" +
                                    std::to_string(result->status) + ")");
  }
  if (result->status == 429) {
    raise(ErrorKind::RateLimited, "provider '" + config_.name + "' throttled the request");
  }
  if (result->status >= 500) {
    raise(ErrorKind::ProviderError, "provider '" + config_.name + "' returned " +
                                        std::to_string(result->status) + ": " + result->body);
  }
  if (result->status != 200) {
    raise(ErrorKind::ProviderError, "provider '" + config_.name + "' returned " +
                                        std::to_string(result->status) + ": " + result->body);
  }
  json doc = json::parse(result->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty() ||
      !doc["choices"][0].contains("message")) {
    raise(ErrorKind::ProviderError,
          "provider '" + config_.name + "': unexpected response shape");
  }
  return doc["choices"][0]["message"]["content"].get<std::string>();
}

void RoutingBackend::add(const std::string& provider, std::shared_ptr<Backend> backend) {
  backends_[provider] = std::move(backend);
}

std::string RoutingBackend::send(const ModelSpec& spec, const std::string& prompt) {
  auto it = backends_.find(spec.provider);
  if (it == backends_.end()) {
    raise(ErrorKind::ConfigError, "no backend configured for provider '" + spec.provider + "'");
  }
  return it->second->send(spec, prompt);
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  if (options_.cache_dir.has_value()) {
    std::filesystem::create_directories(*options_.cache_dir);
  }
}

namespace {

std::string cache_key_for(const ModelSpec& spec, const std::string& prompt) {
  return spec.spec_hash() + "-" + hex64(fnv1a64(prompt)) + "-" + std::to_string(prompt.size());
}

bool is_retryable(const Error& error) {
  return error.kind() == ErrorKind::RateLimited || error.kind() == ErrorKind::ProviderError;
}

}  // namespace

std::optional<std::string> Gateway::cache_lookup(const std::string& key,
                                                 const std::string& prompt) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = memory_cache_.find(key);
    if (it != memory_cache_.end()) {
      return it->second;
    }
  }
  if (!options_.cache_dir.has_value()) {
    return std::nullopt;
  }
  const auto path = *options_.cache_dir / (key + ".json");
  if (!std::filesystem::exists(path)) {
    return std::nullopt;
  }
  const json entry = read_json_file(path);
  if (!entry.contains("prompt") || entry["prompt"].get<std::string>() != prompt) {
    return std::nullopt;  // hash collision, treat as a miss
  }
  const std::string reply = entry["reply"].get<std::string>();
  std::lock_guard<std::mutex> lock(mutex_);
  memory_cache_[key] = reply;
  return reply;
}

void Gateway::cache_store(const std::string& key, const std::string& prompt,
                          const std::string& reply) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    memory_cache_[key] = reply;
  }
  if (options_.cache_dir.has_value()) {
    write_json_file(*options_.cache_dir / (key + ".json"),
                    json{{"prompt", prompt}, {"reply", reply}});
  }
}

std::string Gateway::send_with_retry(const ModelSpec& spec, const std::string& prompt) {
  int delay_ms = options_.retry.base_delay_ms;
  for (int attempt = 1;; ++attempt) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++stats_.backend_calls;
    }
    try {
      return backend_->send(spec, prompt);
    } catch (const Error& error) {
      if (!is_retryable(error) || attempt >= options_.retry.max_attempts) {
        throw;
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.retries;
      }
      if (options_.retry.sleep_between) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      }
      delay_ms = std::min(delay_ms * 2, options_.retry.max_delay_ms);
    }
  }
}

ChatExchange Gateway::complete(const ModelSpec& spec, const std::string& prompt) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    ++stats_.requests;
  }
  ChatExchange exchange;
  exchange.prompt = prompt;
  exchange.spec_hash = spec.spec_hash();
  exchange.prompt_tokens = estimate_tokens(prompt, spec.chars_per_token);

  const std::string key = cache_key_for(spec, prompt);
  if (auto cached = cache_lookup(key, prompt)) {
    exchange.reply = *cached;
    exchange.cache_hit = true;
    exchange.reply_tokens = estimate_tokens(exchange.reply, spec.chars_per_token);
    std::lock_guard<std::mutex> lock(mutex_);
    ++stats_.cache_hits;
    return exchange;
  }

  {
    std::unique_lock<std::mutex> lock(inflight_mutex_);
    inflight_cv_.wait(
        lock, [&] { return inflight_by_provider_[spec.provider] < options_.max_inflight; });
    ++inflight_by_provider_[spec.provider];
  }
  const auto start = std::chrono::steady_clock::now();
  std::string reply;
  try {
    reply = send_with_retry(spec, prompt);
  } catch (...) {
    {
      std::lock_guard<std::mutex> lock(inflight_mutex_);
      --inflight_by_provider_[spec.provider];
    }
    inflight_cv_.notify_all();
    throw;
  }
  {
    std::lock_guard<std::mutex> lock(inflight_mutex_);
    --inflight_by_provider_[spec.provider];
  }
  inflight_cv_.notify_all();

  exchange.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  exchange.reply = reply;
  exchange.reply_tokens = estimate_tokens(reply, spec.chars_per_token);
  cache_store(key, prompt, reply);
  return exchange;
}

std::string extract_json_body(const std::string& reply) {
  std::string text = reply;
  const auto fence = text.find("```");
  if (fence != std::string::npos) {
    auto body_start = text.find('\n', fence);
    if (body_start != std::string::npos) {
      const auto fence_end = text.find("```", body_start);
      if (fence_end != std::string::npos) {
        text = text.substr(body_start + 1, fence_end - body_start - 1);
      }
    }
  }
  const auto first = text.find_first_of("{[");
  const auto last = text.find_last_of("}]");
  if (first != std::string::npos && last != std::string::npos && last > first) {
    text = text.substr(first, last - first + 1);
  }
  return text;
}

json Gateway::complete_structured(const ModelSpec& spec, const std::string& prompt,
                                  const std::string& schema_id) {
  const ChatExchange first = complete(spec, prompt);
  json doc = json::parse(extract_json_body(first.reply), nullptr, false);
  std::optional<std::string> error;
  if (doc.is_discarded()) {
    error = "reply is not valid JSON";
  } else {
    error = validate_schema(schema_id, doc);
  }
  if (!error.has_value()) {
    return doc;
  }

  {
    std::lock_guard<std::mutex> lock(mutex_);
    ++stats_.repairs;
  }
  const std::string repair_prompt =
      prompt + "\n\nThe previous reply failed validation: " + *error +
      "\nReturn only a corrected JSON object.";
  const ChatExchange second = complete(spec, repair_prompt);
  json repaired = json::parse(extract_json_body(second.reply), nullptr, false);
  std::optional<std::string> second_error;
  if (repaired.is_discarded()) {
    second_error = "reply is not valid JSON";
  } else {
    second_error = validate_schema(schema_id, repaired);
  }
  if (!second_error.has_value()) {
    return repaired;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    ++stats_.unparseable;
  }
  raise(ErrorKind::UnparseableReply, "schema '" + schema_id + "': " + *error + " / " +
                                         *second_error + "\nfirst reply: " + first.reply +
                                         "\nsecond reply: " + second.reply);
}

GatewayStats Gateway::stats() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return stats_;
}

void Gateway::reset_stats() {
  std::lock_guard<std::mutex> lock(mutex_);
  stats_ = GatewayStats{};
}

namespace {

std::optional<std::string> check_score(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    return std::string("missing numeric field '") + key + "'";
  }
  const double value = doc[key].get<double>();
  if (value < 0.0 || value > 100.0) {
    return std::string("field '") + key + "' outside [0,100]";
  }
  return std::nullopt;
}

std::optional<std::string> check_string(const json& doc, const char* key,
                                        bool allow_empty = false) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    return std::string("missing string field '") + key + "'";
  }
  if (!allow_empty && doc[key].get<std::string>().empty()) {
    return std::string("field '") + key + "' must be non-empty";
  }
  return std::nullopt;
}

std::optional<std::string> validate_ir_reply(const json& doc) {
  if (auto err = check_string(doc, "description")) return err;
  if (!doc.contains("sensitivity") || !doc["sensitivity"].is_number()) {
    return "missing numeric field 'sensitivity'";
  }
  const double s = doc["sensitivity"].get<double>();
  if (s < 0.0 || s > 100.0) {
    return "field 'sensitivity' outside [0,100]";
  }
  return std::nullopt;
}

std::optional<std::string> validate_behavior_report(const json& doc) {
  if (!doc.contains("is_malicious") || !doc["is_malicious"].is_boolean()) {
    return "missing boolean field 'is_malicious'";
  }
  if (auto err = check_string(doc, "summary")) return err;
  if (!doc.contains("present_behaviors") || !doc["present_behaviors"].is_array()) {
    return "missing array field 'present_behaviors'";
  }
  const bool malicious = doc["is_malicious"].get<bool>();
  if (!malicious && !doc["present_behaviors"].empty()) {
    return "benign verdict requires empty 'present_behaviors'";
  }
  if (malicious) {
    if (auto err = check_string(doc, "category")) return err;
  }
  for (const auto& behavior : doc["present_behaviors"]) {
    if (auto err = check_string(behavior, "behavior")) return err;
    if (auto err = check_string(behavior, "evidence", /*allow_empty=*/true)) return err;
    if (!behavior.contains("related_functions") || !behavior["related_functions"].is_array()) {
      return "behavior missing array field 'related_functions'";
    }
    for (const auto& fn : behavior["related_functions"]) {
      if (!fn.is_string()) {
        return "'related_functions' entries must be strings";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> validate_rq_judgement(const json& doc) {
  if (auto err = check_score(doc, "insight")) return err;
  if (auto err = check_score(doc, "comprehensiveness")) return err;
  if (auto err = check_score(doc, "evidence_quality")) return err;
  return std::nullopt;
}

std::optional<std::string> validate_eas_judgement(const json& doc) {
  if (!doc.contains("behavior_scores") || !doc["behavior_scores"].is_array()) {
    return "missing array field 'behavior_scores'";
  }
  for (const auto& entry : doc["behavior_scores"]) {
    if (auto err = check_string(entry, "behavior")) return err;
    if (auto err = check_score(entry, "score")) return err;
  }
  return std::nullopt;
}

std::optional<std::string> validate_report_parse(const json& doc) {
  if (!doc.contains("behaviors") || !doc["behaviors"].is_array()) {
    return "missing array field 'behaviors'";
  }
  for (const auto& behavior : doc["behaviors"]) {
    if (auto err = check_string(behavior, "category")) return err;
    if (auto err = check_string(behavior, "evidence")) return err;
  }
  if (auto err = check_string(doc, "summary")) return err;
  if (auto err = check_string(doc, "malware_category")) return err;
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_schema(const std::string& schema_id, const json& doc) {
  if (!doc.is_object()) {
    return "top-level value must be an object";
  }
  if (schema_id == "ir_reply") return validate_ir_reply(doc);
  if (schema_id == "behavior_report") return validate_behavior_report(doc);
  if (schema_id == "rq_judgement") return validate_rq_judgement(doc);
  if (schema_id == "eas_judgement") return validate_eas_judgement(doc);
  if (schema_id == "report_parse") return validate_report_parse(doc);
  raise(ErrorKind::ConfigError, "unknown schema id '" + schema_id + "'");
}

std::size_t estimate_tokens(std::string_view text, double chars_per_token) {
  if (chars_per_token <= 0.0) {
    chars_per_token = 4.0;
  }
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(text.size()) / chars_per_token));
}

FitResult fit_blocks(const std::vector<std::string>& blocks, const ModelSpec& spec,
                     std::size_t overhead_tokens) {
  FitResult result;
  result.token_total = overhead_tokens;
  for (const auto& block : blocks) {
    const std::size_t tokens = estimate_tokens(block, spec.chars_per_token);
    if (result.token_total + tokens > spec.context_budget) {
      break;
    }
    result.token_total += tokens;
    ++result.included;
  }
  if (result.included == 0 && !blocks.empty()) {
    raise(ErrorKind::BudgetTooSmall,
          "context budget " + std::to_string(spec.context_budget) +
              " cannot fit the first block (" +
              std::to_string(estimate_tokens(blocks.front(), spec.chars_per_token)) +
              " tokens + " + std::to_string(overhead_tokens) + " overhead)");
  }
  return result;
}

}  // namespace maleval::gateway
