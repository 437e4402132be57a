#include "slam/gateway.h"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

#include "slam/error.h"
#include "slam/stats.h"

namespace slam {

using nlohmann::json;

std::string to_string(AcquisitionStatus s) {
  switch (s) {
    case AcquisitionStatus::kPending: return "pending";
    case AcquisitionStatus::kReady: return "ready";
    case AcquisitionStatus::kFailed: return "failed";
  }
  return "failed";
}

std::string ModelRegistry::register_model(const ModelSpec& spec) {
  spec.validate();
  std::lock_guard lock(mu_);
  auto it = models_.find(spec.model_id);
  if (it != models_.end()) {
    if (it->second == spec) return spec.model_id;
    throw Error(ErrorCode::kDuplicateModel,
                "'" + spec.model_id + "' already registered with a different spec");
  }
  models_.emplace(spec.model_id, spec);
  return spec.model_id;
}

const ModelSpec& ModelRegistry::get(const std::string& model_id) const {
  std::lock_guard lock(mu_);
  auto it = models_.find(model_id);
  if (it == models_.end()) throw Error(ErrorCode::kUnknownModel, "'" + model_id + "'");
  return it->second;
}

bool ModelRegistry::contains(const std::string& model_id) const {
  std::lock_guard lock(mu_);
  return models_.count(model_id) > 0;
}

std::vector<ModelSpec> ModelRegistry::all() const {
  std::lock_guard lock(mu_);
  std::vector<ModelSpec> out;
  for (const auto& [_, spec] : models_) out.push_back(spec);
  return out;
}

std::int64_t estimate_tokens(std::string_view text) {
  std::int64_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return (words * 4 + 2) / 3;
}

std::string hosted_request_body(const std::string& model, const std::string& prompt,
                                const GenerationParams& params) {
  json body = {{"model", model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", params.temperature}};
  if (params.max_output_tokens) body["max_tokens"] = *params.max_output_tokens;
  if (params.seed) body["seed"] = *params.seed;
  return body.dump();
}

std::string local_request_body(const std::string& model, const std::string& prompt,
                               const GenerationParams& params) {
  json options = {{"temperature", params.temperature}};
  if (params.seed) options["seed"] = *params.seed;
  if (params.max_output_tokens) options["num_predict"] = *params.max_output_tokens;
  json body = {{"model", model}, {"prompt", prompt}, {"stream", false}, {"options", options}};
  return body.dump();
}

namespace {

struct ParsedCompletion {
  std::string text;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
};

ParsedCompletion parse_completion(ProviderKind kind, const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kProviderError, "provider returned non-JSON body");
  }
  ParsedCompletion out;
  auto count = [](const json& obj, const char* key) -> std::optional<std::int64_t> {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) return std::nullopt;
    return it->get<std::int64_t>();
  };
  if (kind == ProviderKind::kHostedApi) {
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
      throw Error(ErrorCode::kProviderError, "completion without choices");
    }
    const auto& message = (*choices)[0].value("message", json::object());
    out.text = message.value("content", std::string());
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      out.input_tokens = count(*usage, "prompt_tokens");
      out.output_tokens = count(*usage, "completion_tokens");
    }
  } else {
    out.text = j.value("response", std::string());
    out.input_tokens = count(j, "prompt_eval_count");
    out.output_tokens = count(j, "eval_count");
  }
  return out;
}

std::string snippet(const std::string& body) {
  return body.size() > 200 ? body.substr(0, 200) + "..." : body;
}

}  // namespace

class Gateway::InFlightSlot {
 public:
  explicit InFlightSlot(Gateway& g) : g_(g) {
    std::unique_lock lock(g_.slots_mu_);
    g_.slots_cv_.wait(lock, [&] { return g_.in_flight_ < g_.max_in_flight_; });
    ++g_.in_flight_;
  }
  ~InFlightSlot() {
    {
      std::lock_guard lock(g_.slots_mu_);
      --g_.in_flight_;
    }
    g_.slots_cv_.notify_one();
  }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  Gateway& g_;
};

Gateway::Gateway(Clock& clock, TransportFactory transports, std::size_t max_in_flight)
    : clock_(clock),
      transports_(std::move(transports)),
      max_in_flight_(max_in_flight == 0 ? 1 : max_in_flight) {}

Gateway::~Gateway() = default;

void Gateway::configure(Endpoint& ep, EndpointConfig config) {
  if (config.rate_limit) config.rate_limit->validate();
  ep.transport = transports_(config.base_url, config.timeout);
  ep.limiter = config.rate_limit ? std::make_unique<TokenRateLimiter>(
                                       config.rate_limit->tokens_per_minute, clock_)
                                 : nullptr;
  ep.config = std::move(config);
}

void Gateway::set_hosted_endpoint(EndpointConfig config) { configure(hosted_, std::move(config)); }

void Gateway::set_local_endpoint(EndpointConfig config) { configure(local_, std::move(config)); }

void Gateway::add_embedding_provider(EmbeddingProviderConfig config) {
  if (config.dim <= 0) {
    throw Error(ErrorCode::kInvalidConfig, config.provider_id + ": dim must be positive");
  }
  auto p = std::make_unique<EmbeddingProvider>();
  p->transport = transports_(config.base_url, config.timeout);
  p->config = config;
  embedders_[config.provider_id] = std::move(p);
}

bool Gateway::has_embedding_provider(const std::string& provider_id) const {
  return embedders_.count(provider_id) > 0;
}

Gateway::Endpoint& Gateway::endpoint_for(const ModelSpec& spec) {
  Endpoint& ep = spec.provider == ProviderKind::kHostedApi ? hosted_ : local_;
  if (!ep.transport) {
    throw Error(ErrorCode::kUnknownProvider,
                "no " + to_string(spec.provider) + " endpoint configured for '" +
                    spec.model_id + "'");
  }
  return ep;
}

HttpResponse Gateway::send(Endpoint& ep, const std::string& path, const std::string& body) {
  HttpHeaders headers{{"Content-Type", "application/json"}};
  if (ep.config.api_key_env) {
    if (const char* key = std::getenv(ep.config.api_key_env->c_str())) {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  std::lock_guard lock(ep.transport_mu);
  return ep.transport->post(path, body, headers);
}

AcquisitionStatus Gateway::pull_model(const std::string& model_id) {
  const ModelSpec& spec = registry_.get(model_id);
  if (spec.provider != ProviderKind::kLocalRunner) {
    throw Error(ErrorCode::kUnknownLocalModel,
                "'" + model_id + "' is not served by the local runner");
  }
  Endpoint& ep = endpoint_for(spec);
  HttpResponse res;
  try {
    res = send(ep, "/api/pull", json{{"name", spec.wire_name()}, {"stream", false}}.dump());
  } catch (const Error& e) {
    throw Error(ErrorCode::kRunnerUnreachable, e.what());
  }
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorCode::kPullFailed,
                "'" + model_id + "': runner answered " + std::to_string(res.status) + " " +
                    snippet(res.body));
  }
  json j = json::parse(res.body, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("error")) {
    throw Error(ErrorCode::kPullFailed, "'" + model_id + "': " + j["error"].dump());
  }
  std::string status = j.is_object() ? j.value("status", std::string()) : std::string();
  AcquisitionStatus out =
      status == "success" ? AcquisitionStatus::kReady : AcquisitionStatus::kPending;
  std::lock_guard lock(state_mu_);
  pulled_[model_id] = out == AcquisitionStatus::kReady;
  return out;
}

bool Gateway::is_pulled(const std::string& model_id) const {
  std::lock_guard lock(state_mu_);
  auto it = pulled_.find(model_id);
  return it != pulled_.end() && it->second;
}

GenerationRecord Gateway::generate(const std::string& model_id, const std::string& prompt_text,
                                   const GenerationParams& params) {
  params.validate();
  const ModelSpec& spec = registry_.get(model_id);
  if (spec.provider == ProviderKind::kLocalRunner && !is_pulled(model_id)) {
    throw Error(ErrorCode::kUnknownLocalModel, "'" + model_id + "' has not been pulled");
  }
  Endpoint& ep = endpoint_for(spec);
  InFlightSlot slot(*this);

  const bool hosted = spec.provider == ProviderKind::kHostedApi;
  const RateLimitPolicy policy = ep.config.rate_limit.value_or(RateLimitPolicy{});
  // A limited endpoint always gets an explicit output cap, otherwise the
  // reservation would not bound what the provider may spend.
  GenerationParams wire = params;
  if (ep.limiter && !wire.max_output_tokens) {
    wire.max_output_tokens = static_cast<int>(policy.output_reservation);
  }
  const std::string path = hosted ? "/v1/chat/completions" : "/api/generate";
  const std::string body = hosted ? hosted_request_body(spec.wire_name(), prompt_text, wire)
                                  : local_request_body(spec.wire_name(), prompt_text, wire);
  const std::int64_t input_estimate = estimate_tokens(prompt_text);
  const std::int64_t reservation =
      input_estimate + wire.max_output_tokens.value_or(policy.output_reservation);

  GenerationRecord rec;
  rec.model_id = model_id;
  rec.prompt_text = prompt_text;
  {
    std::lock_guard lock(state_mu_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      mix64(fnv1a(model_id) ^ static_cast<std::uint64_t>(next_record_++))));
    rec.record_id = std::string("gen-") + buf;
  }

  // Queueing for the first admission is not part of the request; waits
  // after a rejection are.
  std::optional<std::uint64_t> ticket;
  if (ep.limiter) ticket = ep.limiter->acquire(reservation);
  rec.started_at = clock_.now();
  const Duration start = clock_.monotonic();

  ParsedCompletion parsed;
  for (bool first = true;; first = false) {
    if (ep.limiter && !first) ticket = ep.limiter->acquire(reservation);
    if (clock_.monotonic() - start > ep.config.timeout) {
      if (ticket) ep.limiter->reconcile(*ticket, 0);
      throw Error(ErrorCode::kTimeout, "'" + model_id + "' exceeded its deadline");
    }
    HttpResponse res;
    try {
      res = send(ep, path, body);
    } catch (...) {
      if (ticket) ep.limiter->reconcile(*ticket, input_estimate);
      throw;
    }
    if (res.status == 429) {
      if (ticket) ep.limiter->reconcile(*ticket, input_estimate);
      if (rec.retries >= policy.max_retries) {
        throw Error(ErrorCode::kRateLimitExhausted,
                    "'" + model_id + "' rejected after " + std::to_string(rec.retries) +
                        " retries");
      }
      ++rec.retries;
      clock_.sleep_for(std::chrono::duration_cast<Duration>(
          std::chrono::duration<double>(policy.retry_wait_s)));
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      if (ticket) ep.limiter->reconcile(*ticket, input_estimate);
      throw Error(ErrorCode::kProviderError, "'" + model_id + "': HTTP " +
                                                 std::to_string(res.status) + " " +
                                                 snippet(res.body));
    }
    parsed = parse_completion(spec.provider, res.body);
    if (ticket) {
      ep.limiter->reconcile(*ticket, parsed.input_tokens.value_or(input_estimate) +
                                         parsed.output_tokens.value_or(
                                             estimate_tokens(parsed.text)));
    }
    break;
  }
  const Duration elapsed = clock_.monotonic() - start;
  if (elapsed > ep.config.timeout) {
    throw Error(ErrorCode::kTimeout, "'" + model_id + "' exceeded its deadline");
  }
  if (parsed.text.empty()) {
    throw Error(ErrorCode::kProviderError, "'" + model_id + "' returned an empty response");
  }
  rec.response_text = std::move(parsed.text);
  rec.tokens_estimated = !parsed.input_tokens || !parsed.output_tokens;
  rec.input_tokens = parsed.input_tokens.value_or(input_estimate);
  rec.output_tokens = parsed.output_tokens.value_or(estimate_tokens(rec.response_text));
  if (rec.output_tokens <= 0) rec.output_tokens = estimate_tokens(rec.response_text);
  // Round up so that a completed exchange never reports zero latency.
  rec.latency_ms = std::max<std::int64_t>(1, (elapsed.count() + 999) / 1000);
  return rec;
}

EmbeddingVector Gateway::embed(const std::string& provider_id, const std::string& text) {
  auto it = embedders_.find(provider_id);
  if (it == embedders_.end()) {
    throw Error(ErrorCode::kUnknownProvider, "no embedding provider '" + provider_id + "'");
  }
  EmbeddingProvider& p = *it->second;
  const int dim = p.config.dim;
  {
    std::lock_guard lock(p.cache_mu);
    if (auto hit = p.cache.find(text); hit != p.cache.end()) {
      return EmbeddingVector{hit->second, provider_id, dim};
    }
  }
  HttpResponse res;
  {
    std::lock_guard lock(p.transport_mu);
    res = p.transport->post("/embed", json{{"texts", json::array({text})}}.dump(),
                            {{"Content-Type", "application/json"}});
  }
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorCode::kProviderError, provider_id + ": HTTP " +
                                               std::to_string(res.status) + " " +
                                               snippet(res.body));
  }
  json j = json::parse(res.body, nullptr, false);
  if (j.is_discarded() || !j.contains("vectors") || !j["vectors"].is_array() ||
      j["vectors"].empty()) {
    throw Error(ErrorCode::kProviderError, provider_id + ": malformed embedding response");
  }
  std::vector<double> values;
  try {
    values = j["vectors"][0].get<std::vector<double>>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kProviderError, provider_id + ": non-numeric embedding");
  }
  if (static_cast<int>(values.size()) != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                provider_id + ": expected " + std::to_string(dim) + " dims, got " +
                    std::to_string(values.size()));
  }
  bool all_zero = true;
  for (double v : values) all_zero = all_zero && v == 0.0;
  if (all_zero) throw Error(ErrorCode::kZeroVector, provider_id + ": all-zero embedding");
  std::lock_guard lock(p.cache_mu);
  auto [pos, _] = p.cache.emplace(text, std::move(values));
  return EmbeddingVector{pos->second, provider_id, dim};
}

}  // namespace slam
