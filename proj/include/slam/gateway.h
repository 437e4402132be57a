#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slam/clock.h"
#include "slam/http_transport.h"
#include "slam/rate_limiter.h"
#include "slam/records.h"

namespace slam {

struct EndpointConfig {
  std::string base_url;
  // Environment variable holding a bearer credential, if any.
  std::optional<std::string> api_key_env;
  Duration timeout = std::chrono::seconds(300);
  std::optional<RateLimitPolicy> rate_limit;
};

struct EmbeddingProviderConfig {
  std::string provider_id;
  std::string base_url;
  int dim = 0;
  Duration timeout = std::chrono::seconds(60);
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_id;
  int dim = 0;

  bool operator==(const EmbeddingVector&) const = default;
};

enum class AcquisitionStatus { kPending, kReady, kFailed };

std::string to_string(AcquisitionStatus s);

class ModelRegistry {
 public:
  // Idempotent for an identical spec; kDuplicateModel otherwise.
  std::string register_model(const ModelSpec& spec);
  const ModelSpec& get(const std::string& model_id) const;
  bool contains(const std::string& model_id) const;
  std::vector<ModelSpec> all() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ModelSpec> models_;
};

// Whitespace word count * 4/3, rounded up. Used when a provider response
// carries no token usage.
std::int64_t estimate_tokens(std::string_view text);

// Wire bodies, exposed so they can be checked byte-for-byte.
std::string hosted_request_body(const std::string& model, const std::string& prompt,
                                const GenerationParams& params);
std::string local_request_body(const std::string& model, const std::string& prompt,
                               const GenerationParams& params);

class Gateway {
 public:
  Gateway(Clock& clock, TransportFactory transports, std::size_t max_in_flight = 8);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void set_hosted_endpoint(EndpointConfig config);
  void set_local_endpoint(EndpointConfig config);
  void add_embedding_provider(EmbeddingProviderConfig config);

  std::string register_model(const ModelSpec& spec) { return registry_.register_model(spec); }
  const ModelRegistry& registry() const { return registry_; }

  AcquisitionStatus pull_model(const std::string& model_id);
  bool is_pulled(const std::string& model_id) const;

  // Throws on failure; the runner turns failures into error-tagged records.
  GenerationRecord generate(const std::string& model_id, const std::string& prompt_text,
                            const GenerationParams& params);

  EmbeddingVector embed(const std::string& provider_id, const std::string& text);
  bool has_embedding_provider(const std::string& provider_id) const;

  // Present only when the hosted endpoint is rate limited.
  const TokenRateLimiter* hosted_limiter() const { return hosted_.limiter.get(); }

  Clock& clock() { return clock_; }

 private:
  struct Endpoint {
    EndpointConfig config;
    std::unique_ptr<HttpTransport> transport;
    std::unique_ptr<TokenRateLimiter> limiter;
    std::mutex transport_mu;
  };
  struct EmbeddingProvider {
    EmbeddingProviderConfig config;
    std::unique_ptr<HttpTransport> transport;
    std::mutex transport_mu;
    std::mutex cache_mu;
    std::map<std::string, std::vector<double>> cache;
  };

  void configure(Endpoint& ep, EndpointConfig config);
  Endpoint& endpoint_for(const ModelSpec& spec);
  HttpResponse send(Endpoint& ep, const std::string& path, const std::string& body);

  class InFlightSlot;

  Clock& clock_;
  TransportFactory transports_;
  ModelRegistry registry_;
  Endpoint hosted_;
  Endpoint local_;
  std::map<std::string, std::unique_ptr<EmbeddingProvider>> embedders_;

  mutable std::mutex state_mu_;
  std::map<std::string, bool> pulled_;
  std::uint64_t next_record_ = 1;

  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  std::size_t max_in_flight_;
  std::size_t in_flight_ = 0;
};

}  // namespace slam
