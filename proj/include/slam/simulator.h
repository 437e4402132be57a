#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include <json.hpp>

#include "slam/clock.h"
#include "slam/http_transport.h"

namespace slam {

struct SimulatorConfig {
  std::uint64_t seed = 0;
  double base_latency_ms = 250;
  double ms_per_output_token = 25;
  double ms_per_input_token = 0.2;
  int min_words = 40;
  int max_words = 90;
  int embedding_dim = 64;
  // Pulling one of these answers 404, like a runner without the manifest.
  std::set<std::string> missing_models;
  // Generation for these answers HTTP 500.
  std::set<std::string> failing_models;
  // Per-model share of words drawn from the prompt's canonical answer, in
  // [0,1]. Models not listed get a seed-derived share.
  std::map<std::string, double> fidelity;
  // Per-model multiplier on ms_per_output_token; default 1.
  std::map<std::string, double> slowdown;
};

void from_json(const nlohmann::json& j, SimulatorConfig& c);

// Deterministic stand-in for every provider wire format: chat completions,
// runner generate/pull, and /embed. Simulated latency is spent on the
// injected clock, so a ManualClock yields reproducible telemetry. Judge
// prompts are recognised and answered in the format the judge templates
// request.
class ProviderSimulator {
 public:
  ProviderSimulator(SimulatorConfig config, Clock& clock);

  HttpResponse handle(const std::string& path, const std::string& body);

  // Factory serving every base URL from this simulator.
  TransportFactory transport_factory();

  std::uint64_t calls(const std::string& model) const;

 private:
  HttpResponse chat(const nlohmann::json& req);
  HttpResponse generate(const nlohmann::json& req);
  HttpResponse pull(const nlohmann::json& req);
  HttpResponse embed(const nlohmann::json& req);

  // Returns {text, input_tokens, output_tokens} and spends simulated time.
  struct Completion {
    std::string text;
    std::int64_t input_tokens;
    std::int64_t output_tokens;
  };
  Completion complete(const std::string& model, const std::string& prompt,
                      std::optional<int> max_tokens);
  std::string answer_judge(const std::string& prompt, std::uint64_t h) const;
  double fidelity_of(const std::string& model) const;
  double speed_of(const std::string& model) const;

  SimulatorConfig config_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> calls_;
};

}  // namespace slam
