#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/gateway.h"
#include "slam/money.h"
#include "slam/records.h"
#include "slam/simulator.h"

namespace slam {

struct SamplingSchedule {
  int hours = 24;
  int per_hour = 10;
  bool aligned_to_hour = false;

  void validate() const;
  bool operator==(const SamplingSchedule&) const = default;
};

struct PricingConfig {
  Money input_per_1k = Money::parse("0.03");
  Money output_per_1k = Money::parse("0.06");

  bool operator==(const PricingConfig&) const = default;
};

// Inputs to the self-hosting cost model.
struct CostAssumptions {
  PricingConfig pricing;
  // On-demand price of the inference host, per hour.
  Money hourly_price = Money::parse("0.752");
  std::map<std::string, Money> hourly_price_by_model;
  double utilization = 0.8;
  // Request shape used to compare per-request cost against the hosted API.
  std::int64_t request_input_tokens = 1000;
  std::int64_t request_output_tokens = 1000;

  bool operator==(const CostAssumptions&) const = default;
};

struct ExperimentPlan {
  std::string experiment_id;
  std::string prompt_template;
  std::map<std::string, std::string> placeholder_values;
  std::vector<std::string> model_ids;
  int repetitions = 10;
  GenerationParams params;
  // Absent: 10 for local-runner models, 0 for hosted ones.
  std::optional<int> warmup_requests;
  std::optional<SamplingSchedule> schedule;
  // Model whose responses serve as the comparison reference. Absent: the
  // first hosted model in model_ids.
  std::optional<std::string> reference_model;
  CostAssumptions cost;

  // Throws kInvalidConfig naming every offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const SamplingSchedule& s);
void from_json(const nlohmann::json& j, SamplingSchedule& s);
void to_json(nlohmann::json& j, const ExperimentPlan& p);
// Strict: missing or mistyped fields raise kInvalidConfig listing them.
ExperimentPlan parse_experiment_plan(const nlohmann::json& j);

// Providers file: endpoints, embedding providers, model registry, and an
// optional "simulate" block that serves everything from ProviderSimulator.
struct ProvidersConfig {
  std::optional<EndpointConfig> hosted_api;
  std::optional<EndpointConfig> local_runner;
  std::vector<EmbeddingProviderConfig> embedding;
  std::vector<ModelSpec> models;
  std::optional<SimulatorConfig> simulate;
  std::size_t max_in_flight = 8;
};

ProvidersConfig parse_providers_config(const nlohmann::json& j);

}  // namespace slam
