#include "slam/config.h"

#include <set>

#include "slam/error.h"

namespace slam {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ", ") + p;
  return out;
}

// Collects field problems so one error can list all of them.
class FieldChecker {
 public:
  explicit FieldChecker(const json& j) : j_(j) {}

  template <typename T>
  std::optional<T> get(const std::string& key, bool required) {
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) {
      if (required) problems_.push_back(key + " (missing)");
      return std::nullopt;
    }
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      problems_.push_back(key + " (wrong type)");
      return std::nullopt;
    }
  }

  void problem(std::string p) { problems_.push_back(std::move(p)); }

  void finish(const std::string& what) const {
    if (!problems_.empty()) {
      throw Error(ErrorCode::kInvalidConfig, what + ": invalid fields: " + join(problems_));
    }
  }

 private:
  const json& j_;
  std::vector<std::string> problems_;
};

Money money_field(const json& v) {
  if (v.is_string()) return Money::parse(v.get<std::string>());
  return Money::from_dollars(v.get<double>());
}

RateLimitPolicy parse_rate_limit(const json& j) {
  RateLimitPolicy p;
  p.tokens_per_minute = j.value("tokens_per_minute", p.tokens_per_minute);
  p.retry_wait_s = j.value("retry_wait_s", p.retry_wait_s);
  p.max_retries = j.value("max_retries", p.max_retries);
  p.output_reservation = j.value("output_reservation", p.output_reservation);
  p.validate();
  return p;
}

EndpointConfig parse_endpoint(const json& j, bool hosted) {
  EndpointConfig e;
  e.base_url = j.value("base_url", std::string());
  if (auto it = j.find("api_key_env"); it != j.end() && it->is_string()) {
    e.api_key_env = it->get<std::string>();
  }
  e.timeout = std::chrono::duration_cast<Duration>(
      std::chrono::duration<double>(j.value("timeout_s", 300.0)));
  if (auto it = j.find("rate_limit"); it != j.end()) {
    if (!it->is_null()) e.rate_limit = parse_rate_limit(*it);
  } else if (hosted) {
    e.rate_limit = RateLimitPolicy{};
  }
  return e;
}

}  // namespace

void SamplingSchedule::validate() const {
  if (hours < 1) throw Error(ErrorCode::kInvalidConfig, "schedule.hours must be >= 1");
  if (per_hour < 1) throw Error(ErrorCode::kInvalidConfig, "schedule.per_hour must be >= 1");
}

void to_json(json& j, const SamplingSchedule& s) {
  j = json{{"hours", s.hours}, {"per_hour", s.per_hour}, {"aligned_to_hour", s.aligned_to_hour}};
}

void from_json(const json& j, SamplingSchedule& s) {
  s.hours = j.value("hours", 24);
  s.per_hour = j.value("per_hour", 10);
  s.aligned_to_hour = j.value("aligned_to_hour", false);
}

void ExperimentPlan::validate() const {
  std::vector<std::string> problems;
  if (experiment_id.empty()) problems.push_back("experiment_id (empty)");
  for (char c : experiment_id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      problems.push_back("experiment_id (only [A-Za-z0-9._-] allowed)");
      break;
    }
  }
  if (experiment_id == "." || experiment_id == "..") problems.push_back("experiment_id (reserved)");
  if (prompt_template.empty()) problems.push_back("prompt_template (empty)");
  if (model_ids.empty()) problems.push_back("models (empty)");
  std::set<std::string> seen;
  for (const auto& m : model_ids) {
    if (!seen.insert(m).second) problems.push_back("models (duplicate '" + m + "')");
  }
  if (repetitions < 1) problems.push_back("repetitions (must be >= 1)");
  if (warmup_requests && *warmup_requests < 0) problems.push_back("warmup_requests (< 0)");
  if (!(cost.utilization > 0 && cost.utilization <= 1)) {
    problems.push_back("cost.utilization (must be in (0, 1])");
  }
  try {
    params.validate();
  } catch (const Error& e) {
    problems.push_back(std::string("params (") + e.what() + ")");
  }
  if (schedule && (schedule->hours < 1 || schedule->per_hour < 1)) {
    problems.push_back("schedule (hours and per_hour must be >= 1)");
  }
  if (reference_model && !seen.count(*reference_model)) {
    problems.push_back("reference_model (not among models)");
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "experiment config: invalid fields: " + join(problems));
  }
}

void to_json(json& j, const ExperimentPlan& p) {
  j = json{{"experiment_id", p.experiment_id},
           {"prompt_template", p.prompt_template},
           {"placeholder_values", p.placeholder_values},
           {"models", p.model_ids},
           {"repetitions", p.repetitions},
           {"params", p.params}};
  if (p.warmup_requests) j["warmup_requests"] = *p.warmup_requests;
  if (p.schedule) j["schedule"] = *p.schedule;
  if (p.reference_model) j["reference_model"] = *p.reference_model;
  json cost = {{"input_per_1k", p.cost.pricing.input_per_1k.to_string()},
               {"output_per_1k", p.cost.pricing.output_per_1k.to_string()},
               {"hourly_price", p.cost.hourly_price.to_string()},
               {"utilization", p.cost.utilization},
               {"request_input_tokens", p.cost.request_input_tokens},
               {"request_output_tokens", p.cost.request_output_tokens}};
  if (!p.cost.hourly_price_by_model.empty()) {
    json by_model = json::object();
    for (const auto& [m, price] : p.cost.hourly_price_by_model) by_model[m] = price.to_string();
    cost["hourly_price_by_model"] = by_model;
  }
  j["cost"] = cost;
}

ExperimentPlan parse_experiment_plan(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "experiment config must be an object");
  FieldChecker f(j);
  ExperimentPlan p;
  p.experiment_id = f.get<std::string>("experiment_id", true).value_or("");
  p.prompt_template = f.get<std::string>("prompt_template", true).value_or("");
  p.placeholder_values =
      f.get<std::map<std::string, std::string>>("placeholder_values", false).value_or(
          std::map<std::string, std::string>{});
  p.model_ids = f.get<std::vector<std::string>>("models", true).value_or(
      std::vector<std::string>{});
  p.repetitions = f.get<int>("repetitions", false).value_or(10);
  if (j.contains("params")) {
    try {
      p.params = j["params"].get<GenerationParams>();
    } catch (const json::exception&) {
      f.problem("params (wrong type)");
    }
  }
  p.warmup_requests = f.get<int>("warmup_requests", false);
  if (j.contains("schedule") && !j["schedule"].is_null()) {
    try {
      p.schedule = j["schedule"].get<SamplingSchedule>();
    } catch (const json::exception&) {
      f.problem("schedule (wrong type)");
    }
  }
  p.reference_model = f.get<std::string>("reference_model", false);
  if (j.contains("cost") && j["cost"].is_object()) {
    const json& c = j["cost"];
    try {
      if (c.contains("input_per_1k")) p.cost.pricing.input_per_1k = money_field(c["input_per_1k"]);
      if (c.contains("output_per_1k")) {
        p.cost.pricing.output_per_1k = money_field(c["output_per_1k"]);
      }
      if (c.contains("hourly_price")) p.cost.hourly_price = money_field(c["hourly_price"]);
      if (c.contains("hourly_price_by_model")) {
        for (const auto& [m, v] : c["hourly_price_by_model"].items()) {
          p.cost.hourly_price_by_model[m] = money_field(v);
        }
      }
      p.cost.utilization = c.value("utilization", p.cost.utilization);
      p.cost.request_input_tokens = c.value("request_input_tokens", p.cost.request_input_tokens);
      p.cost.request_output_tokens =
          c.value("request_output_tokens", p.cost.request_output_tokens);
    } catch (const std::exception&) {
      f.problem("cost (wrong type)");
    }
  }
  f.finish("experiment config");
  p.validate();
  return p;
}

ProvidersConfig parse_providers_config(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "providers file must be an object");
  ProvidersConfig c;
  try {
    if (j.contains("hosted_api")) c.hosted_api = parse_endpoint(j["hosted_api"], true);
    if (j.contains("local_runner")) c.local_runner = parse_endpoint(j["local_runner"], false);
    for (const auto& e : j.value("embedding", json::array())) {
      EmbeddingProviderConfig ep;
      ep.provider_id = e.at("id").get<std::string>();
      ep.base_url = e.value("base_url", std::string());
      ep.dim = e.at("dim").get<int>();
      ep.timeout = std::chrono::duration_cast<Duration>(
          std::chrono::duration<double>(e.value("timeout_s", 60.0)));
      c.embedding.push_back(ep);
    }
    for (const auto& m : j.value("models", json::array())) {
      ModelSpec spec = m.get<ModelSpec>();
      spec.validate();
      c.models.push_back(spec);
    }
    if (j.contains("simulate") && !j["simulate"].is_null()) {
      c.simulate = j["simulate"].get<SimulatorConfig>();
    }
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("providers file: ") + e.what());
  }
  return c;
}

}  // namespace slam
