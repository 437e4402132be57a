#pragma once

#include <map>
#include <string>
#include <vector>

#include "slam/config.h"
#include "slam/gateway.h"
#include "slam/store.h"

namespace slam {

// Placeholders are bracketed names, e.g. "[LIST OF TASKS PLANNED]".
std::vector<std::string> placeholders_of(const std::string& tmpl);

// Single-pass substitution: bracket tokens inside substituted values are
// left alone. Throws kMissingPlaceholder listing every unresolved name.
std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& values);

struct ModelRun {
  std::string model_id;
  std::vector<GenerationRecord> records;

  bool operator==(const ModelRun&) const = default;
};

struct ExperimentResult {
  std::string experiment_id;
  // Plan order.
  std::vector<ModelRun> models;

  const ModelRun& for_model(const std::string& model_id) const;
  bool operator==(const ExperimentResult&) const = default;
};

struct LongitudinalResult {
  std::string experiment_id;
  std::vector<ModelRun> models;
  std::vector<UtcTime> ticks;

  bool operator==(const LongitudinalResult&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentResult& r);

class Runner {
 public:
  // `store` may be null for dry runs.
  Runner(Gateway& gateway, Store* store, std::size_t max_parallel_models = 1);

  int warmup_for(const ExperimentPlan& plan, const std::string& model_id) const;

  ExperimentResult run_experiment(const ExperimentPlan& plan);
  LongitudinalResult run_longitudinal(const ExperimentPlan& plan,
                                      const SamplingSchedule& schedule);

 private:
  std::vector<GenerationRecord> sample(const ExperimentPlan& plan, const std::string& model_id,
                                       const std::string& prompt, int count,
                                       std::optional<int> hour);
  std::vector<ModelRun> for_each_model(
      const ExperimentPlan& plan, const std::string& prompt, int count,
      std::optional<int> hour);

  Gateway& gateway_;
  Store* store_;
  std::size_t max_parallel_models_;
};

}  // namespace slam
