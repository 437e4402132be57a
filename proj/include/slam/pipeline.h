#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/clock.h"
#include "slam/config.h"
#include "slam/gateway.h"
#include "slam/judge.h"
#include "slam/records.h"
#include "slam/simulator.h"
#include "slam/store.h"

namespace slam {

// Start of simulated time for stub-provider runs.
UtcTime simulated_epoch();

// Clock, optional simulator and gateway built from a providers file. With a
// "simulate" block everything is served in-process on a ManualClock.
struct Environment {
  ProvidersConfig providers;
  std::unique_ptr<Clock> clock;
  std::unique_ptr<ProviderSimulator> simulator;
  std::unique_ptr<Gateway> gateway;
};

Environment make_environment(const ProvidersConfig& providers,
                             std::optional<std::uint64_t> seed = std::nullopt);

// Pulls every local-runner model among `model_ids`; returns the ones that
// did not become ready, each with its error text.
std::vector<std::pair<std::string, std::string>> pull_local_models(
    Gateway& gateway, const std::vector<std::string>& model_ids);

// Model specs and the resolved reference model, saved next to the records so
// later commands do not depend on the providers file.
struct ExperimentModels {
  std::vector<ModelSpec> specs;
  std::optional<std::string> reference_model;

  const ModelSpec* find(const std::string& model_id) const;
};

void save_experiment_models(Store& store, const std::string& experiment_id,
                            const ExperimentModels& models);
std::optional<ExperimentModels> load_experiment_models(const Store& store,
                                                       const std::string& experiment_id);

// Explicit plan value, else the first hosted model in plan order.
std::optional<std::string> resolve_reference_model(const ExperimentPlan& plan,
                                                   const std::vector<ModelSpec>& specs);

// The reference text for comparisons: the reference model's first
// successful repetition. Throws kNoRecords naming the model.
GenerationRecord reference_record(const std::string& reference_model,
                                  const std::vector<GenerationRecord>& records);

struct ExecutionSummary {
  std::size_t records = 0;
  std::size_t failed_records = 0;
  // Local models that could not be pulled, with the reason.
  std::vector<std::pair<std::string, std::string>> pull_failures;
  std::filesystem::path report_path;
};

// Pull, run (longitudinally when the plan has a schedule), record the model
// specs and snapshot a report. The experiment must already exist in the
// store. kAllModelsFailed when no model produced a response.
ExecutionSummary execute_experiment(Store& store, Gateway& gateway, const ExperimentPlan& plan);

struct JudgeRunOptions {
  JudgeMethod method = JudgeMethod::kScorer;
  std::string judge_model_id;
};

struct JudgeRunSummary {
  std::size_t attempted = 0;
  std::size_t recorded = 0;
  // Already judged by this judge in an earlier run.
  std::size_t skipped = 0;
  std::size_t parse_failures = 0;

  double parse_failure_rate() const;
};

// Judges every successful record (scorer), every non-reference record
// against the reference (comparers), or one round per repetition index
// across models (selector). Unparseable verdicts are counted, not stored.
JudgeRunSummary run_judge(Store& store, Judge& judge, const std::string& experiment_id,
                          const JudgeRunOptions& options);

struct SimilarityRunOptions {
  std::vector<SimilarityMetric> metrics;
  // Required by embed_cosine and sem_bleu.
  std::optional<std::string> provider_id;
};

struct SimilarityRunSummary {
  std::size_t recorded = 0;
  std::size_t skipped = 0;
};

// Scores every successful non-reference record against the reference
// record. TF-IDF uses all successful responses of the experiment as corpus.
SimilarityRunSummary run_similarity(Store& store, Gateway* gateway,
                                    const std::string& experiment_id,
                                    const SimilarityRunOptions& options);

struct ReportOptions {
  std::size_t k = 10;
  // When false, k shrinks to the number of comparable models instead of
  // raising kKTooLarge.
  bool strict_k = true;
};

// Rankings from every available score source, bottom-k agreement of each
// automated source with the human ranking, latency and cost sections.
nlohmann::json build_report(Store& store, const std::string& experiment_id,
                            const ReportOptions& options = {});

// Source keys in a report's rankings other than "human".
std::vector<std::string> automated_sources(const nlohmann::json& report);

}  // namespace slam
