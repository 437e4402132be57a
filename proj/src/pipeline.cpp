#include "slam/pipeline.h"

#include <algorithm>
#include <map>
#include <set>

#include "slam/error.h"
#include "slam/human_eval.h"
#include "slam/runner.h"
#include "slam/similarity.h"

namespace slam {

using nlohmann::json;

UtcTime simulated_epoch() { return parse_rfc3339("2023-11-13T00:00:00Z"); }

Environment make_environment(const ProvidersConfig& providers,
                             std::optional<std::uint64_t> seed) {
  Environment env;
  env.providers = providers;
  TransportFactory transports = make_http_transport;
  if (providers.simulate) {
    SimulatorConfig sim = *providers.simulate;
    if (seed) sim.seed = *seed;
    env.clock = std::make_unique<ManualClock>(simulated_epoch());
    env.simulator = std::make_unique<ProviderSimulator>(sim, *env.clock);
    transports = env.simulator->transport_factory();
  } else {
    env.clock = std::make_unique<SystemClock>();
  }
  env.gateway = std::make_unique<Gateway>(*env.clock, transports, providers.max_in_flight);
  if (providers.hosted_api) env.gateway->set_hosted_endpoint(*providers.hosted_api);
  if (providers.local_runner) env.gateway->set_local_endpoint(*providers.local_runner);
  for (const auto& e : providers.embedding) env.gateway->add_embedding_provider(e);
  for (const auto& m : providers.models) env.gateway->register_model(m);
  return env;
}

std::vector<std::pair<std::string, std::string>> pull_local_models(
    Gateway& gateway, const std::vector<std::string>& model_ids) {
  std::vector<std::pair<std::string, std::string>> failed;
  for (const auto& id : model_ids) {
    if (!gateway.registry().contains(id)) continue;
    if (gateway.registry().get(id).provider != ProviderKind::kLocalRunner) continue;
    try {
      auto status = gateway.pull_model(id);
      if (status != AcquisitionStatus::kReady) {
        failed.emplace_back(id, "pull status " + to_string(status));
      }
    } catch (const Error& e) {
      failed.emplace_back(id, e.what());
    }
  }
  return failed;
}

const ModelSpec* ExperimentModels::find(const std::string& model_id) const {
  for (const auto& s : specs) {
    if (s.model_id == model_id) return &s;
  }
  return nullptr;
}

namespace {

std::filesystem::path models_path(const Store& store, const std::string& experiment_id) {
  return store.experiment_dir(experiment_id) / "models.json";
}

}  // namespace

void save_experiment_models(Store& store, const std::string& experiment_id,
                            const ExperimentModels& models) {
  json j{{"models", models.specs}};
  j["reference_model"] = models.reference_model ? json(*models.reference_model) : json(nullptr);
  store.write_document(models_path(store, experiment_id), j.dump(2) + "\n");
}

std::optional<ExperimentModels> load_experiment_models(const Store& store,
                                                       const std::string& experiment_id) {
  auto doc = store.read_document(models_path(store, experiment_id));
  if (!doc) return std::nullopt;
  json j = json::parse(*doc, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kStorageFailure, "corrupt models.json for '" + experiment_id + "'");
  }
  ExperimentModels out;
  out.specs = j.at("models").get<std::vector<ModelSpec>>();
  if (j.contains("reference_model") && j["reference_model"].is_string()) {
    out.reference_model = j["reference_model"].get<std::string>();
  }
  return out;
}

std::optional<std::string> resolve_reference_model(const ExperimentPlan& plan,
                                                   const std::vector<ModelSpec>& specs) {
  if (plan.reference_model) return plan.reference_model;
  for (const auto& id : plan.model_ids) {
    for (const auto& s : specs) {
      if (s.model_id == id && s.provider == ProviderKind::kHostedApi) return id;
    }
  }
  return std::nullopt;
}

GenerationRecord reference_record(const std::string& reference_model,
                                  const std::vector<GenerationRecord>& records) {
  try {
    return representative_records({reference_model}, records).front();
  } catch (const Error&) {
    throw Error(ErrorCode::kNoRecords,
                "reference model '" + reference_model + "' has no successful record");
  }
}

ExecutionSummary execute_experiment(Store& store, Gateway& gateway, const ExperimentPlan& plan) {
  ExecutionSummary summary;
  ExperimentModels models;
  for (const auto& id : plan.model_ids) {
    if (gateway.registry().contains(id)) models.specs.push_back(gateway.registry().get(id));
  }
  models.reference_model = resolve_reference_model(plan, models.specs);
  save_experiment_models(store, plan.experiment_id, models);
  summary.pull_failures = pull_local_models(gateway, plan.model_ids);

  Runner runner(gateway, &store);
  std::vector<ModelRun> runs;
  if (plan.schedule) {
    runs = runner.run_longitudinal(plan, *plan.schedule).models;
  } else {
    runs = runner.run_experiment(plan).models;
  }
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      ++summary.records;
      if (!r.ok()) ++summary.failed_records;
    }
  }
  ReportOptions lenient;
  lenient.strict_k = false;
  summary.report_path =
      store.snapshot_report(plan.experiment_id, build_report(store, plan.experiment_id, lenient));
  return summary;
}

double JudgeRunSummary::parse_failure_rate() const {
  return attempted == 0 ? 0.0
                        : static_cast<double>(parse_failures) / static_cast<double>(attempted);
}

namespace {

std::string require_reference(const Store& store, const std::string& experiment_id,
                              const ExperimentPlan& plan) {
  std::optional<std::string> ref = plan.reference_model;
  if (!ref) {
    if (auto models = load_experiment_models(store, experiment_id)) ref = models->reference_model;
  }
  if (!ref) {
    throw Error(ErrorCode::kInvalidArgument,
                "experiment '" + experiment_id + "' has no reference model");
  }
  return *ref;
}

// Successful records per model in plan order, each list by started_at.
std::vector<std::pair<std::string, std::vector<GenerationRecord>>> successful_by_model(
    const ExperimentPlan& plan, const std::vector<GenerationRecord>& records) {
  std::vector<std::pair<std::string, std::vector<GenerationRecord>>> out;
  for (const auto& id : plan.model_ids) {
    std::vector<GenerationRecord> ok;
    for (const auto& r : records) {
      if (r.model_id == id && r.ok()) ok.push_back(r);
    }
    std::stable_sort(ok.begin(), ok.end(), [](const auto& a, const auto& b) {
      return a.started_at < b.started_at;
    });
    if (!ok.empty()) out.emplace_back(id, std::move(ok));
  }
  return out;
}

}  // namespace

JudgeRunSummary run_judge(Store& store, Judge& judge, const std::string& experiment_id,
                          const JudgeRunOptions& options) {
  const ExperimentPlan plan = store.load_plan(experiment_id);
  const auto records = store.generations(experiment_id);
  const auto existing = store.verdicts(experiment_id);
  JudgeRunSummary summary;

  auto attempt = [&](auto&& call, auto&& fill) {
    ++summary.attempted;
    try {
      JudgeVerdict v = call();
      fill(v);
      store.append(experiment_id, v);
      ++summary.recorded;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseFailure) throw;
      ++summary.parse_failures;
    }
  };

  if (options.method == JudgeMethod::kSelector) {
    auto by_model = successful_by_model(plan, records);
    if (by_model.size() < 2) {
      throw Error(ErrorCode::kTooFewResponses,
                  "selector needs at least 2 models with responses, got " +
                      std::to_string(by_model.size()));
    }
    std::set<std::vector<std::string>> done;
    for (const auto& v : existing) {
      if (v.kind == VerdictKind::kChoice && v.judge_model_id == options.judge_model_id) {
        done.insert(v.candidate_record_ids);
      }
    }
    std::size_t rounds = 0;
    for (const auto& [_, list] : by_model) rounds = std::max(rounds, list.size());
    for (std::size_t round = 0; round < rounds; ++round) {
      std::vector<const GenerationRecord*> candidates;
      for (const auto& [_, list] : by_model) {
        if (round < list.size()) candidates.push_back(&list[round]);
      }
      if (candidates.size() < 2) continue;
      // Rotate so no model always sits in the first position.
      std::rotate(candidates.begin(),
                  candidates.begin() + static_cast<std::ptrdiff_t>(round % candidates.size()),
                  candidates.end());
      std::vector<std::string> ids, models, texts;
      for (const auto* c : candidates) {
        ids.push_back(c->record_id);
        models.push_back(c->model_id);
        texts.push_back(c->response_text);
      }
      if (done.count(ids)) {
        ++summary.skipped;
        continue;
      }
      const std::string& prompt = candidates.front()->prompt_text;
      attempt([&] { return judge.judge_select(options.judge_model_id, prompt, texts); },
              [&](JudgeVerdict& v) {
                v.candidate_record_ids = ids;
                v.candidate_model_ids = models;
                v.record_id = ids[static_cast<std::size_t>(*v.choice - 1)];
                v.model_id = models[static_cast<std::size_t>(*v.choice - 1)];
              });
    }
    return summary;
  }

  const VerdictKind kind = options.method == JudgeMethod::kScorer     ? VerdictKind::kScore
                           : options.method == JudgeMethod::kComparer ? VerdictKind::kCompare
                                                                      : VerdictKind::kCompareNoReason;
  std::set<std::string> done;
  for (const auto& v : existing) {
    if (v.kind == kind && v.judge_model_id == options.judge_model_id) done.insert(v.record_id);
  }

  std::optional<GenerationRecord> reference;
  if (kind != VerdictKind::kScore) {
    reference = reference_record(require_reference(store, experiment_id, plan), records);
  }
  for (const auto& [model, list] : successful_by_model(plan, records)) {
    if (reference && model == reference->model_id) continue;
    for (const auto& r : list) {
      if (done.count(r.record_id)) {
        ++summary.skipped;
        continue;
      }
      auto fill = [&](JudgeVerdict& v) {
        v.record_id = r.record_id;
        v.model_id = r.model_id;
      };
      if (kind == VerdictKind::kScore) {
        attempt([&] { return judge.judge_score(options.judge_model_id, r.prompt_text,
                                               r.response_text); },
                fill);
      } else {
        attempt([&] { return judge.judge_compare(options.judge_model_id,
                                                 reference->response_text, r.response_text,
                                                 kind == VerdictKind::kCompare); },
                fill);
      }
    }
  }
  return summary;
}

SimilarityRunSummary run_similarity(Store& store, Gateway* gateway,
                                    const std::string& experiment_id,
                                    const SimilarityRunOptions& options) {
  if (options.metrics.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no similarity metric selected");
  }
  bool needs_embeddings = false;
  for (auto m : options.metrics) {
    needs_embeddings |= m == SimilarityMetric::kEmbedCosine || m == SimilarityMetric::kSemBleu;
  }
  if (needs_embeddings) {
    if (!options.provider_id) {
      throw Error(ErrorCode::kInvalidArgument, "embedding metrics need an embedding provider");
    }
    if (!gateway || !gateway->has_embedding_provider(*options.provider_id)) {
      throw Error(ErrorCode::kUnknownProvider, "'" + *options.provider_id + "'");
    }
  }

  const ExperimentPlan plan = store.load_plan(experiment_id);
  const auto records = store.generations(experiment_id);
  const auto reference = reference_record(require_reference(store, experiment_id, plan), records);

  std::vector<std::string> corpus;
  for (const auto& r : records) {
    if (r.ok()) corpus.push_back(r.response_text);
  }
  std::optional<TfidfModel> tfidf;

  std::set<std::tuple<std::string, std::string, std::string>> done;
  for (const auto& s : store.similarities(experiment_id)) {
    done.insert({to_string(s.metric), s.provider_id.value_or(""), s.target_record_id});
  }

  SimilarityRunSummary summary;
  for (const auto& [model, list] : successful_by_model(plan, records)) {
    if (model == reference.model_id) continue;
    for (const auto& r : list) {
      for (auto metric : options.metrics) {
        const bool embedded =
            metric == SimilarityMetric::kEmbedCosine || metric == SimilarityMetric::kSemBleu;
        SimilarityScore s;
        s.metric = metric;
        s.reference_record_id = reference.record_id;
        s.target_record_id = r.record_id;
        s.model_id = r.model_id;
        if (embedded) s.provider_id = options.provider_id;
        if (done.count({to_string(metric), s.provider_id.value_or(""), r.record_id})) {
          ++summary.skipped;
          continue;
        }
        switch (metric) {
          case SimilarityMetric::kTfidf:
            if (!tfidf) tfidf.emplace(corpus);
            s.value = tfidf->cosine(reference.response_text, r.response_text);
            break;
          case SimilarityMetric::kBleu:
            s.value = bleu(reference.response_text, r.response_text);
            break;
          case SimilarityMetric::kEmbedCosine:
            s.value = embedding_cosine(*gateway, *options.provider_id, reference.response_text,
                                       r.response_text);
            break;
          case SimilarityMetric::kSemBleu:
            s.value = sem_bleu(*gateway, *options.provider_id, reference.response_text,
                               r.response_text);
            break;
        }
        store.append(experiment_id, s);
        ++summary.recorded;
      }
    }
  }
  return summary;
}

}  // namespace slam
