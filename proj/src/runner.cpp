#include "slam/runner.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include "slam/error.h"
#include "slam/stats.h"

namespace slam {

using nlohmann::json;

namespace {

struct Token {
  std::size_t begin;
  std::size_t end;  // one past ']'
  std::string name;
};

std::vector<Token> scan_placeholders(const std::string& tmpl) {
  std::vector<Token> out;
  std::size_t pos = 0;
  while ((pos = tmpl.find('[', pos)) != std::string::npos) {
    std::size_t close = tmpl.find_first_of("[]", pos + 1);
    if (close == std::string::npos) break;
    if (tmpl[close] == '[' || close == pos + 1) {
      pos = close == pos + 1 ? close + 1 : close;
      continue;
    }
    out.push_back({pos, close + 1, tmpl.substr(pos + 1, close - pos - 1)});
    pos = close + 1;
  }
  return out;
}

std::string record_id_for(const std::string& experiment_id, const std::string& model_id,
                          std::optional<int> hour, int repetition) {
  std::string key = experiment_id + '\x1f' + model_id + '\x1f' +
                    (hour ? std::to_string(*hour) : std::string("-")) + '\x1f' +
                    std::to_string(repetition);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "g%016llx",
                static_cast<unsigned long long>(mix64(fnv1a(key))));
  return buf;
}

bool all_failed(const std::vector<ModelRun>& runs) {
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      if (r.ok()) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<std::string> placeholders_of(const std::string& tmpl) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : scan_placeholders(tmpl)) {
    if (seen.insert(t.name).second) out.push_back(t.name);
  }
  return out;
}

std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& values) {
  auto tokens = scan_placeholders(tmpl);
  std::vector<std::string> missing;
  for (const auto& t : tokens) {
    if (!values.count(t.name) &&
        std::find(missing.begin(), missing.end(), t.name) == missing.end()) {
      missing.push_back(t.name);
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::kMissingPlaceholder, names);
  }
  std::string out;
  std::size_t pos = 0;
  for (const auto& t : tokens) {
    out.append(tmpl, pos, t.begin - pos);
    out += values.at(t.name);
    pos = t.end;
  }
  out.append(tmpl, pos, std::string::npos);
  return out;
}

const ModelRun& ExperimentResult::for_model(const std::string& model_id) const {
  for (const auto& m : models) {
    if (m.model_id == model_id) return m;
  }
  throw Error(ErrorCode::kUnknownModel, "'" + model_id + "' not in result");
}

void to_json(json& j, const ExperimentResult& r) {
  json models = json::array();
  for (const auto& m : r.models) models.push_back({{"model_id", m.model_id}, {"records", m.records}});
  j = json{{"experiment_id", r.experiment_id}, {"models", models}};
}

Runner::Runner(Gateway& gateway, Store* store, std::size_t max_parallel_models)
    : gateway_(gateway),
      store_(store),
      max_parallel_models_(std::max<std::size_t>(1, max_parallel_models)) {}

int Runner::warmup_for(const ExperimentPlan& plan, const std::string& model_id) const {
  if (plan.warmup_requests) return *plan.warmup_requests;
  return gateway_.registry().get(model_id).provider == ProviderKind::kLocalRunner ? 10 : 0;
}

std::vector<GenerationRecord> Runner::sample(const ExperimentPlan& plan,
                                             const std::string& model_id,
                                             const std::string& prompt, int count,
                                             std::optional<int> hour) {
  Clock& clock = gateway_.clock();
  for (int i = 0, n = warmup_for(plan, model_id); i < n; ++i) {
    try {
      gateway_.generate(model_id, prompt, plan.params);
    } catch (const Error&) {
      // Warm-up outcomes are never recorded.
    }
  }
  std::vector<GenerationRecord> records;
  for (int rep = 0; rep < count; ++rep) {
    GenerationRecord rec;
    const UtcTime started = clock.now();
    const Duration t0 = clock.monotonic();
    try {
      rec = gateway_.generate(model_id, prompt, plan.params);
    } catch (const Error& e) {
      rec = GenerationRecord{};
      rec.model_id = model_id;
      rec.prompt_text = prompt;
      rec.started_at = started;
      rec.latency_ms = (clock.monotonic() - t0).count() / 1000;
      rec.error = e.what();
    }
    rec.record_id = record_id_for(plan.experiment_id, model_id, hour, rep);
    rec.repetition = rep;
    rec.hour = hour;
    if (store_) store_->append(plan.experiment_id, rec);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ModelRun> Runner::for_each_model(const ExperimentPlan& plan,
                                             const std::string& prompt, int count,
                                             std::optional<int> hour) {
  std::vector<ModelRun> runs(plan.model_ids.size());
  auto work = [&](std::size_t i) {
    runs[i].model_id = plan.model_ids[i];
    runs[i].records = sample(plan, plan.model_ids[i], prompt, count, hour);
  };
  if (max_parallel_models_ == 1 || runs.size() <= 1) {
    for (std::size_t i = 0; i < runs.size(); ++i) work(i);
    return runs;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(max_parallel_models_, runs.size()); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < runs.size();) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return runs;
}

ExperimentResult Runner::run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  for (const auto& m : plan.model_ids) gateway_.registry().get(m);
  const std::string prompt = render_prompt(plan.prompt_template, plan.placeholder_values);
  ExperimentResult result{plan.experiment_id,
                          for_each_model(plan, prompt, plan.repetitions, std::nullopt)};
  if (all_failed(result.models)) {
    throw Error(ErrorCode::kAllModelsFailed,
                "every model failed every repetition in '" + plan.experiment_id + "'");
  }
  return result;
}

LongitudinalResult Runner::run_longitudinal(const ExperimentPlan& plan,
                                            const SamplingSchedule& schedule) {
  plan.validate();
  schedule.validate();
  for (const auto& m : plan.model_ids) gateway_.registry().get(m);
  const std::string prompt = render_prompt(plan.prompt_template, plan.placeholder_values);
  Clock& clock = gateway_.clock();
  UtcTime first = clock.now();
  if (schedule.aligned_to_hour) {
    auto floored = std::chrono::floor<std::chrono::hours>(first);
    if (floored != first) first = floored + std::chrono::hours(1);
  }
  LongitudinalResult result;
  result.experiment_id = plan.experiment_id;
  for (const auto& m : plan.model_ids) result.models.push_back({m, {}});
  for (int h = 0; h < schedule.hours; ++h) {
    UtcTime tick = first + std::chrono::hours(h);
    clock.sleep_until(tick);
    result.ticks.push_back(clock.now());
    auto runs = for_each_model(plan, prompt, schedule.per_hour, h);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      auto& dst = result.models[i].records;
      dst.insert(dst.end(), runs[i].records.begin(), runs[i].records.end());
    }
  }
  if (all_failed(result.models)) {
    throw Error(ErrorCode::kAllModelsFailed,
                "every model failed every sample in '" + plan.experiment_id + "'");
  }
  return result;
}

}  // namespace slam
