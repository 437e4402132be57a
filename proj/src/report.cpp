#include <algorithm>
#include <map>
#include <set>

#include "slam/analysis.h"
#include "slam/error.h"
#include "slam/human_eval.h"
#include "slam/pipeline.h"

namespace slam {

using nlohmann::json;

namespace {

// model -> raw values, for one score source.
using SourceValues = std::map<std::string, std::vector<double>>;

std::string judge_source(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kScore: return "judge:scorer";
    case VerdictKind::kCompare: return "judge:comparer";
    case VerdictKind::kCompareNoReason: return "judge:comparer-nr";
    case VerdictKind::kChoice: return "judge:selector";
  }
  return "judge:scorer";
}

std::map<std::string, SourceValues> judge_values(const std::vector<JudgeVerdict>& verdicts) {
  std::map<std::string, SourceValues> out;
  for (const auto& v : verdicts) {
    auto& values = out[judge_source(v.kind)];
    if (v.kind == VerdictKind::kChoice) {
      // Selector: 1 for the chosen candidate, 0 for the others in the round.
      for (std::size_t i = 0; i < v.candidate_model_ids.size(); ++i) {
        values[v.candidate_model_ids[i]].push_back(
            static_cast<int>(i) + 1 == v.choice.value_or(0) ? 1.0 : 0.0);
      }
    } else if (v.score) {
      values[v.model_id].push_back(*v.score);
    }
  }
  return out;
}

std::map<std::string, SourceValues> similarity_values(
    const std::vector<SimilarityScore>& scores) {
  std::map<std::string, SourceValues> out;
  for (const auto& s : scores) {
    std::string key = "similarity:" + to_string(s.metric);
    if (s.provider_id) key += ":" + *s.provider_id;
    out[key][s.model_id].push_back(s.value);
  }
  return out;
}

json score_rows(const std::vector<std::string>& model_ids, const SourceValues& values,
                std::map<std::string, double>& means) {
  json rows = json::array();
  for (const auto& id : model_ids) {
    AggregateScore a;
    a.model_id = id;
    auto it = values.find(id);
    if (it != values.end() && !it->second.empty()) {
      auto stats = summarize(it->second);
      a.n = static_cast<int>(it->second.size());
      a.mean = stats.mean;
      a.quartiles = stats.quartiles;
      means[id] = stats.mean;
    }
    rows.push_back(a);
  }
  return rows;
}

RankedList restrict_to(const RankedList& r, const std::set<std::string>& keep) {
  RankedList out;
  out.direction = r.direction;
  for (const auto& e : r.entries) {
    if (keep.count(e.model_id)) out.entries.push_back(e);
  }
  return out;
}

}  // namespace

nlohmann::json build_report(Store& store, const std::string& experiment_id,
                            const ReportOptions& options) {
  const ExperimentPlan plan = store.load_plan(experiment_id);
  const auto records = store.generations(experiment_id);
  const auto models = load_experiment_models(store, experiment_id);
  std::optional<std::string> reference = plan.reference_model;
  if (!reference && models) reference = models->reference_model;

  auto is_hosted = [&](const std::string& id) {
    if (models) {
      if (const auto* spec = models->find(id)) return spec->provider == ProviderKind::kHostedApi;
    }
    return reference && *reference == id;
  };

  json report;
  report["experiment_id"] = experiment_id;
  report["k"] = options.k;
  report["reference_model"] = reference ? json(*reference) : json(nullptr);

  // Human section: one row per plan model, n = 0 when nobody completed.
  std::map<std::string, double> human_means;
  {
    HumanEval eval(store, store.clock());
    auto aggregated = eval.sanitize_and_aggregate(experiment_id);
    json rows = json::array();
    for (const auto& id : plan.model_ids) {
      AggregateScore a;
      a.model_id = id;
      for (const auto& s : aggregated) {
        if (s.model_id == id) a = s;
      }
      if (a.mean) human_means[id] = *a.mean;
      rows.push_back(a);
    }
    report["scores"]["human"] = rows;
  }

  std::map<std::string, std::map<std::string, double>> means;
  if (!human_means.empty()) means["human"] = human_means;
  auto add_sources = [&](const std::map<std::string, SourceValues>& sources) {
    for (const auto& [key, values] : sources) {
      std::map<std::string, double> m;
      report["scores"][key] = score_rows(plan.model_ids, values, m);
      if (!m.empty()) means[key] = m;
    }
  };
  add_sources(judge_values(store.verdicts(experiment_id)));
  add_sources(similarity_values(store.similarities(experiment_id)));

  json rankings = json::object();
  std::map<std::string, RankedList> ranked;
  for (const auto& [key, m] : means) {
    ranked[key] = rank_models(m, Direction::kDescending);
    rankings[key] = ranked[key];
  }
  report["rankings"] = rankings;

  // Agreement of each automated source with humans over the self-hosted
  // models both rankings cover.
  json agreement = json::object();
  if (auto human = ranked.find("human"); human != ranked.end()) {
    for (const auto& [key, list] : ranked) {
      if (key == "human") continue;
      std::set<std::string> common;
      for (const auto& e : list.entries) {
        if (human_means.count(e.model_id) && !is_hosted(e.model_id)) common.insert(e.model_id);
      }
      std::size_t k = options.k;
      if (k > common.size()) {
        if (options.strict_k) {
          throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " but only " +
                                                 std::to_string(common.size()) +
                                                 " models are comparable for " + key);
        }
        k = common.size();
      }
      if (k == 0) continue;
      auto bottom_h = bottom_k(restrict_to(human->second, common), k).model_ids();
      auto bottom_m = bottom_k(restrict_to(list, common), k).model_ids();
      const std::string at = "@" + std::to_string(k);
      agreement[key] = {
          {"jaccard" + at, jaccard({bottom_h.begin(), bottom_h.end()},
                                   {bottom_m.begin(), bottom_m.end()})},
          {"rbo" + at, rbo_uniform(bottom_h, bottom_m, k)},
          {"k", k},
          {"models_compared", common.size()},
          {"bottom_human", bottom_h},
          {"bottom_method", bottom_m}};
    }
  }
  report["agreement"] = agreement;

  json latency = json::array();
  json cost = json::array();
  for (const auto& id : plan.model_ids) {
    std::vector<GenerationRecord> mine;
    for (const auto& r : records) {
      if (r.model_id == id) mine.push_back(r);
    }
    if (std::none_of(mine.begin(), mine.end(), [](const auto& r) { return r.ok(); })) continue;
    latency.push_back(latency_summary(mine));
    if (is_hosted(id)) continue;
    double tps = measured_throughput(mine);
    if (tps > 0) cost.push_back(estimate_selfhost_cost(id, tps, plan.cost));
  }
  report["latency"] = latency;
  report["cost"] = cost;
  report["api_cost_per_request"] =
      api_request_cost(plan.cost.request_input_tokens, plan.cost.request_output_tokens,
                       plan.cost.pricing)
          .to_string();
  return report;
}

std::vector<std::string> automated_sources(const nlohmann::json& report) {
  std::vector<std::string> out;
  if (!report.contains("rankings")) return out;
  for (const auto& [key, _] : report["rankings"].items()) {
    if (key != "human") out.push_back(key);
  }
  return out;
}

}  // namespace slam
