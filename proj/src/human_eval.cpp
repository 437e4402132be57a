#include "slam/human_eval.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "slam/error.h"

namespace slam {

using nlohmann::json;

namespace {

std::string assignment_id_for(const std::string& experiment_id, const std::string& rater_id) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "a%016llx",
                static_cast<unsigned long long>(
                    mix64(fnv1a(experiment_id + '\x1f' + rater_id))));
  return buf;
}

}  // namespace

void to_json(json& j, const Assignment& a) {
  json items = json::array();
  for (const auto& it : a.items) {
    items.push_back(
        {{"item_id", it.item_id}, {"record_id", it.record_id}, {"anon_label", it.anon_label}});
  }
  j = json{{"assignment_id", a.assignment_id},
           {"experiment_id", a.experiment_id},
           {"rater_id", a.rater_id},
           {"items", items},
           {"completed", a.completed}};
}

void from_json(const json& j, Assignment& a) {
  a.assignment_id = j.at("assignment_id").get<std::string>();
  a.experiment_id = j.at("experiment_id").get<std::string>();
  a.rater_id = j.at("rater_id").get<std::string>();
  a.completed = j.value("completed", false);
  a.items.clear();
  for (const auto& it : j.at("items")) {
    a.items.push_back({it.at("item_id").get<std::string>(), it.at("record_id").get<std::string>(),
                       it.at("anon_label").get<std::string>()});
  }
}

void to_json(json& j, const AggregateScore& s) {
  j = json{{"model_id", s.model_id}, {"n", s.n}};
  if (s.mean) j["mean"] = *s.mean;
  if (s.quartiles) j["quartiles"] = *s.quartiles;
}

json rater_view(const Assignment& a) {
  json items = json::array();
  for (const auto& it : a.items) {
    items.push_back({{"item_id", it.item_id}, {"anon_label", it.anon_label}});
  }
  return json{{"assignment_id", a.assignment_id},
              {"rater_id", a.rater_id},
              {"items", items},
              {"completed", a.completed}};
}

std::vector<GenerationRecord> representative_records(
    const std::vector<std::string>& model_ids, const std::vector<GenerationRecord>& records) {
  std::vector<GenerationRecord> out;
  for (const auto& model : model_ids) {
    const GenerationRecord* best = nullptr;
    for (const auto& r : records) {
      if (r.model_id != model || !r.ok()) continue;
      if (!best || r.started_at < best->started_at) best = &r;
    }
    if (!best) {
      throw Error(ErrorCode::kNoRecords, "model '" + model + "' has no successful record");
    }
    out.push_back(*best);
  }
  return out;
}

std::vector<Assignment> build_assignments(const std::string& experiment_id,
                                          const std::vector<std::string>& model_ids,
                                          const std::vector<GenerationRecord>& records,
                                          const std::vector<std::string>& rater_ids,
                                          std::uint64_t seed) {
  if (rater_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no raters given");
  std::set<std::string> unique(rater_ids.begin(), rater_ids.end());
  if (unique.size() != rater_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate rater id");
  }
  const auto chosen = representative_records(model_ids, records);
  std::vector<Assignment> out;
  for (const auto& rater : rater_ids) {
    std::vector<std::size_t> order(chosen.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(mix64(seed ^ fnv1a(rater)));
    // Fisher-Yates with explicit bounded draws so the permutation depends
    // only on the engine, which the standard pins down.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uint64_t bound = i;
      std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
      std::uint64_t draw;
      do {
        draw = rng();
      } while (draw >= limit);
      std::swap(order[i - 1], order[draw % bound]);
    }
    Assignment a;
    a.assignment_id = assignment_id_for(experiment_id, rater);
    a.experiment_id = experiment_id;
    a.rater_id = rater;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      a.items.push_back({a.assignment_id + "-" + std::to_string(pos + 1),
                         chosen[order[pos]].record_id,
                         "Response " + std::to_string(pos + 1)});
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<RatingRecord> latest_ratings(const std::vector<RatingRecord>& ratings) {
  std::map<std::pair<std::string, std::string>, std::size_t> last;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    last[{ratings[i].rater_id, ratings[i].item_id}] = i;
  }
  std::vector<std::size_t> keep;
  for (const auto& [_, i] : last) keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  std::vector<RatingRecord> out;
  for (auto i : keep) out.push_back(ratings[i]);
  return out;
}

std::vector<AggregateScore> aggregate_ratings(const std::vector<std::string>& model_ids,
                                              const std::vector<Assignment>& assignments,
                                              const std::vector<RatingRecord>& ratings,
                                              const std::vector<GenerationRecord>& records) {
  std::map<std::string, std::string> model_of_record;
  for (const auto& r : records) model_of_record[r.record_id] = r.model_id;

  const auto latest = latest_ratings(ratings);
  std::map<std::string, std::vector<double>> scores;
  for (const auto& a : assignments) {
    std::map<std::string, int> rated;
    for (const auto& r : latest) {
      if (r.rater_id != a.rater_id) continue;
      for (const auto& item : a.items) {
        if (item.item_id == r.item_id) rated[item.item_id] = r.score;
      }
    }
    if (a.items.empty() || rated.size() != a.items.size()) continue;  // incomplete rater
    for (const auto& item : a.items) {
      auto m = model_of_record.find(item.record_id);
      if (m != model_of_record.end()) scores[m->second].push_back(rated[item.item_id]);
    }
  }
  std::vector<AggregateScore> out;
  for (const auto& model : model_ids) {
    AggregateScore s;
    s.model_id = model;
    auto it = scores.find(model);
    if (it != scores.end() && !it->second.empty()) {
      auto stats = summarize(it->second);
      s.n = static_cast<int>(it->second.size());
      s.mean = stats.mean;
      s.quartiles = stats.quartiles;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Assignment> HumanEval::load(const std::string& experiment_id) const {
  auto doc = store_.read_document(store_.experiment_dir(experiment_id) / "assignments.json");
  std::vector<Assignment> out;
  if (doc) {
    json j = json::parse(*doc, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kStorageFailure, "corrupt assignments.json");
    out = j.get<std::vector<Assignment>>();
  }
  const auto latest = latest_ratings(store_.ratings(experiment_id));
  for (auto& a : out) {
    std::set<std::string> rated;
    for (const auto& r : latest) {
      if (r.rater_id == a.rater_id) rated.insert(r.item_id);
    }
    a.completed = !a.items.empty() &&
                  std::all_of(a.items.begin(), a.items.end(),
                              [&](const AssignmentItem& it) { return rated.count(it.item_id); });
  }
  return out;
}

std::vector<Assignment> HumanEval::build_assignments(const std::string& experiment_id,
                                                     const std::vector<std::string>& rater_ids,
                                                     std::uint64_t seed) {
  ExperimentPlan plan = store_.load_plan(experiment_id);
  std::lock_guard lock(mu_);
  auto existing = load(experiment_id);
  std::vector<std::string> fresh;
  for (const auto& r : rater_ids) {
    bool known = std::any_of(existing.begin(), existing.end(),
                             [&](const Assignment& a) { return a.rater_id == r; });
    if (!known) fresh.push_back(r);
  }
  if (!fresh.empty()) {
    auto records = store_.generations(experiment_id);
    // Models whose every request failed have nothing to show.
    std::vector<std::string> shown;
    for (const auto& m : plan.model_ids) {
      if (std::any_of(records.begin(), records.end(),
                      [&](const GenerationRecord& r) { return r.model_id == m && r.ok(); })) {
        shown.push_back(m);
      }
    }
    if (shown.empty()) shown = plan.model_ids;
    auto built = slam::build_assignments(experiment_id, shown, records, fresh, seed);
    existing.insert(existing.end(), built.begin(), built.end());
    store_.write_document(store_.experiment_dir(experiment_id) / "assignments.json",
                          json(existing).dump(2) + "\n");
  }
  std::vector<Assignment> out;
  for (const auto& r : rater_ids) {
    for (const auto& a : existing) {
      if (a.rater_id == r) out.push_back(a);
    }
  }
  return out;
}

std::vector<Assignment> HumanEval::assignments(const std::string& experiment_id) const {
  std::lock_guard lock(mu_);
  return load(experiment_id);
}

std::optional<Assignment> HumanEval::find_assignment(const std::string& assignment_id) const {
  std::lock_guard lock(mu_);
  for (const auto& exp : store_.experiments()) {
    for (auto& a : load(exp)) {
      if (a.assignment_id == assignment_id) return a;
    }
  }
  return std::nullopt;
}

std::optional<Assignment> HumanEval::assignment_for_rater(const std::string& experiment_id,
                                                          const std::string& rater_id) const {
  std::lock_guard lock(mu_);
  for (auto& a : load(experiment_id)) {
    if (a.rater_id == rater_id) return a;
  }
  return std::nullopt;
}

RatingRecord HumanEval::submit_rating(const std::string& assignment_id,
                                      const std::string& item_id, int score) {
  auto a = find_assignment(assignment_id);
  if (!a) throw Error(ErrorCode::kUnknownAssignment, "'" + assignment_id + "'");
  bool belongs = std::any_of(a->items.begin(), a->items.end(),
                             [&](const AssignmentItem& it) { return it.item_id == item_id; });
  if (!belongs) throw Error(ErrorCode::kUnknownItem, "'" + item_id + "'");
  if (score < 0 || score > 10) {
    throw Error(ErrorCode::kScoreOutOfRange, std::to_string(score) + " is outside [0, 10]");
  }
  RatingRecord r{a->rater_id, item_id, score, clock_.now()};
  std::lock_guard lock(mu_);
  store_.append(a->experiment_id, r);
  return r;
}

std::vector<AggregateScore> HumanEval::sanitize_and_aggregate(
    const std::string& experiment_id) const {
  std::lock_guard lock(mu_);
  auto assigned = load(experiment_id);
  if (assigned.empty()) return {};
  ExperimentPlan plan = store_.load_plan(experiment_id);
  return aggregate_ratings(plan.model_ids, assigned, store_.ratings(experiment_id),
                           store_.generations(experiment_id));
}

}  // namespace slam
