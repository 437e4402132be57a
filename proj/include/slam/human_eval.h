#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/records.h"
#include "slam/stats.h"
#include "slam/store.h"

namespace slam {

struct AssignmentItem {
  std::string item_id;
  std::string record_id;
  std::string anon_label;

  bool operator==(const AssignmentItem&) const = default;
};

struct Assignment {
  std::string assignment_id;
  std::string experiment_id;
  std::string rater_id;
  std::vector<AssignmentItem> items;
  bool completed = false;

  bool operator==(const Assignment&) const = default;
};

struct AggregateScore {
  std::string model_id;
  int n = 0;
  // Absent when n == 0.
  std::optional<double> mean;
  std::optional<FiveNumber> quartiles;
};

void to_json(nlohmann::json& j, const Assignment& a);
void from_json(const nlohmann::json& j, Assignment& a);
void to_json(nlohmann::json& j, const AggregateScore& s);

// What a rater may see: item ids and anonymous labels only.
nlohmann::json rater_view(const Assignment& a);

// The record shown for each model: its first successful repetition by
// started_at, ties resolved by input order. Throws kNoRecords when a model
// has none.
std::vector<GenerationRecord> representative_records(
    const std::vector<std::string>& model_ids, const std::vector<GenerationRecord>& records);

// One assignment per rater; each rater's order is an independent
// seed-derived permutation, and labels "Response 1..N" follow that order.
std::vector<Assignment> build_assignments(const std::string& experiment_id,
                                          const std::vector<std::string>& model_ids,
                                          const std::vector<GenerationRecord>& records,
                                          const std::vector<std::string>& rater_ids,
                                          std::uint64_t seed);

// Latest rating per (rater, item), input in write order.
std::vector<RatingRecord> latest_ratings(const std::vector<RatingRecord>& ratings);

// Drops every rating from raters with an incomplete assignment, then
// summarizes the surviving scores per model, in `model_ids` order.
std::vector<AggregateScore> aggregate_ratings(const std::vector<std::string>& model_ids,
                                              const std::vector<Assignment>& assignments,
                                              const std::vector<RatingRecord>& ratings,
                                              const std::vector<GenerationRecord>& records);

// Store-backed rating workflow.
class HumanEval {
 public:
  HumanEval(Store& store, Clock& clock) : store_(store), clock_(clock) {}

  // Raters that already hold an assignment keep it.
  std::vector<Assignment> build_assignments(const std::string& experiment_id,
                                            const std::vector<std::string>& rater_ids,
                                            std::uint64_t seed);
  std::vector<Assignment> assignments(const std::string& experiment_id) const;
  std::optional<Assignment> find_assignment(const std::string& assignment_id) const;
  std::optional<Assignment> assignment_for_rater(const std::string& experiment_id,
                                                 const std::string& rater_id) const;

  RatingRecord submit_rating(const std::string& assignment_id, const std::string& item_id,
                             int score);

  std::vector<AggregateScore> sanitize_and_aggregate(const std::string& experiment_id) const;

 private:
  std::vector<Assignment> load(const std::string& experiment_id) const;

  Store& store_;
  Clock& clock_;
  mutable std::mutex mu_;
};

}  // namespace slam
