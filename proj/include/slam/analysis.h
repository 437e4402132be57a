#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/config.h"
#include "slam/money.h"
#include "slam/records.h"
#include "slam/stats.h"

namespace slam {

// Scores are "higher is better" throughout.
enum class Direction { kAscending, kDescending };

struct RankedEntry {
  std::string model_id;
  double score = 0;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  std::vector<RankedEntry> entries;
  Direction direction = Direction::kDescending;

  std::vector<std::string> model_ids() const;
  bool operator==(const RankedList&) const = default;
};

// Sorted per direction; ties broken by model_id ascending.
RankedList rank_models(const std::map<std::string, double>& scores, Direction direction);

// The k lowest-scoring entries, worst first. kKTooLarge if k > size.
RankedList bottom_k(const RankedList& ranked, std::size_t k);

// |a ∩ b| / |a ∪ b|; two empty sets give 1.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Uniformly weighted rank-biased overlap truncated at depth k:
// (1/k) * sum_{d=1..k} |a[:d] ∩ b[:d]| / d.
double rbo_uniform(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   std::size_t k);

struct LatencySummary {
  std::string model_id;
  std::size_t samples = 0;
  SummaryStats per_request_ms;
  SummaryStats per_token_ms;
  SummaryStats output_tokens;
  std::map<int, SummaryStats> hour_buckets;
};

// Uses successful records only; kNoSuccessfulRecords if there are none.
LatencySummary latency_summary(const std::vector<GenerationRecord>& records);

Money api_request_cost(std::int64_t input_tokens, std::int64_t output_tokens,
                       const PricingConfig& pricing);
// hourly_price / (tokens_per_sec * utilization * 3600) * 1000.
Money selfhost_cost_per_1k(Money hourly_price, double tokens_per_sec, double utilization);
MoneyRatio cost_reduction(Money api_cost_per_request, Money slm_cost_per_request);

struct UsageProjection {
  Money daily;
  Money monthly;  // 30 days
  Money yearly;   // 12 months
};

UsageProjection usage_projection(std::int64_t requests_per_day, Money cost_per_request);

struct CostEstimate {
  std::string model_id;
  Money cost_per_1k_tokens;
  Money cost_per_request;
  std::optional<MoneyRatio> reduction_vs_api;
  Money hourly_price;
  double utilization = 0;
  double tokens_per_sec = 0;
};

// Generated tokens per second of wall-clock latency over successful records.
double measured_throughput(const std::vector<GenerationRecord>& records);

CostEstimate estimate_selfhost_cost(const std::string& model_id, double tokens_per_sec,
                                    const CostAssumptions& assumptions);

void to_json(nlohmann::json& j, const RankedList& r);
void to_json(nlohmann::json& j, const SummaryStats& s);
void to_json(nlohmann::json& j, const LatencySummary& s);
void to_json(nlohmann::json& j, const CostEstimate& c);

}  // namespace slam
