#include "slam/analysis.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slam/error.h"

namespace slam {

using nlohmann::json;

std::vector<std::string> RankedList::model_ids() const {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.model_id);
  return out;
}

RankedList rank_models(const std::map<std::string, double>& scores, Direction direction) {
  RankedList r;
  r.direction = direction;
  for (const auto& [id, s] : scores) r.entries.push_back({id, s});
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [direction](const RankedEntry& a, const RankedEntry& b) {
                     if (a.score != b.score) {
                       return direction == Direction::kAscending ? a.score < b.score
                                                                 : a.score > b.score;
                     }
                     return a.model_id < b.model_id;
                   });
  return r;
}

RankedList bottom_k(const RankedList& ranked, std::size_t k) {
  if (k > ranked.entries.size()) {
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds " +
                                           std::to_string(ranked.entries.size()) + " entries");
  }
  RankedList out;
  out.direction = Direction::kAscending;
  if (ranked.direction == Direction::kAscending) {
    out.entries.assign(ranked.entries.begin(),
                       ranked.entries.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    out.entries.assign(ranked.entries.rbegin(),
                       ranked.entries.rbegin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double rbo_uniform(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   std::size_t k) {
  if (std::set<std::string>(a.begin(), a.end()).size() != a.size() ||
      std::set<std::string>(b.begin(), b.end()).size() != b.size()) {
    throw Error(ErrorCode::kDuplicateEntries, "ranked lists must not repeat entries");
  }
  if (k == 0 || k > a.size() || k > b.size()) {
    throw Error(ErrorCode::kKTooLarge, "depth " + std::to_string(k) + " exceeds list length");
  }
  std::set<std::string> seen_a, seen_b;
  std::size_t overlap = 0;
  double sum = 0;
  for (std::size_t d = 0; d < k; ++d) {
    // Incremental overlap: each new element may meet the other prefix.
    if (a[d] == b[d]) {
      ++overlap;
    } else {
      overlap += seen_b.count(a[d]);
      overlap += seen_a.count(b[d]);
    }
    seen_a.insert(a[d]);
    seen_b.insert(b[d]);
    sum += static_cast<double>(overlap) / static_cast<double>(d + 1);
  }
  return sum / static_cast<double>(k);
}

LatencySummary latency_summary(const std::vector<GenerationRecord>& records) {
  std::vector<double> per_request, per_token, tokens;
  std::map<int, std::vector<double>> by_hour;
  LatencySummary s;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    if (s.model_id.empty()) s.model_id = r.model_id;
    per_request.push_back(static_cast<double>(r.latency_ms));
    tokens.push_back(static_cast<double>(r.output_tokens));
    if (r.output_tokens > 0) {
      per_token.push_back(static_cast<double>(r.latency_ms) /
                          static_cast<double>(r.output_tokens));
    }
    if (r.hour) by_hour[*r.hour].push_back(static_cast<double>(r.latency_ms));
  }
  if (per_request.empty()) {
    throw Error(ErrorCode::kNoSuccessfulRecords, "latency summary needs a successful record");
  }
  s.samples = per_request.size();
  s.per_request_ms = summarize(per_request);
  if (!per_token.empty()) s.per_token_ms = summarize(per_token);
  s.output_tokens = summarize(tokens);
  for (const auto& [hour, values] : by_hour) s.hour_buckets[hour] = summarize(values);
  return s;
}

Money api_request_cost(std::int64_t input_tokens, std::int64_t output_tokens,
                       const PricingConfig& pricing) {
  if (input_tokens < 0 || output_tokens < 0) {
    throw Error(ErrorCode::kInvalidArgument, "token counts must be non-negative");
  }
  __int128 scaled = static_cast<__int128>(input_tokens) * pricing.input_per_1k.micros() +
                    static_cast<__int128>(output_tokens) * pricing.output_per_1k.micros();
  // Whole micro-dollars, half rounded up; exact whenever the price divides.
  return Money::from_micros(static_cast<std::int64_t>((scaled + 500) / 1000));
}

Money selfhost_cost_per_1k(Money hourly_price, double tokens_per_sec, double utilization) {
  if (!(utilization > 0.0 && utilization <= 1.0)) {
    throw Error(ErrorCode::kInvalidUtilization, "utilization must be in (0, 1]");
  }
  if (!(tokens_per_sec > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tokens_per_sec must be positive");
  }
  long double tokens_per_hour = static_cast<long double>(tokens_per_sec) * utilization * 3600.0L;
  long double micros = static_cast<long double>(hourly_price.micros()) * 1000.0L / tokens_per_hour;
  return Money::from_micros(static_cast<std::int64_t>(std::llround(micros)));
}

MoneyRatio cost_reduction(Money api_cost_per_request, Money slm_cost_per_request) {
  if (slm_cost_per_request.micros() <= 0) {
    throw Error(ErrorCode::kDivisionByZero, "self-hosted cost per request is zero");
  }
  std::int64_t g = std::gcd(api_cost_per_request.micros(), slm_cost_per_request.micros());
  if (g == 0) g = 1;
  return MoneyRatio{api_cost_per_request.micros() / g, slm_cost_per_request.micros() / g};
}

UsageProjection usage_projection(std::int64_t requests_per_day, Money cost_per_request) {
  if (requests_per_day < 0 || cost_per_request.micros() < 0) {
    throw Error(ErrorCode::kInvalidArgument, "usage projection inputs must be non-negative");
  }
  UsageProjection p;
  p.daily = cost_per_request * requests_per_day;
  p.monthly = p.daily * 30;
  p.yearly = p.monthly * 12;
  return p;
}

double measured_throughput(const std::vector<GenerationRecord>& records) {
  double tokens = 0, seconds = 0;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    tokens += static_cast<double>(r.output_tokens);
    seconds += static_cast<double>(r.latency_ms) / 1000.0;
  }
  return seconds > 0 ? tokens / seconds : 0.0;
}

CostEstimate estimate_selfhost_cost(const std::string& model_id, double tokens_per_sec,
                                    const CostAssumptions& assumptions) {
  CostEstimate c;
  c.model_id = model_id;
  auto it = assumptions.hourly_price_by_model.find(model_id);
  c.hourly_price = it == assumptions.hourly_price_by_model.end() ? assumptions.hourly_price
                                                                  : it->second;
  c.utilization = assumptions.utilization;
  c.tokens_per_sec = tokens_per_sec;
  c.cost_per_1k_tokens = selfhost_cost_per_1k(c.hourly_price, tokens_per_sec, c.utilization);
  __int128 scaled = static_cast<__int128>(c.cost_per_1k_tokens.micros()) *
                    assumptions.request_output_tokens;
  c.cost_per_request = Money::from_micros(static_cast<std::int64_t>((scaled + 500) / 1000));
  Money api = api_request_cost(assumptions.request_input_tokens,
                               assumptions.request_output_tokens, assumptions.pricing);
  if (c.cost_per_request.micros() > 0) c.reduction_vs_api = cost_reduction(api, c.cost_per_request);
  return c;
}

void to_json(json& j, const RankedList& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back({{"model_id", e.model_id}, {"score", e.score}});
  j = json{{"direction", r.direction == Direction::kAscending ? "ascending" : "descending"},
           {"entries", entries}};
}

void to_json(json& j, const SummaryStats& s) {
  j = json{{"min", s.quartiles.min},   {"q1", s.quartiles.q1}, {"median", s.quartiles.median},
           {"q3", s.quartiles.q3},     {"max", s.quartiles.max}, {"mean", s.mean}};
}

void to_json(json& j, const LatencySummary& s) {
  j = json{{"model_id", s.model_id},
           {"samples", s.samples},
           {"per_request_ms", s.per_request_ms},
           {"per_token_ms", s.per_token_ms},
           {"output_tokens", s.output_tokens}};
  if (!s.hour_buckets.empty()) {
    json hours = json::object();
    for (const auto& [h, stats] : s.hour_buckets) hours[std::to_string(h)] = stats;
    j["hour_buckets"] = hours;
  }
}

void to_json(json& j, const CostEstimate& c) {
  j = json{{"model_id", c.model_id},
           {"cost_per_1k_tokens", c.cost_per_1k_tokens.to_string()},
           {"cost_per_request", c.cost_per_request.to_string()},
           {"assumptions",
            {{"hourly_price", c.hourly_price.to_string()},
             {"utilization", c.utilization},
             {"tokens_per_sec", c.tokens_per_sec}}}};
  if (c.reduction_vs_api) {
    j["reduction_vs_api"] = c.reduction_vs_api->value();
    j["reduction_vs_api_exact"] = std::to_string(c.reduction_vs_api->numerator) + "/" +
                                  std::to_string(c.reduction_vs_api->denominator);
  }
}

}  // namespace slam
