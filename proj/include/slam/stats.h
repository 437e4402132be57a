#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <json.hpp>

namespace slam {

struct FiveNumber {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
};

struct SummaryStats {
  FiveNumber quartiles;
  double mean = 0;
};

// Inclusive quantile: linear interpolation between order statistics at
// position p * (n - 1). Requires a non-empty, sorted input.
double quantile_sorted(std::span<const double> sorted, double p);

// Requires a non-empty input.
SummaryStats summarize(std::span<const double> values);

void to_json(nlohmann::json& j, const FiveNumber& f);
void from_json(const nlohmann::json& j, FiveNumber& f);

// Stable 64-bit FNV-1a, used wherever ids or seeds must be reproducible
// across processes.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);

}  // namespace slam
