#include "slam/stats.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "slam/error.h"

namespace slam {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of empty sample");
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "summary of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  SummaryStats s;
  s.quartiles.min = sorted.front();
  s.quartiles.q1 = quantile_sorted(sorted, 0.25);
  s.quartiles.median = quantile_sorted(sorted, 0.5);
  s.quartiles.q3 = quantile_sorted(sorted, 0.75);
  s.quartiles.max = sorted.back();
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

void to_json(nlohmann::json& j, const FiveNumber& f) {
  j = nlohmann::json{{"min", f.min}, {"q1", f.q1}, {"median", f.median},
                     {"q3", f.q3}, {"max", f.max}};
}

void from_json(const nlohmann::json& j, FiveNumber& f) {
  f.min = j.at("min").get<double>();
  f.q1 = j.at("q1").get<double>();
  f.median = j.at("median").get<double>();
  f.q3 = j.at("q3").get<double>();
  f.max = j.at("max").get<double>();
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace slam
