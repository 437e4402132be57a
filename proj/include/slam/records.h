#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/clock.h"

namespace slam {

enum class ProviderKind { kHostedApi, kLocalRunner };

std::string to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(const std::string& s);

struct ModelSpec {
  std::string model_id;
  std::string display_name;
  ProviderKind provider = ProviderKind::kLocalRunner;
  double params_billion = 0;
  int quant_bits = 16;
  double size_gb = 0;
  // Name understood by the provider; defaults to model_id when empty.
  std::string pull_ref;

  void validate() const;
  const std::string& wire_name() const { return pull_ref.empty() ? model_id : pull_ref; }
  bool operator==(const ModelSpec&) const = default;
};

struct GenerationParams {
  double temperature = 0.7;
  std::optional<int> max_output_tokens;
  std::optional<std::int64_t> seed;

  void validate() const;
  bool operator==(const GenerationParams&) const = default;
};

struct GenerationRecord {
  std::string record_id;
  std::string model_id;
  std::string prompt_text;
  std::string response_text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t latency_ms = 0;
  UtcTime started_at{};
  int retries = 0;
  std::optional<std::string> error;
  // Hour index for longitudinal runs.
  std::optional<int> hour;
  int repetition = 0;
  // True when token counts came from the fallback estimator rather than the
  // provider.
  bool tokens_estimated = false;

  bool ok() const { return !error.has_value(); }
  void validate() const;
  bool operator==(const GenerationRecord&) const = default;
};

struct RatingRecord {
  std::string rater_id;
  std::string item_id;
  int score = 0;
  UtcTime submitted_at{};

  void validate() const;
  bool operator==(const RatingRecord&) const = default;
};

enum class VerdictKind { kScore, kCompare, kCompareNoReason, kChoice };

std::string to_string(VerdictKind kind);
VerdictKind verdict_kind_from_string(const std::string& s);

struct JudgeVerdict {
  VerdictKind kind = VerdictKind::kScore;
  std::optional<int> score;
  std::optional<int> choice;
  std::optional<std::string> reason;
  std::string raw_output;
  std::string judge_model_id;

  // Provenance when persisted. Score/compare verdicts judge one record;
  // choice verdicts carry the ordered candidates the choice indexes into.
  std::string record_id;
  std::string model_id;
  std::vector<std::string> candidate_record_ids;
  std::vector<std::string> candidate_model_ids;

  void validate() const;
  bool operator==(const JudgeVerdict&) const = default;
};

enum class SimilarityMetric { kTfidf, kEmbedCosine, kBleu, kSemBleu };

std::string to_string(SimilarityMetric metric);
SimilarityMetric similarity_metric_from_string(const std::string& s);

struct SimilarityScore {
  SimilarityMetric metric = SimilarityMetric::kTfidf;
  double value = 0;
  std::string reference_record_id;
  std::string target_record_id;
  std::optional<std::string> provider_id;
  std::string model_id;

  void validate() const;
  bool operator==(const SimilarityScore&) const = default;
};

void to_json(nlohmann::json& j, const ModelSpec& m);
void from_json(const nlohmann::json& j, ModelSpec& m);
void to_json(nlohmann::json& j, const GenerationParams& p);
void from_json(const nlohmann::json& j, GenerationParams& p);
void to_json(nlohmann::json& j, const GenerationRecord& r);
void from_json(const nlohmann::json& j, GenerationRecord& r);
void to_json(nlohmann::json& j, const RatingRecord& r);
void from_json(const nlohmann::json& j, RatingRecord& r);
void to_json(nlohmann::json& j, const JudgeVerdict& v);
void from_json(const nlohmann::json& j, JudgeVerdict& v);
void to_json(nlohmann::json& j, const SimilarityScore& s);
void from_json(const nlohmann::json& j, SimilarityScore& s);

}  // namespace slam
