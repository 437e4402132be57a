#include "slam/records.h"

#include <cmath>

#include "slam/error.h"

namespace slam {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::string to_string(ProviderKind kind) {
  return kind == ProviderKind::kHostedApi ? "hosted_api" : "local_runner";
}

ProviderKind provider_kind_from_string(const std::string& s) {
  if (s == "hosted_api") return ProviderKind::kHostedApi;
  if (s == "local_runner") return ProviderKind::kLocalRunner;
  invalid(ErrorCode::kInvalidSpec, "unknown provider kind '" + s + "'");
}

void ModelSpec::validate() const {
  if (model_id.empty()) invalid(ErrorCode::kInvalidSpec, "model_id is empty");
  if (quant_bits != 2 && quant_bits != 3 && quant_bits != 4 && quant_bits != 16) {
    invalid(ErrorCode::kInvalidSpec,
            model_id + ": quant_bits must be one of 2, 3, 4, 16");
  }
  if (!(params_billion >= 0)) invalid(ErrorCode::kInvalidSpec, model_id + ": params_billion < 0");
  if (!(size_gb >= 0)) invalid(ErrorCode::kInvalidSpec, model_id + ": size_gb < 0");
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    invalid(ErrorCode::kInvalidSpec, "temperature must be in [0, 2]");
  }
  if (max_output_tokens && *max_output_tokens <= 0) {
    invalid(ErrorCode::kInvalidSpec, "max_output_tokens must be positive");
  }
}

void GenerationRecord::validate() const {
  if (record_id.empty()) invalid(ErrorCode::kValidationFailed, "generation record without id");
  if (model_id.empty()) invalid(ErrorCode::kValidationFailed, record_id + ": empty model_id");
  if (input_tokens < 0 || output_tokens < 0 || latency_ms < 0 || retries < 0) {
    invalid(ErrorCode::kValidationFailed, record_id + ": negative counter");
  }
  if (error.has_value() == !response_text.empty()) {
    invalid(ErrorCode::kValidationFailed,
            record_id + ": error must be present iff response_text is empty");
  }
}

void RatingRecord::validate() const {
  if (rater_id.empty() || item_id.empty()) {
    invalid(ErrorCode::kValidationFailed, "rating without rater or item");
  }
  if (score < 0 || score > 10) {
    invalid(ErrorCode::kValidationFailed,
            "rating score " + std::to_string(score) + " outside [0, 10]");
  }
}

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kScore: return "score";
    case VerdictKind::kCompare: return "compare";
    case VerdictKind::kCompareNoReason: return "compare_nr";
    case VerdictKind::kChoice: return "choice";
  }
  return "score";
}

VerdictKind verdict_kind_from_string(const std::string& s) {
  if (s == "score") return VerdictKind::kScore;
  if (s == "compare") return VerdictKind::kCompare;
  if (s == "compare_nr") return VerdictKind::kCompareNoReason;
  if (s == "choice") return VerdictKind::kChoice;
  invalid(ErrorCode::kValidationFailed, "unknown verdict kind '" + s + "'");
}

void JudgeVerdict::validate() const {
  switch (kind) {
    case VerdictKind::kScore:
    case VerdictKind::kCompare:
    case VerdictKind::kCompareNoReason:
      if (!score || *score < 0 || *score > 10) {
        invalid(ErrorCode::kValidationFailed, "score verdict needs a score in [0, 10]");
      }
      if (kind == VerdictKind::kCompareNoReason && reason) {
        invalid(ErrorCode::kValidationFailed, "compare_nr verdicts carry no reason");
      }
      break;
    case VerdictKind::kChoice:
      if (!choice || *choice < 1) {
        invalid(ErrorCode::kValidationFailed, "choice verdict needs a choice >= 1");
      }
      if (!candidate_record_ids.empty() &&
          static_cast<std::size_t>(*choice) > candidate_record_ids.size()) {
        invalid(ErrorCode::kValidationFailed, "choice exceeds candidate count");
      }
      break;
  }
}

std::string to_string(SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::kTfidf: return "tfidf";
    case SimilarityMetric::kEmbedCosine: return "embed_cosine";
    case SimilarityMetric::kBleu: return "bleu";
    case SimilarityMetric::kSemBleu: return "sem_bleu";
  }
  return "tfidf";
}

SimilarityMetric similarity_metric_from_string(const std::string& s) {
  if (s == "tfidf") return SimilarityMetric::kTfidf;
  if (s == "embed_cosine") return SimilarityMetric::kEmbedCosine;
  if (s == "bleu") return SimilarityMetric::kBleu;
  if (s == "sem_bleu") return SimilarityMetric::kSemBleu;
  invalid(ErrorCode::kInvalidArgument, "unknown similarity metric '" + s + "'");
}

void SimilarityScore::validate() const {
  if (!(value >= 0.0 && value <= 1.0)) {
    invalid(ErrorCode::kValidationFailed, "similarity value outside [0, 1]");
  }
  if (target_record_id.empty()) {
    invalid(ErrorCode::kValidationFailed, "similarity score without target record");
  }
}

void to_json(json& j, const ModelSpec& m) {
  j = json{{"model_id", m.model_id},
           {"display_name", m.display_name},
           {"provider", to_string(m.provider)},
           {"params_billion", m.params_billion},
           {"quant_bits", m.quant_bits},
           {"size_gb", m.size_gb},
           {"pull_ref", m.pull_ref}};
}

void from_json(const json& j, ModelSpec& m) {
  m.model_id = j.at("model_id").get<std::string>();
  m.display_name = j.value("display_name", m.model_id);
  m.provider = provider_kind_from_string(j.at("provider").get<std::string>());
  m.params_billion = j.value("params_billion", 0.0);
  m.quant_bits = j.value("quant_bits", 16);
  m.size_gb = j.value("size_gb", 0.0);
  m.pull_ref = j.value("pull_ref", std::string());
}

void to_json(json& j, const GenerationParams& p) {
  j = json{{"temperature", p.temperature}};
  put_optional(j, "max_output_tokens", p.max_output_tokens);
  put_optional(j, "seed", p.seed);
}

void from_json(const json& j, GenerationParams& p) {
  p.temperature = j.value("temperature", 0.7);
  p.max_output_tokens = get_optional<int>(j, "max_output_tokens");
  p.seed = get_optional<std::int64_t>(j, "seed");
}

void to_json(json& j, const GenerationRecord& r) {
  j = json{{"record_id", r.record_id},
           {"model_id", r.model_id},
           {"prompt_text", r.prompt_text},
           {"response_text", r.response_text},
           {"input_tokens", r.input_tokens},
           {"output_tokens", r.output_tokens},
           {"latency_ms", r.latency_ms},
           {"started_at", format_rfc3339(r.started_at)},
           {"retries", r.retries},
           {"repetition", r.repetition},
           {"tokens_estimated", r.tokens_estimated}};
  put_optional(j, "error", r.error);
  put_optional(j, "hour", r.hour);
}

void from_json(const json& j, GenerationRecord& r) {
  r.record_id = j.at("record_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.prompt_text = j.at("prompt_text").get<std::string>();
  r.response_text = j.at("response_text").get<std::string>();
  r.input_tokens = j.at("input_tokens").get<std::int64_t>();
  r.output_tokens = j.at("output_tokens").get<std::int64_t>();
  r.latency_ms = j.at("latency_ms").get<std::int64_t>();
  r.started_at = parse_rfc3339(j.at("started_at").get<std::string>());
  r.retries = j.at("retries").get<int>();
  r.repetition = j.value("repetition", 0);
  r.tokens_estimated = j.value("tokens_estimated", false);
  r.error = get_optional<std::string>(j, "error");
  r.hour = get_optional<int>(j, "hour");
}

void to_json(json& j, const RatingRecord& r) {
  j = json{{"rater_id", r.rater_id},
           {"item_id", r.item_id},
           {"score", r.score},
           {"submitted_at", format_rfc3339(r.submitted_at)}};
}

void from_json(const json& j, RatingRecord& r) {
  r.rater_id = j.at("rater_id").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.score = j.at("score").get<int>();
  r.submitted_at = parse_rfc3339(j.at("submitted_at").get<std::string>());
}

void to_json(json& j, const JudgeVerdict& v) {
  j = json{{"kind", to_string(v.kind)},
           {"raw_output", v.raw_output},
           {"judge_model_id", v.judge_model_id},
           {"record_id", v.record_id},
           {"model_id", v.model_id}};
  put_optional(j, "score", v.score);
  put_optional(j, "choice", v.choice);
  put_optional(j, "reason", v.reason);
  if (!v.candidate_record_ids.empty()) j["candidate_record_ids"] = v.candidate_record_ids;
  if (!v.candidate_model_ids.empty()) j["candidate_model_ids"] = v.candidate_model_ids;
}

void from_json(const json& j, JudgeVerdict& v) {
  v.kind = verdict_kind_from_string(j.at("kind").get<std::string>());
  v.raw_output = j.at("raw_output").get<std::string>();
  v.judge_model_id = j.at("judge_model_id").get<std::string>();
  v.record_id = j.value("record_id", std::string());
  v.model_id = j.value("model_id", std::string());
  v.score = get_optional<int>(j, "score");
  v.choice = get_optional<int>(j, "choice");
  v.reason = get_optional<std::string>(j, "reason");
  v.candidate_record_ids =
      j.value("candidate_record_ids", std::vector<std::string>{});
  v.candidate_model_ids = j.value("candidate_model_ids", std::vector<std::string>{});
}

void to_json(json& j, const SimilarityScore& s) {
  j = json{{"metric", to_string(s.metric)},
           {"value", s.value},
           {"reference_record_id", s.reference_record_id},
           {"target_record_id", s.target_record_id},
           {"model_id", s.model_id}};
  put_optional(j, "provider_id", s.provider_id);
}

void from_json(const json& j, SimilarityScore& s) {
  s.metric = similarity_metric_from_string(j.at("metric").get<std::string>());
  s.value = j.at("value").get<double>();
  s.reference_record_id = j.at("reference_record_id").get<std::string>();
  s.target_record_id = j.at("target_record_id").get<std::string>();
  s.model_id = j.value("model_id", std::string());
  s.provider_id = get_optional<std::string>(j, "provider_id");
}

}  // namespace slam
