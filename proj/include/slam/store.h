#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/clock.h"
#include "slam/config.h"
#include "slam/records.h"

namespace slam {

enum class RecordKind { kGeneration, kRating, kVerdict, kSimilarity };

std::string to_string(RecordKind kind);

struct RecordEnvelope {
  RecordKind kind = RecordKind::kGeneration;
  nlohmann::json payload;
  std::int64_t seq = 0;
  UtcTime written_at{};
};

struct QueryFilters {
  std::optional<std::string> model_id{};
  std::optional<int> hour{};
  std::optional<std::string> rater_id{};
};

// Append-only JSON-lines persistence under
//   <root>/<experiment_id>/{generations,ratings,verdicts,similarity}.jsonl
// plus config.json, assignments.json and report.json snapshots. Appends are
// fsynced before returning; a torn trailing line (crash mid-write) is
// ignored on read and truncated before the next append.
class Store {
 public:
  Store(std::filesystem::path root, Clock& clock);

  const std::filesystem::path& root() const { return root_; }
  Clock& clock() const { return clock_; }
  std::filesystem::path experiment_dir(const std::string& experiment_id) const;

  // Validates the payload against its kind's invariants (kValidationFailed).
  std::int64_t append(const std::string& experiment_id, RecordKind kind,
                      const nlohmann::json& payload);
  std::int64_t append(const std::string& experiment_id, const GenerationRecord& r);
  std::int64_t append(const std::string& experiment_id, const RatingRecord& r);
  std::int64_t append(const std::string& experiment_id, const JudgeVerdict& v);
  std::int64_t append(const std::string& experiment_id, const SimilarityScore& s);

  std::vector<RecordEnvelope> query(const std::string& experiment_id, RecordKind kind,
                                    const QueryFilters& filters = {}) const;

  std::vector<GenerationRecord> generations(const std::string& experiment_id,
                                            const QueryFilters& filters = {}) const;
  std::vector<RatingRecord> ratings(const std::string& experiment_id) const;
  std::vector<JudgeVerdict> verdicts(const std::string& experiment_id) const;
  std::vector<SimilarityScore> similarities(const std::string& experiment_id) const;

  // kConflict when the experiment already exists with a different config.
  void create_experiment(const ExperimentPlan& plan);
  bool has_experiment(const std::string& experiment_id) const;
  ExperimentPlan load_plan(const std::string& experiment_id) const;
  std::vector<std::string> experiments() const;

  // Atomic write-temp-then-rename of report.json; returns its path.
  std::filesystem::path snapshot_report(const std::string& experiment_id,
                                        const nlohmann::json& report);
  std::optional<std::string> read_report(const std::string& experiment_id) const;

  // Atomic whole-document files inside the experiment (or root) directory.
  void write_document(const std::filesystem::path& path, const std::string& content);
  std::optional<std::string> read_document(const std::filesystem::path& path) const;

 private:
  std::filesystem::path log_path(const std::string& experiment_id, RecordKind kind) const;
  std::int64_t prepare_log(const std::filesystem::path& path);

  std::filesystem::path root_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::map<std::filesystem::path, std::int64_t> last_seq_;
};

// Throws kValidationFailed when `report` lacks the report document shape.
void validate_report_document(const nlohmann::json& report);

}  // namespace slam
