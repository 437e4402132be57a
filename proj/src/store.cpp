#include "slam/store.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <unistd.h>

#include "slam/error.h"

namespace slam {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<std::uint64_t> g_temp_counter{0};

struct ParsedLog {
  std::vector<RecordEnvelope> envelopes;
  // Byte length of the well-formed prefix.
  std::size_t valid_bytes = 0;
};

RecordKind kind_from_string(const std::string& s) {
  if (s == "generation") return RecordKind::kGeneration;
  if (s == "rating") return RecordKind::kRating;
  if (s == "verdict") return RecordKind::kVerdict;
  if (s == "similarity") return RecordKind::kSimilarity;
  throw Error(ErrorCode::kStorageFailure, "unknown record kind '" + s + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ParsedLog parse_log(const fs::path& path) {
  ParsedLog out;
  if (!fs::exists(path)) return out;
  std::string data = read_file(path);
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    std::string_view line(data.data() + pos, nl - pos);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      if (nl + 1 >= data.size()) break;  // torn final line
      throw Error(ErrorCode::kStorageFailure,
                  path.string() + ": corrupt record at byte " + std::to_string(pos));
    }
    RecordEnvelope env;
    env.kind = kind_from_string(j.at("kind").get<std::string>());
    env.seq = j.at("seq").get<std::int64_t>();
    env.written_at = parse_rfc3339(j.at("written_at").get<std::string>());
    env.payload = j.at("payload");
    out.envelopes.push_back(std::move(env));
    pos = nl + 1;
    out.valid_bytes = pos;
  }
  return out;
}

void fsync_path(const fs::path& path) {
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kStorageFailure, "write failed: " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
}

void validate_payload(RecordKind kind, const json& payload) {
  try {
    switch (kind) {
      case RecordKind::kGeneration: payload.get<GenerationRecord>().validate(); break;
      case RecordKind::kRating: payload.get<RatingRecord>().validate(); break;
      case RecordKind::kVerdict: payload.get<JudgeVerdict>().validate(); break;
      case RecordKind::kSimilarity: payload.get<SimilarityScore>().validate(); break;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidationFailed, std::string("malformed payload: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidationFailed) throw;
    throw Error(ErrorCode::kValidationFailed, e.what());
  }
}

bool matches(const json& payload, const QueryFilters& f) {
  if (f.model_id && payload.value("model_id", std::string()) != *f.model_id) return false;
  if (f.rater_id && payload.value("rater_id", std::string()) != *f.rater_id) return false;
  if (f.hour) {
    auto it = payload.find("hour");
    if (it == payload.end() || !it->is_number_integer() || it->get<int>() != *f.hour) {
      return false;
    }
  }
  return true;
}

template <typename T>
std::vector<T> payloads(const std::vector<RecordEnvelope>& envs) {
  std::vector<T> out;
  out.reserve(envs.size());
  for (const auto& e : envs) out.push_back(e.payload.get<T>());
  return out;
}

}  // namespace

std::string to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::kGeneration: return "generation";
    case RecordKind::kRating: return "rating";
    case RecordKind::kVerdict: return "verdict";
    case RecordKind::kSimilarity: return "similarity";
  }
  return "generation";
}

Store::Store(fs::path root, Clock& clock) : root_(std::move(root)), clock_(clock) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot create " + root_.string());
}

fs::path Store::experiment_dir(const std::string& experiment_id) const {
  if (experiment_id.empty() || experiment_id.find('/') != std::string::npos ||
      experiment_id == "." || experiment_id == "..") {
    throw Error(ErrorCode::kInvalidArgument, "bad experiment id '" + experiment_id + "'");
  }
  return root_ / experiment_id;
}

fs::path Store::log_path(const std::string& experiment_id, RecordKind kind) const {
  static const char* names[] = {"generations.jsonl", "ratings.jsonl", "verdicts.jsonl",
                                "similarity.jsonl"};
  return experiment_dir(experiment_id) / names[static_cast<int>(kind)];
}

std::int64_t Store::prepare_log(const fs::path& path) {
  auto it = last_seq_.find(path);
  if (it != last_seq_.end()) return it->second;
  ParsedLog log = parse_log(path);
  if (fs::exists(path) && fs::file_size(path) != log.valid_bytes) {
    fs::resize_file(path, log.valid_bytes);
  }
  std::int64_t last = log.envelopes.empty() ? 0 : log.envelopes.back().seq;
  last_seq_[path] = last;
  return last;
}

std::int64_t Store::append(const std::string& experiment_id, RecordKind kind,
                           const json& payload) {
  validate_payload(kind, payload);
  fs::path path = log_path(experiment_id, kind);
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot create " + path.parent_path().string());
  std::int64_t seq = prepare_log(path) + 1;
  json line = {{"seq", seq},
               {"kind", to_string(kind)},
               {"written_at", format_rfc3339(clock_.now())},
               {"payload", payload}};
  std::string data = line.dump() + "\n";
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(ErrorCode::kStorageFailure, "cannot open " + path.string());
  try {
    write_all(fd, data, path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kStorageFailure, "fsync failed: " + path.string());
  }
  ::close(fd);
  last_seq_[path] = seq;
  return seq;
}

std::int64_t Store::append(const std::string& experiment_id, const GenerationRecord& r) {
  return append(experiment_id, RecordKind::kGeneration, json(r));
}
std::int64_t Store::append(const std::string& experiment_id, const RatingRecord& r) {
  return append(experiment_id, RecordKind::kRating, json(r));
}
std::int64_t Store::append(const std::string& experiment_id, const JudgeVerdict& v) {
  return append(experiment_id, RecordKind::kVerdict, json(v));
}
std::int64_t Store::append(const std::string& experiment_id, const SimilarityScore& s) {
  return append(experiment_id, RecordKind::kSimilarity, json(s));
}

std::vector<RecordEnvelope> Store::query(const std::string& experiment_id, RecordKind kind,
                                         const QueryFilters& filters) const {
  fs::path path = log_path(experiment_id, kind);
  ParsedLog log;
  {
    std::lock_guard lock(mu_);
    log = parse_log(path);
  }
  std::vector<RecordEnvelope> out;
  for (auto& e : log.envelopes) {
    if (e.kind == kind && matches(e.payload, filters)) out.push_back(std::move(e));
  }
  return out;
}

std::vector<GenerationRecord> Store::generations(const std::string& experiment_id,
                                                 const QueryFilters& filters) const {
  return payloads<GenerationRecord>(query(experiment_id, RecordKind::kGeneration, filters));
}

std::vector<RatingRecord> Store::ratings(const std::string& experiment_id) const {
  return payloads<RatingRecord>(query(experiment_id, RecordKind::kRating));
}

std::vector<JudgeVerdict> Store::verdicts(const std::string& experiment_id) const {
  return payloads<JudgeVerdict>(query(experiment_id, RecordKind::kVerdict));
}

std::vector<SimilarityScore> Store::similarities(const std::string& experiment_id) const {
  return payloads<SimilarityScore>(query(experiment_id, RecordKind::kSimilarity));
}

void Store::create_experiment(const ExperimentPlan& plan) {
  plan.validate();
  fs::path path = experiment_dir(plan.experiment_id) / "config.json";
  std::string content = json(plan).dump(2) + "\n";
  {
    std::lock_guard lock(mu_);
    if (fs::exists(path)) {
      if (read_file(path) == content) return;
      throw Error(ErrorCode::kConflict,
                  "experiment '" + plan.experiment_id + "' already exists");
    }
  }
  write_document(path, content);
}

bool Store::has_experiment(const std::string& experiment_id) const {
  return fs::exists(experiment_dir(experiment_id) / "config.json");
}

ExperimentPlan Store::load_plan(const std::string& experiment_id) const {
  auto doc = read_document(experiment_dir(experiment_id) / "config.json");
  if (!doc) throw Error(ErrorCode::kNotFound, "unknown experiment '" + experiment_id + "'");
  json j = json::parse(*doc, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kStorageFailure, "corrupt config.json");
  return parse_experiment_plan(j);
}

std::vector<std::string> Store::experiments() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "config.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void validate_report_document(const json& report) {
  auto require = [&](const char* key, bool (json::*is)() const noexcept) {
    auto it = report.find(key);
    if (it == report.end() || !((*it).*is)()) {
      throw Error(ErrorCode::kValidationFailed, std::string("report lacks '") + key + "'");
    }
  };
  if (!report.is_object()) throw Error(ErrorCode::kValidationFailed, "report is not an object");
  require("experiment_id", &json::is_string);
  require("rankings", &json::is_object);
  require("agreement", &json::is_object);
  require("latency", &json::is_array);
  require("cost", &json::is_array);
}

fs::path Store::snapshot_report(const std::string& experiment_id, const json& report) {
  validate_report_document(report);
  if (report["experiment_id"].get<std::string>() != experiment_id) {
    throw Error(ErrorCode::kValidationFailed, "report belongs to another experiment");
  }
  fs::path path = experiment_dir(experiment_id) / "report.json";
  write_document(path, report.dump(2) + "\n");
  return path;
}

std::optional<std::string> Store::read_report(const std::string& experiment_id) const {
  return read_document(experiment_dir(experiment_id) / "report.json");
}

void Store::write_document(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << "."
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
           << g_temp_counter.fetch_add(1);
  fs::path tmp = path.parent_path() / tmp_name.str();
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::kStorageFailure, "cannot create " + tmp.string());
  try {
    write_all(fd, content, tmp);
  } catch (...) {
    ::close(fd);
    fs::remove(tmp, ec);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kStorageFailure, "cannot replace " + path.string());
  }
  fsync_path(path.parent_path());
}

std::optional<std::string> Store::read_document(const fs::path& path) const {
  if (!fs::exists(path)) return std::nullopt;
  return read_file(path);
}

}  // namespace slam
