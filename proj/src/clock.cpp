#include "slam/clock.h"

#include <cstdio>
#include <ctime>
#include <thread>

#include "slam/error.h"

namespace slam {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kDuplicateModel: return "DuplicateModel";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kUnknownLocalModel: return "UnknownLocalModel";
    case ErrorCode::kUnknownProvider: return "UnknownProvider";
    case ErrorCode::kRunnerUnreachable: return "RunnerUnreachable";
    case ErrorCode::kPullFailed: return "PullFailed";
    case ErrorCode::kRateLimitExhausted: return "RateLimitExhausted";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kAllModelsFailed: return "AllModelsFailed";
    case ErrorCode::kNoRecords: return "NoRecords";
    case ErrorCode::kUnknownAssignment: return "UnknownAssignment";
    case ErrorCode::kUnknownItem: return "UnknownItem";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kParseFailure: return "ParseFailure";
    case ErrorCode::kTooFewResponses: return "TooFewResponses";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kDuplicateEntries: return "DuplicateEntries";
    case ErrorCode::kNoSuccessfulRecords: return "NoSuccessfulRecords";
    case ErrorCode::kInvalidUtilization: return "InvalidUtilization";
    case ErrorCode::kDivisionByZero: return "DivisionByZero";
    case ErrorCode::kValidationFailed: return "ValidationFailed";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kConflict: return "Conflict";
  }
  return "Unknown";
}

UtcTime SystemClock::now() const {
  return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
}

Duration SystemClock::monotonic() const {
  return std::chrono::duration_cast<Duration>(
      std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::sleep_for(Duration d) { std::this_thread::sleep_for(d); }

ManualClock::ManualClock(UtcTime start) : start_(start) {}

UtcTime ManualClock::now() const {
  std::lock_guard lock(mu_);
  return start_ + elapsed_;
}

Duration ManualClock::monotonic() const {
  std::lock_guard lock(mu_);
  return elapsed_;
}

void ManualClock::sleep_for(Duration d) {
  if (d.count() <= 0) return;
  std::lock_guard lock(mu_);
  elapsed_ += d;
}

std::string format_rfc3339(UtcTime t) {
  auto secs = std::chrono::floor<std::chrono::seconds>(t);
  auto micros = (t - secs).count();
  std::time_t tt = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::time_point(secs));
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(micros));
  return buf;
}

UtcTime parse_rfc3339(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi,
                  &sec, &consumed) != 6) {
    throw Error(ErrorCode::kValidationFailed, "bad timestamp '" + s + "'");
  }
  long micros = 0;
  std::size_t pos = static_cast<std::size_t>(consumed);
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    long scale = 100000;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      micros += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
  }
  if (pos >= s.size() || (s[pos] != 'Z' && s[pos] != 'z')) {
    throw Error(ErrorCode::kValidationFailed, "timestamp must be UTC: '" + s + "'");
  }
  using namespace std::chrono;
  sys_days day = year{y} / month{static_cast<unsigned>(mo)} /
                 std::chrono::day{static_cast<unsigned>(d)};
  return time_point_cast<Duration>(day) + hours{h} + minutes{mi} + seconds{sec} +
         microseconds{micros};
}

}  // namespace slam
