#pragma once

#include <chrono>
#include <mutex>
#include <string>

namespace slam {

using Duration = std::chrono::microseconds;
using UtcTime = std::chrono::sys_time<std::chrono::microseconds>;

// Time source shared by the gateway, runner and store. Production code uses
// SystemClock; tests and simulated runs use ManualClock, whose sleeps only
// advance the virtual time.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual UtcTime now() const = 0;
  // Monotonic reading used for latency measurement.
  virtual Duration monotonic() const = 0;
  virtual void sleep_for(Duration d) = 0;

  void sleep_until(UtcTime t) {
    auto current = now();
    if (t > current) sleep_for(t - current);
  }
};

class SystemClock final : public Clock {
 public:
  UtcTime now() const override;
  Duration monotonic() const override;
  void sleep_for(Duration d) override;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(UtcTime start);

  UtcTime now() const override;
  Duration monotonic() const override;
  void sleep_for(Duration d) override;

  void advance(Duration d) { sleep_for(d); }

 private:
  mutable std::mutex mu_;
  UtcTime start_;
  Duration elapsed_{0};
};

// RFC 3339 UTC with microsecond precision, e.g. "2023-11-13T08:00:00.000000Z".
std::string format_rfc3339(UtcTime t);
UtcTime parse_rfc3339(const std::string& s);

}  // namespace slam
