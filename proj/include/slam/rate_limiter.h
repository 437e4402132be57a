#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <vector>

#include "slam/clock.h"

namespace slam {

struct RateLimitPolicy {
  std::int64_t tokens_per_minute = 1000;
  double retry_wait_s = 10.0;
  int max_retries = 3;
  // Output tokens reserved per request when the caller sets no
  // max_output_tokens; the reservation is reconciled with actual usage.
  std::int64_t output_reservation = 256;

  void validate() const;
};

struct TokenSpend {
  UtcTime at{};
  std::int64_t tokens = 0;
};

// Client-side sliding-window limiter: the tokens admitted in any 60 s
// window never exceed tokens_per_minute. Waiting is done through the
// injected clock, so a ManualClock makes it instantaneous and observable.
class TokenRateLimiter {
 public:
  TokenRateLimiter(std::int64_t tokens_per_minute, Clock& clock);

  // Blocks until `tokens` fit, records the spend, returns its ticket.
  // Throws kRateLimitExhausted if `tokens` alone exceeds the budget.
  std::uint64_t acquire(std::int64_t tokens);

  // Replaces a reservation with the tokens actually consumed.
  void reconcile(std::uint64_t ticket, std::int64_t actual_tokens);

  std::vector<TokenSpend> history() const;
  std::int64_t tokens_per_minute() const { return tokens_per_minute_; }

 private:
  struct Entry {
    std::uint64_t ticket;
    UtcTime at;
    std::int64_t tokens;
  };

  std::int64_t tokens_per_minute_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::deque<Entry> window_;
  std::vector<Entry> history_;
  std::uint64_t next_ticket_ = 1;
};

}  // namespace slam
