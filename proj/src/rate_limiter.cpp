#include "slam/rate_limiter.h"

#include <algorithm>

#include "slam/error.h"

namespace slam {

namespace {
constexpr Duration kWindow = std::chrono::seconds(60);
}

void RateLimitPolicy::validate() const {
  if (tokens_per_minute <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "tokens_per_minute must be positive");
  }
  if (retry_wait_s < 0) throw Error(ErrorCode::kInvalidConfig, "retry_wait_s < 0");
  if (max_retries < 0) throw Error(ErrorCode::kInvalidConfig, "max_retries < 0");
  if (output_reservation < 0) {
    throw Error(ErrorCode::kInvalidConfig, "output_reservation < 0");
  }
}

TokenRateLimiter::TokenRateLimiter(std::int64_t tokens_per_minute, Clock& clock)
    : tokens_per_minute_(tokens_per_minute), clock_(clock) {
  if (tokens_per_minute <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "tokens_per_minute must be positive");
  }
}

std::uint64_t TokenRateLimiter::acquire(std::int64_t tokens) {
  if (tokens > tokens_per_minute_) {
    throw Error(ErrorCode::kRateLimitExhausted,
                "request needs " + std::to_string(tokens) + " tokens but the limit is " +
                    std::to_string(tokens_per_minute_) + " per minute");
  }
  for (;;) {
    Duration wait{0};
    {
      std::unique_lock lock(mu_);
      auto now = clock_.now();
      while (!window_.empty() && window_.front().at + kWindow <= now) window_.pop_front();
      std::int64_t used = 0;
      for (const auto& e : window_) used += e.tokens;
      if (used + tokens <= tokens_per_minute_) {
        Entry e{next_ticket_++, now, tokens};
        window_.push_back(e);
        history_.push_back(e);
        return e.ticket;
      }
      // Sleep until enough of the oldest spends leave the window.
      std::int64_t freed = 0;
      for (const auto& e : window_) {
        freed += e.tokens;
        if (used - freed + tokens <= tokens_per_minute_) {
          wait = e.at + kWindow - now;
          break;
        }
      }
    }
    clock_.sleep_for(std::max(wait, Duration(1)));
  }
}

void TokenRateLimiter::reconcile(std::uint64_t ticket, std::int64_t actual_tokens) {
  std::lock_guard lock(mu_);
  for (auto& e : window_) {
    if (e.ticket == ticket) e.tokens = actual_tokens;
  }
  for (auto& e : history_) {
    if (e.ticket == ticket) e.tokens = actual_tokens;
  }
}

std::vector<TokenSpend> TokenRateLimiter::history() const {
  std::lock_guard lock(mu_);
  std::vector<TokenSpend> out;
  out.reserve(history_.size());
  for (const auto& e : history_) out.push_back({e.at, e.tokens});
  return out;
}

}  // namespace slam
