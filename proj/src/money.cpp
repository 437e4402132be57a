#include "slam/money.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "slam/error.h"

namespace slam {

Money Money::parse(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  if (i < text.size() && text[i] == '$') ++i;
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool any_digit = false;
  for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
    whole = whole * 10 + (text[i] - '0');
    any_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
      if (frac_digits == 6) {
        throw Error(ErrorCode::kInvalidArgument,
                    "more than six decimal places in '" + text + "'");
      }
      frac = frac * 10 + (text[i] - '0');
      ++frac_digits;
      any_digit = true;
    }
  }
  if (!any_digit || i != text.size()) {
    throw Error(ErrorCode::kInvalidArgument, "not a money amount: '" + text + "'");
  }
  for (int d = frac_digits; d < 6; ++d) frac *= 10;
  std::int64_t micros = whole * 1'000'000 + frac;
  return Money(negative ? -micros : micros);
}

Money Money::from_dollars(double dollars) {
  return Money(static_cast<std::int64_t>(std::llround(dollars * 1e6)));
}

std::string Money::to_string() const {
  std::int64_t abs = micros_ < 0 ? -micros_ : micros_;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", micros_ < 0 ? "-" : "",
                static_cast<long long>(abs / 1'000'000),
                static_cast<long long>(abs % 1'000'000));
  return buf;
}

Money MoneyRatio::times(Money m) const {
  __int128 product = static_cast<__int128>(numerator) * m.micros();
  if (product % denominator != 0) {
    throw Error(ErrorCode::kInvalidArgument, "ratio product is not a whole micro-dollar");
  }
  return Money::from_micros(static_cast<std::int64_t>(product / denominator));
}

}  // namespace slam
