#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace slam {

// Exact monetary amount in integer micro-dollars.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }
  // Parses "0.03", "$2700", "-1.5"; at most six fractional digits.
  static Money parse(const std::string& text);
  // Rounds to the nearest micro-dollar, half away from zero.
  static Money from_dollars(double dollars);

  constexpr std::int64_t micros() const { return micros_; }
  double dollars() const { return static_cast<double>(micros_) / 1e6; }

  // Fixed six-decimal representation, e.g. "0.090000".
  std::string to_string() const;

  constexpr Money operator+(Money o) const { return Money(micros_ + o.micros_); }
  constexpr Money operator-(Money o) const { return Money(micros_ - o.micros_); }
  constexpr Money operator*(std::int64_t k) const { return Money(micros_ * k); }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

// Exact ratio of two amounts, reduced to lowest terms.
struct MoneyRatio {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  // ratio * m, exact; throws if the product is not a whole micro-dollar.
  Money times(Money m) const;
};

}  // namespace slam
