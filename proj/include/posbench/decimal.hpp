#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace posbench {

using int128 = __int128;

namespace detail {

constexpr int128 pow10(int n) {
  int128 v = 1;
  for (int i = 0; i < n; ++i) v *= 10;
  return v;
}

// Integer division rounding half away from zero.
constexpr int128 div_round(int128 num, int128 den) {
  const bool neg = (num < 0) != (den < 0);
  int128 a = num < 0 ? -num : num;
  int128 b = den < 0 ? -den : den;
  int128 q = a / b;
  if ((a % b) * 2 >= b) ++q;
  return neg ? -q : q;
}

}  // namespace detail

class DecimalParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fixed-point decimal with `Scale` fractional digits over a 128-bit integer.
// Arithmetic between equal scales is exact; rescale() converts, rounding
// half away from zero when digits are dropped.
template <int Scale>
class Decimal {
  static_assert(Scale >= 0 && Scale <= 30);

 public:
  static constexpr int scale = Scale;
  static constexpr int128 one = detail::pow10(Scale);

  constexpr Decimal() = default;

  static constexpr Decimal from_units(int128 units) {
    Decimal d;
    d.units_ = units;
    return d;
  }
  static constexpr Decimal from_integer(std::int64_t whole) { return from_units(int128(whole) * one); }

  // Parses "12", "-0.5", "4e-7", "1.25E+2". Digits beyond Scale are rounded.
  static Decimal parse(std::string_view text);

  // Nearest representable value; intended for config values such as rates.
  static Decimal from_double(double v);

  constexpr int128 units() const { return units_; }
  double to_double() const { return static_cast<double>(units_) / static_cast<double>(one); }

  template <int Other>
  constexpr Decimal<Other> rescale() const {
    if constexpr (Other >= Scale) {
      return Decimal<Other>::from_units(units_ * detail::pow10(Other - Scale));
    } else {
      return Decimal<Other>::from_units(detail::div_round(units_, detail::pow10(Scale - Other)));
    }
  }

  // Fixed notation with exactly `digits` fractional digits (rounded).
  std::string to_string(int digits = Scale) const;
  // Fixed notation, trailing fractional zeros removed but at least `min_digits` kept.
  std::string to_trimmed_string(int min_digits = 0) const;

  constexpr Decimal operator+(Decimal o) const { return from_units(units_ + o.units_); }
  constexpr Decimal operator-(Decimal o) const { return from_units(units_ - o.units_); }
  constexpr Decimal operator-() const { return from_units(-units_); }
  constexpr Decimal& operator+=(Decimal o) {
    units_ += o.units_;
    return *this;
  }
  constexpr Decimal& operator-=(Decimal o) {
    units_ -= o.units_;
    return *this;
  }
  constexpr Decimal operator*(std::int64_t k) const { return from_units(units_ * k); }
  constexpr bool is_negative() const { return units_ < 0; }
  constexpr bool is_zero() const { return units_ == 0; }

  constexpr auto operator<=>(const Decimal&) const = default;

 private:
  int128 units_ = 0;
};

template <int Scale>
Decimal<Scale> Decimal<Scale>::parse(std::string_view text) {
  auto fail = [&] { throw DecimalParseError("not a decimal number: '" + std::string(text) + "'"); };
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
  int128 mantissa = 0;
  int frac_digits = 0;
  int digits = 0;
  bool in_frac = false;
  bool any_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      any_digit = true;
      if (digits < 36) {
        mantissa = mantissa * 10 + (c - '0');
        if (in_frac) ++frac_digits;
        if (mantissa != 0) ++digits;
      } else if (!in_frac) {
        fail();
      }
    } else if (c == '.' && !in_frac) {
      in_frac = true;
    } else {
      break;
    }
  }
  if (!any_digit) fail();
  int exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') fail();
    ++i;
    bool eneg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
    if (i == text.size()) fail();
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 60) fail();
    }
    if (eneg) exponent = -exponent;
  }
  const int shift = Scale + exponent - frac_digits;
  int128 units = 0;
  if (shift >= 0) {
    if (shift > 30) fail();
    units = mantissa * detail::pow10(shift);
  } else {
    units = -shift > 38 ? 0 : detail::div_round(mantissa, detail::pow10(-shift));
  }
  return from_units(neg ? -units : units);
}

template <int Scale>
Decimal<Scale> Decimal<Scale>::from_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return parse(buf);
}

template <int Scale>
std::string Decimal<Scale>::to_string(int digits) const {
  int128 v = units_;
  if (digits < Scale) {
    v = detail::div_round(v, detail::pow10(Scale - digits));
  } else {
    v *= detail::pow10(digits - Scale);
  }
  const bool neg = v < 0;
  if (neg) v = -v;
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  } while (v != 0);
  if (digits > 0) {
    if (static_cast<int>(s.size()) <= digits) s.insert(0, static_cast<std::size_t>(digits) - s.size() + 1, '0');
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  }
  if (neg) s.insert(0, "-");
  return s;
}

template <int Scale>
std::string Decimal<Scale>::to_trimmed_string(int min_digits) const {
  std::string s = to_string(Scale);
  if constexpr (Scale > 0) {
    const auto dot = s.find('.');
    std::size_t keep = dot + 1 + static_cast<std::size_t>(min_digits);
    while (s.size() > keep && s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

// US dollars at nano-dollar resolution: prices, rates, receipt totals.
using Money = Decimal<9>;
// Intermediate cost amounts; keeps bytes x per-GB rate exact.
using CostAmount = Decimal<18>;

}  // namespace posbench
