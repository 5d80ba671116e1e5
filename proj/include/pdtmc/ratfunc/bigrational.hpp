#pragma once

#include <gmpxx.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pdtmc {

/// Exact rational number. GMP keeps it canonical: den > 0, gcd(num, den) = 1.
using BigRational = mpq_class;
using BigInteger = mpz_class;

/// Parses "12", "-3", "0.4", "1/3" exactly (0.4 becomes 2/5). Returns nullopt on bad input.
inline std::optional<BigRational> parse_rational(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  std::size_t frac_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) return std::nullopt;
  BigInteger num(digits, 10);
  BigInteger den = 1;
  for (std::size_t k = 0; k < frac_digits; ++k) den *= 10;
  if (i < text.size()) {
    if (text[i] != '/' || seen_point) return std::nullopt;
    ++i;
    std::string den_digits;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) den_digits.push_back(text[i]);
    if (den_digits.empty() || i != text.size()) return std::nullopt;
    den = BigInteger(den_digits, 10);
    if (den == 0) return std::nullopt;
  }
  BigRational q(num, den);
  q.canonicalize();
  if (negative) q = -q;
  return q;
}

/// Exact conversion of a finite double (every finite binary double is a rational).
inline BigRational rational_from_double(double value) {
  BigRational q;
  q = value;
  return q;
}

/// Nearest double. mpq_get_d truncates, so the truncated value and its upper
/// neighbour are compared exactly.
inline double to_double(const BigRational& q) {
  const double t = q.get_d();
  if (!std::isfinite(t)) return t;
  const double away = std::nextafter(t, q < 0 ? -HUGE_VAL : HUGE_VAL);
  if (!std::isfinite(away)) return t;
  const BigRational lo = abs(q - rational_from_double(t));
  const BigRational hi = abs(rational_from_double(away) - q);
  if (lo < hi) return t;
  if (hi < lo) return away;
  // Tie: round half to even.
  return (std::bit_cast<std::uint64_t>(t) & 1) ? away : t;
}

/// "num" or "num/den".
inline std::string to_string(const BigRational& q) { return q.get_str(10); }

/// Finite decimal expansion if one exists ("0.1", "19/20" -> "0.95"), otherwise "num/den".
inline std::string to_decimal_string(const BigRational& q) {
  BigInteger den = q.get_den();
  BigInteger d = den;
  unsigned twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return to_string(q);
  const unsigned places = twos > fives ? twos : fives;
  if (places == 0) return q.get_num().get_str(10);
  BigInteger scale = 1;
  for (unsigned k = 0; k < places; ++k) scale *= 10;
  BigInteger scaled = q.get_num() * (scale / den);
  const bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.get_str(10);
  if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
  digits.insert(digits.size() - places, ".");
  while (digits.back() == '0') digits.pop_back();
  if (digits.back() == '.') digits.pop_back();
  return negative ? "-" + digits : digits;
}

}  // namespace pdtmc
