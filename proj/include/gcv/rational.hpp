#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace gcv {

// Exact rational scalar used for expression coefficients and Puiseux
// exponents/coefficients. Arbitrary precision so repeated arithmetic
// (geometric-series inversion in particular) never overflows.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string rational_to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

/// Parses "7", "-3/4" or "2.5" into an exact rational.
inline std::optional<Rational> rational_from_string(std::string_view s) {
  auto is_digits = [](std::string_view t) {
    if (t.empty()) return false;
    for (char c : t)
      if (c < '0' || c > '9') return false;
    return true;
  };
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  Rational value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::string_view num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!is_digits(num) || !is_digits(den)) return std::nullopt;
    BigInt d{std::string(den)};
    if (d == 0) return std::nullopt;
    value = Rational(BigInt{std::string(num)}, d);
  } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if (!is_digits(ip) && !is_digits(fp)) return std::nullopt;
    if (!ip.empty() && !is_digits(ip)) return std::nullopt;
    if (!fp.empty() && !is_digits(fp)) return std::nullopt;
    BigInt ten = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) ten *= 10;
    BigInt whole = ip.empty() ? BigInt(0) : BigInt{std::string(ip)};
    BigInt frac = fp.empty() ? BigInt(0) : BigInt{std::string(fp)};
    value = Rational(whole * ten + frac, ten);
  } else {
    if (!is_digits(s)) return std::nullopt;
    value = Rational(BigInt{std::string(s)});
  }
  return negative ? Rational(-value) : value;
}

}  // namespace gcv
