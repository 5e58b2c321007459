#ifndef CTMDP_RATIONAL_HPP
#define CTMDP_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ctmdp {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Strict base-10 integer parse. The cpp_int string constructor interprets
// leading zeros as octal, so digits are accumulated explicitly.
inline Integer parse_integer_decimal(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  if (i == text.size()) throw ParseError("malformed integer '" + text + "'");
  Integer value = 0;
  for (; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9')
      throw ParseError("malformed integer '" + text + "'");
    value = value * 10 + (text[i] - '0');
  }
  return negative ? Integer(-value) : value;
}

// Parses "p/q", integer, or plain decimal literals ("0.25") exactly.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw ParseError("empty rational literal");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const Integer num = parse_integer_decimal(text.substr(0, slash));
    const Integer den = parse_integer_decimal(text.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + text + "'");
    return Rational(num, den);
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(parse_integer_decimal(text));
  const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  Integer den = 1;
  for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
  return Rational(parse_integer_decimal(digits), den);
}

inline std::string format_rational(const Rational& r) {
  const Integer num = boost::multiprecision::numerator(r);
  const Integer den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Smallest integer >= r.
inline Integer rational_ceil(const Rational& r) {
  const Integer num = boost::multiprecision::numerator(r);
  const Integer den = boost::multiprecision::denominator(r);
  Integer q = num / den;
  if (q * den < num) ++q;
  return q;
}

inline std::uint64_t ceil_to_u64(const Rational& r) {
  Integer c = rational_ceil(r);
  if (c < 0) return 0;
  return c.convert_to<std::uint64_t>();
}

}  // namespace ctmdp

#endif  // CTMDP_RATIONAL_HPP
