#pragma once

#include <gmpxx.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coinflip {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// Accepts "num/den", integers and plain decimals ("0.05"). Decimals are read exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto bad = [&] { return std::invalid_argument("not a rational: '" + s + "'"); };
  if (s.empty()) throw bad();
  auto valid_int = [](const std::string& t) {
    std::size_t i = (!t.empty() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (t[i] < '0' || t[i] > '9') return false;
    return true;
  };
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    std::string n = s.substr(0, slash), d = s.substr(slash + 1);
    if (!valid_int(n) || !valid_int(d)) throw bad();
    Integer den(d[0] == '+' ? d.substr(1) : d, 10);
    if (den == 0) throw bad();
    Rational r(Integer(n[0] == '+' ? n.substr(1) : n, 10), den);
    r.canonicalize();
    return r;
  }
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    if (!valid_int(s)) throw bad();
    return Rational(Integer(s[0] == '+' ? s.substr(1) : s, 10));
  }
  std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
  bool neg = !ip.empty() && ip[0] == '-';
  if (!ip.empty() && (ip[0] == '-' || ip[0] == '+')) ip = ip.substr(1);
  if (ip.empty()) ip = "0";
  if (fp.empty() || !valid_int(ip) || !valid_int(fp) || fp[0] == '-' || fp[0] == '+') throw bad();
  Integer den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, fp.size());
  Rational r(Integer(ip + fp, 10), den);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

// Denominator is a power of two.
inline bool is_dyadic(const Rational& r) { return mpz_popcount(r.get_den().get_mpz_t()) == 1; }

inline std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline double to_double(const Rational& r) { return r.get_d(); }

inline long double to_long_double(const Rational& r) {
  // mpq_get_d truncates to double; good enough for log bracketing, which is then certified exactly
  return static_cast<long double>(r.get_d());
}

inline Rational pow(const Rational& base, unsigned long e) {
  Rational out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), e);
  out.canonicalize();
  return out;
}

inline const Rational& zero() {
  static const Rational z(0);
  return z;
}

inline const Rational& one() {
  static const Rational o(1);
  return o;
}

}  // namespace coinflip
