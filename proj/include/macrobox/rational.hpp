#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "macrobox/error.hpp"

namespace macrobox {

/// Exact signed rational, always kept in lowest terms with a positive
/// denominator. Thin value wrapper over GMP's mpq_class.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t n) : v_(static_cast<long>(n)) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw DomainError("rational with zero denominator");
    v_ = mpq_class(mpz_class(static_cast<long>(num)), mpz_class(static_cast<long>(den)));
    v_.canonicalize();
  }
  explicit Rational(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }

  /// Accepts "p/q" or a bare integer "p". Whitespace is rejected.
  static Rational parse(std::string_view text) {
    if (text.empty()) throw DomainError("malformed rational: empty string");
    auto slash = text.find('/');
    auto valid_int = [](std::string_view s, bool allow_sign) {
      if (s.empty()) return false;
      std::size_t i = 0;
      if (allow_sign && (s[0] == '-' || s[0] == '+')) i = 1;
      if (i == s.size()) return false;
      for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
      return true;
    };
    std::string_view num = text.substr(0, slash);
    std::string_view den = slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
    if (!valid_int(num, true) || !valid_int(den, false))
      throw DomainError("malformed rational: '" + std::string(text) + "'");
    std::string n(num);
    if (n[0] == '+') n.erase(0, 1);
    mpz_class zn(n, 10), zd(std::string(den), 10);
    if (zd == 0) throw DomainError("malformed rational: zero denominator in '" + std::string(text) + "'");
    mpq_class q(zn, zd);
    q.canonicalize();
    return Rational(std::move(q));
  }

  /// Canonical "p/q" form; integers print with q = 1.
  std::string str() const { return v_.get_num().get_str() + "/" + v_.get_den().get_str(); }

  double to_double() const { return v_.get_d(); }
  int sign() const { return sgn(v_); }
  bool is_zero() const { return sgn(v_) == 0; }

  const mpq_class& value() const { return v_; }

  Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
  Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
  Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw DomainError("division by zero");
    v_ /= o.v_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.v_)); }

  friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int c = cmp(a.v_, b.v_);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  mpq_class v_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

/// Falling factorial n (n-1) ... (n-k+1); zero when k > n.
inline Rational falling_factorial(std::int64_t n, std::int64_t k) {
  if (k > n) return Rational(0);
  mpz_class out = 1;
  for (std::int64_t t = 0; t < k; ++t) out *= static_cast<long>(n - t);
  return Rational(mpq_class(out));
}

}  // namespace macrobox
