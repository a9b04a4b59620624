#pragma once

#include <compare>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

namespace carleman {

/// Exact rational number on 128-bit integers, always stored in lowest terms
/// with a positive denominator. Arithmetic throws std::overflow_error instead
/// of wrapping.
class Rational {
 public:
  using Int = __int128;

  constexpr Rational() = default;
  Rational(Int num) : num_(num), den_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(Int num, Int den) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    normalize();
  }

  Int num() const { return num_; }
  Int den() const { return den_; }

  template <typename Real = double>
  Real to() const {
    return static_cast<Real>(static_cast<long double>(num_) / static_cast<long double>(den_));
  }

  Rational operator-() const { return Rational(neg(num_), den_); }
  Rational abs() const { return num_ < 0 ? -*this : *this; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const Int g = gcd(a.den_, b.den_);
    const Int lhs = mul(a.num_, b.den_ / g);
    const Int rhs = mul(b.num_, a.den_ / g);
    return Rational(add(lhs, rhs), mul(a.den_ / g, b.den_));
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    const Int g1 = gcd(a.num_, b.den_);
    const Int g2 = gcd(b.num_, a.den_);
    return Rational(mul(a.num_ / g1, b.num_ / g2), mul(a.den_ / g2, b.den_ / g1));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const Int l = mul(a.num_, b.den_);
    const Int r = mul(b.num_, a.den_);
    return l < r ? std::strong_ordering::less
                 : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  std::string str() const {
    return den_ == 1 ? int_str(num_) : int_str(num_) + "/" + int_str(den_);
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  static Int gcd(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const Int t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }
  static Int mul(Int a, Int b) {
    Int r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational overflow");
    return r;
  }
  static Int add(Int a, Int b) {
    Int r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational overflow");
    return r;
  }
  static Int neg(Int a) { return mul(a, -1); }

  static std::string int_str(Int v) {
    if (v == 0) return "0";
    const bool negative = v < 0;
    std::string s;
    while (v != 0) {
      const int digit = static_cast<int>(v % 10);
      s.insert(s.begin(), static_cast<char>('0' + (digit < 0 ? -digit : digit)));
      v /= 10;
    }
    return negative ? "-" + s : s;
  }

  void normalize() {
    if (den_ < 0) {
      num_ = neg(num_);
      den_ = neg(den_);
    }
    const Int g = gcd(num_, den_);
    num_ /= g;
    den_ /= g;
  }

  Int num_ = 0;
  Int den_ = 1;
};

}  // namespace carleman
