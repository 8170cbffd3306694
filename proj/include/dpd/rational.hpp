#pragma once

#include <cstdint>
#include <compare>
#include <numeric>
#include <string>

#include "dpd/errors.hpp"

namespace dpd {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw ArithmeticError("integer overflow in " + std::to_string(a) + " + " + std::to_string(b));
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r))
    throw ArithmeticError("integer overflow in " + std::to_string(a) + " - " + std::to_string(b));
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw ArithmeticError("integer overflow in " + std::to_string(a) + " * " + std::to_string(b));
  return r;
}

inline std::int64_t lcm64(std::int64_t a, std::int64_t b) {
  if (a == 0 || b == 0) throw ArithmeticError("lcm of zero");
  return checked_mul(a / std::gcd(a, b), b);
}

// Exact rational on int64, always normalized (den > 0, gcd(num, den) = 1).
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
    if (den_ == 0) throw ConfigError("rational with zero denominator");
    normalize();
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    std::int64_t g = std::gcd(a.den_, b.den_);
    std::int64_t d = checked_mul(a.den_ / g, b.den_);
    std::int64_t n = checked_add(checked_mul(a.num_, b.den_ / g), checked_mul(b.num_, a.den_ / g));
    return Rational(n, d);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    std::int64_t g1 = std::gcd(std::llabs(a.num_), b.den_);
    std::int64_t g2 = std::gcd(std::llabs(b.num_), a.den_);
    return Rational(checked_mul(a.num_ / g1, b.num_ / g2), checked_mul(a.den_ / g2, b.den_ / g1));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw ArithmeticError("rational division by zero");
    return a * Rational(b.den_, b.num_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    // cross-multiplication on normalized values
    return checked_mul(a.num_, b.den_) <=> checked_mul(b.num_, a.den_);
  }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = checked_sub(0, num_);
      den_ = checked_sub(0, den_);
    }
    std::int64_t g = std::gcd(std::llabs(num_), den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Wealth value on the lattice {k/q : k in Z}. Every amount in a run shares the
// same denominator q, so sums and comparisons reduce to integer arithmetic on
// the numerator and stay exact.
struct Wealth {
  std::int64_t num = 0;  // value = num / den
  std::int64_t den = 1;  // run-global lattice denominator q

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Wealth operator+(const Wealth& a, const Wealth& b) {
    check_same(a, b);
    return Wealth{checked_add(a.num, b.num), a.den};
  }
  friend Wealth operator-(const Wealth& a, const Wealth& b) {
    check_same(a, b);
    return Wealth{checked_sub(a.num, b.num), a.den};
  }
  Wealth operator-() const { return Wealth{checked_sub(0, num), den}; }
  Wealth scaled(std::int64_t k) const { return Wealth{checked_mul(num, k), den}; }

  friend bool operator==(const Wealth& a, const Wealth& b) {
    check_same(a, b);
    return a.num == b.num;
  }
  friend std::strong_ordering operator<=>(const Wealth& a, const Wealth& b) {
    check_same(a, b);
    return a.num <=> b.num;
  }
  bool positive() const { return num > 0; }

 private:
  static void check_same(const Wealth& a, const Wealth& b) {
    if (a.den != b.den)
      throw ArithmeticError("wealth lattice mismatch: q=" + std::to_string(a.den) + " vs q=" +
                            std::to_string(b.den));
  }
};

// Exact value numer/denom placed on the 1/q lattice. denom must divide q;
// q is fixed when the configuration is loaded (the lcm of every payoff and
// initial-atom denominator), so this never rounds.
inline Wealth make_amount(std::int64_t numer, std::int64_t denom, std::int64_t q) {
  if (denom <= 0) throw ConfigError("wealth denominator must be positive");
  if (q <= 0) throw ConfigError("lattice denominator must be positive");
  if (q % denom != 0)
    throw ConfigError("denominator " + std::to_string(denom) + " does not divide lattice q=" +
                      std::to_string(q));
  return Wealth{checked_mul(numer, q / denom), q};
}

inline Wealth make_amount(const Rational& r, std::int64_t q) { return make_amount(r.num(), r.den(), q); }

}  // namespace dpd
