#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace carnot {

/// Exact rational arithmetic for layer weights. Weight additivity checks
/// (w_k == w_i + w_j) must be exact; doing them in floating point breaks for
/// weights like 1/3.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t num) : num_(num), den_(1) {}  // NOLINT: implicit by design
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
    normalize();
  }

  /// Recovers a small-denominator rational from a double (continued
  /// fractions). Used when reading weights from JSON.
  static Rational from_double(double x, std::int64_t max_den = 1000000) {
    if (!std::isfinite(x)) throw std::invalid_argument("Rational: non-finite value");
    const bool neg = x < 0;
    double v = std::abs(x);
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = v;
    for (int iter = 0; iter < 64; ++iter) {
      const double fl = std::floor(frac);
      if (fl > static_cast<double>(std::numeric_limits<std::int64_t>::max() / 4)) break;
      const auto a = static_cast<std::int64_t>(fl);
      std::int64_t p2 = a * p1 + p0;
      std::int64_t q2 = a * q1 + q0;
      if (q2 > max_den) break;
      p0 = p1; q0 = q1; p1 = p2; q1 = q2;
      const double rem = frac - fl;
      if (rem < 1e-13) break;
      frac = 1.0 / rem;
    }
    if (q1 == 0) throw std::invalid_argument("Rational: cannot approximate " + std::to_string(x));
    return Rational(neg ? -p1 : p1, q1);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool positive() const { return num_ > 0; }
  bool is_integer() const { return den_ == 1; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num_ * b.den_ < b.num_ * a.den_;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  void normalize() {
    if (den_ < 0) { num_ = -num_; den_ = -den_; }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) { num_ /= g; den_ /= g; }
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_;
  std::int64_t den_;
};

}  // namespace carnot
