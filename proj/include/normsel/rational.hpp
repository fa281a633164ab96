#ifndef NORMSEL_RATIONAL_HPP
#define NORMSEL_RATIONAL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace normsel {

/// Exact rational on 64-bit numerator/denominator, always normalized
/// (den > 0, gcd(|num|, den) == 1). Arithmetic goes through 128-bit
/// intermediates and throws std::overflow_error if a reduced result
/// does not fit back into 64 bits.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t n) : num_(n) {}
  Rational(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational operator-() const { return Rational(-num_, den_); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const;
  bool operator<=(const Rational& o) const { return *this < o || *this == o; }
  bool operator>(const Rational& o) const { return o < *this; }
  bool operator>=(const Rational& o) const { return o <= *this; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;              // "num/den", den always printed
  static Rational parse(const std::string&);  // accepts "n" or "n/d"

 private:
  static Rational make(__int128 n, __int128 d);
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline __int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline Rational Rational::make(__int128 n, __int128 d) {
  if (d == 0) throw std::invalid_argument("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
    throw std::overflow_error("rational: value exceeds 64-bit range");
  Rational r;
  r.num_ = static_cast<std::int64_t>(n);
  r.den_ = static_cast<std::int64_t>(d);
  return r;
}

inline Rational Rational::operator+(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_,
              static_cast<__int128>(den_) * o.den_);
}

inline Rational Rational::operator-(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.den_ - static_cast<__int128>(o.num_) * den_,
              static_cast<__int128>(den_) * o.den_);
}

inline Rational Rational::operator*(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
}

inline Rational Rational::operator/(const Rational& o) const {
  if (o.num_ == 0) throw std::invalid_argument("rational: division by zero");
  return make(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
}

inline bool Rational::operator<(const Rational& o) const {
  return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
}

inline std::string Rational::to_string() const {
  return std::to_string(num_) + "/" + std::to_string(den_);
}

inline Rational Rational::parse(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(text));
    return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw std::invalid_argument("rational: cannot parse '" + text + "'");
  }
}

}  // namespace normsel

#endif
