#pragma once

// Endpoint interval arithmetic with outward rounding by ulp inflation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace carousel {

template <class T>
struct Interval {
  T lo = 0;
  T hi = 0;

  Interval() = default;
  Interval(T a) : lo(a), hi(a) {}  // NOLINT: points convert implicitly
  Interval(T a, T b) : lo(a), hi(b) {
    if (!(lo <= hi)) throw std::domain_error("interval with lo > hi");
  }

  static T down(T x) { return std::nextafter(x, -std::numeric_limits<T>::infinity()); }
  static T up(T x) { return std::nextafter(x, std::numeric_limits<T>::infinity()); }

  /// Encloses the exact value of num/den.
  static Interval ratio(long long num, long long den) { return Interval(T(num)) / Interval(T(den)); }

  static Interval pi() {
    constexpr T p = std::numbers::pi_v<T>;
    return {down(p), up(p)};
  }

  T width() const { return hi - lo; }
  T mid() const { return lo + (hi - lo) / 2; }
  bool contains(T x) const { return lo <= x && x <= hi; }
  bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
  bool excludes_zero() const { return lo > 0 || hi < 0; }
  /// Smallest absolute value in the interval.
  T mig() const { return (lo <= 0 && hi >= 0) ? T(0) : std::min(std::abs(lo), std::abs(hi)); }
  T mag() const { return std::max(std::abs(lo), std::abs(hi)); }

  friend Interval hull(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
  }

  friend Interval operator+(const Interval& a, const Interval& b) { return {down(a.lo + b.lo), up(a.hi + b.hi)}; }
  friend Interval operator-(const Interval& a, const Interval& b) { return {down(a.lo - b.hi), up(a.hi - b.lo)}; }
  friend Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

  friend Interval operator*(const Interval& a, const Interval& b) {
    T p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return {down(std::min({p1, p2, p3, p4})), up(std::max({p1, p2, p3, p4}))};
  }

  friend Interval operator/(const Interval& a, const Interval& b) {
    if (!b.excludes_zero()) throw std::domain_error("interval division by an interval containing zero");
    T q1 = a.lo / b.lo, q2 = a.lo / b.hi, q3 = a.hi / b.lo, q4 = a.hi / b.hi;
    return {down(std::min({q1, q2, q3, q4})), up(std::max({q1, q2, q3, q4}))};
  }

  Interval& operator+=(const Interval& o) { return *this = *this + o; }
  Interval& operator-=(const Interval& o) { return *this = *this - o; }
  Interval& operator*=(const Interval& o) { return *this = *this * o; }
  Interval& operator/=(const Interval& o) { return *this = *this / o; }

  friend std::ostream& operator<<(std::ostream& os, const Interval& a) {
    return os << '[' << a.lo << ", " << a.hi << ']';
  }
};

template <class T> Interval<T> iadd(const Interval<T>& a, const Interval<T>& b) { return a + b; }
template <class T> Interval<T> isub(const Interval<T>& a, const Interval<T>& b) { return a - b; }
template <class T> Interval<T> imul(const Interval<T>& a, const Interval<T>& b) { return a * b; }
template <class T> Interval<T> idiv(const Interval<T>& a, const Interval<T>& b) { return a / b; }
template <class T> bool excludes_zero(const Interval<T>& a) { return a.excludes_zero(); }

namespace detail {
// libm transcendental results are within one ulp; two steps keep a margin
template <class T> T down2(T x) { return Interval<T>::down(Interval<T>::down(x)); }
template <class T> T up2(T x) { return Interval<T>::up(Interval<T>::up(x)); }
}  // namespace detail

template <class T>
Interval<T> isqrt(const Interval<T>& a) {
  if (a.lo < 0) throw std::domain_error("isqrt of an interval with negative part");
  T lo = std::sqrt(a.lo), hi = std::sqrt(a.hi);
  return {std::max(T(0), Interval<T>::down(lo)), Interval<T>::up(hi)};
}

template <class T>
Interval<T> isqr(const Interval<T>& a) {
  T m = a.mig(), M = a.mag();
  return {Interval<T>::down(m * m), Interval<T>::up(M * M)};
}

/// Integer power; even powers use the magnitude range so [-1,2]^2 = [0,4].
template <class T>
Interval<T> ipow(const Interval<T>& a, int e) {
  if (e < 0) return Interval<T>(1) / ipow(a, -e);
  if (e == 0) return Interval<T>(1);
  auto pow_nonneg = [e](Interval<T> x) {
    Interval<T> r(1);
    for (int i = 0; i < e; ++i) r = r * x;
    return Interval<T>(std::max(T(0), r.lo), r.hi);
  };
  if (a.lo >= 0) return pow_nonneg(a);
  if (a.hi <= 0) {
    Interval<T> p = pow_nonneg(-a);
    return (e % 2 == 0) ? p : -p;
  }
  if (e % 2 == 0) return pow_nonneg(Interval<T>(T(0), a.mag()));
  Interval<T> neg = pow_nonneg(Interval<T>(T(0), -a.lo));
  Interval<T> pos = pow_nonneg(Interval<T>(T(0), a.hi));
  return {-neg.hi, pos.hi};
}

/// Real power of a positive interval.
template <class T>
Interval<T> ipow_real(const Interval<T>& a, T e) {
  if (e == std::floor(e) && std::abs(e) < 64) return ipow(a, static_cast<int>(e));
  if (!(a.lo > 0)) throw std::domain_error("real power of a non-positive interval");
  T p1 = std::pow(a.lo, e), p2 = std::pow(a.hi, e);
  return {std::max(T(0), detail::down2(std::min(p1, p2))), detail::up2(std::max(p1, p2))};
}

/// Sine by monotone branches: extrema at pi/2 + m pi are included whenever
/// their enclosure meets the argument.
template <class T>
Interval<T> isin(const Interval<T>& a) {
  const Interval<T> pi = Interval<T>::pi();
  if (a.width() >= 2 * pi.lo) return {T(-1), T(1)};
  T s1 = std::sin(a.lo), s2 = std::sin(a.hi);
  T lo = std::max(T(-1), detail::down2(std::min(s1, s2)));
  T hi = std::min(T(1), detail::up2(std::max(s1, s2)));
  const T p = std::numbers::pi_v<T>;
  long long m0 = static_cast<long long>(std::floor((a.lo - p / 2) / p)) - 1;
  long long m1 = static_cast<long long>(std::ceil((a.hi - p / 2) / p)) + 1;
  for (long long m = m0; m <= m1; ++m) {
    Interval<T> c = (Interval<T>(T(m)) + Interval<T>(T(0.5))) * pi;
    if (c.hi < a.lo || c.lo > a.hi) continue;
    if (m % 2 == 0) hi = T(1);
    else lo = T(-1);
  }
  return {lo, hi};
}

/// sin(pi * num / den) for integers, reducing num modulo 2 den exactly first.
template <class T>
Interval<T> isin_pi_ratio(long long num, long long den) {
  long long r = num % (2 * den);
  if (r < 0) r += 2 * den;
  if (r == 0 || 2 * r == 2 * den) return Interval<T>(T(0));
  if (2 * r == den) return Interval<T>(T(1));
  if (2 * r == 3 * den) return Interval<T>(T(-1));
  return isin(Interval<T>::ratio(r, den) * Interval<T>::pi());
}

}  // namespace carousel
