#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

namespace pabs {

/// Closed interval [lo, hi] with finite bounds.
///
/// Every elementary operation widens its result outward by one unit in the
/// last place (two for the transcendental ones), so the true range of the
/// operation on the operand sets is always enclosed.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double point) : lo(point), hi(point) {}  // NOLINT: implicit point promotion
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool is_point() const { return lo == hi; }
  bool valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Interval& iv) {
  return os << '[' << iv.lo << ", " << iv.hi << ']';
}

namespace rounding {

inline double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
inline Interval widen(double lo, double hi) { return {down(lo), up(hi)}; }
inline Interval widen2(double lo, double hi) { return {down(down(lo)), up(up(hi))}; }

}  // namespace rounding

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval iv_neg(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval iv_add(const Interval& a, const Interval& b) {
  return rounding::widen(a.lo + b.lo, a.hi + b.hi);
}

inline Interval iv_sub(const Interval& a, const Interval& b) {
  return rounding::widen(a.lo - b.hi, a.hi - b.lo);
}

inline Interval iv_mul(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo;
  const double p2 = a.lo * b.hi;
  const double p3 = a.hi * b.lo;
  const double p4 = a.hi * b.hi;
  return rounding::widen(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline Interval iv_scale(const Interval& a, double k) {
  return k >= 0.0 ? rounding::widen(a.lo * k, a.hi * k) : rounding::widen(a.hi * k, a.lo * k);
}

/// Division by a strictly positive constant.
inline Interval iv_div_pos(const Interval& a, double k) {
  return rounding::widen(a.lo / k, a.hi / k);
}

inline Interval iv_sqr(const Interval& a) {
  if (a.lo >= 0.0) return rounding::widen(a.lo * a.lo, a.hi * a.hi);
  if (a.hi <= 0.0) return rounding::widen(a.hi * a.hi, a.lo * a.lo);
  const double m = std::max(-a.lo, a.hi);
  return {0.0, rounding::up(m * m)};
}

inline Interval iv_sqrt(const Interval& a) {
  const double lo = std::sqrt(std::max(a.lo, 0.0));
  const double hi = std::sqrt(std::max(a.hi, 0.0));
  return {std::max(0.0, rounding::down(lo)), rounding::up(hi)};
}

inline Interval iv_abs(const Interval& a) {
  if (a.lo >= 0.0) return a;
  if (a.hi <= 0.0) return iv_neg(a);
  return {0.0, std::max(-a.lo, a.hi)};
}

inline Interval iv_max(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval iv_clamp(const Interval& a, double lo, double hi) {
  return {std::clamp(a.lo, lo, hi), std::clamp(a.hi, lo, hi)};
}

namespace detail {

// true when [a, b] contains c + 2 k pi for some integer k
inline bool contains_periodic(double a, double b, double c) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double k = std::ceil((a - c) / two_pi);
  return c + k * two_pi <= b;
}

inline Interval clamp_unit(Interval v) {
  return {std::max(v.lo, -1.0), std::min(v.hi, 1.0)};
}

}  // namespace detail

inline Interval iv_sin(const Interval& a) {
  constexpr double pi = std::numbers::pi;
  if (a.width() >= 2.0 * pi) return {-1.0, 1.0};
  const double sa = std::sin(a.lo);
  const double sb = std::sin(a.hi);
  double lo = std::min(sa, sb);
  double hi = std::max(sa, sb);
  Interval r = rounding::widen2(lo, hi);
  if (detail::contains_periodic(a.lo, a.hi, 0.5 * pi)) r.hi = 1.0;
  if (detail::contains_periodic(a.lo, a.hi, -0.5 * pi)) r.lo = -1.0;
  return detail::clamp_unit(r);
}

inline Interval iv_cos(const Interval& a) {
  constexpr double pi = std::numbers::pi;
  if (a.width() >= 2.0 * pi) return {-1.0, 1.0};
  const double ca = std::cos(a.lo);
  const double cb = std::cos(a.hi);
  Interval r = rounding::widen2(std::min(ca, cb), std::max(ca, cb));
  if (detail::contains_periodic(a.lo, a.hi, 0.0)) r.hi = 1.0;
  if (detail::contains_periodic(a.lo, a.hi, pi)) r.lo = -1.0;
  return detail::clamp_unit(r);
}

inline Interval iv_atan(const Interval& a) {
  return rounding::widen2(std::atan(a.lo), std::atan(a.hi));
}

/// atan2(num, den) for a strictly positive constant denominator; monotone in num.
inline Interval iv_atan2(const Interval& num, double den) {
  return rounding::widen2(std::atan2(num.lo, den), std::atan2(num.hi, den));
}

/// 1 / (1 + x^2), the derivative of atan.
inline Interval iv_atan_slope(const Interval& x) {
  const Interval sq = iv_sqr(x);
  return {rounding::down(1.0 / (1.0 + sq.hi)), rounding::up(1.0 / (1.0 + sq.lo))};
}

/// Axis-aligned box: one interval per dimension.
using Box = std::vector<Interval>;

inline bool box_contains(const Box& box, const std::vector<double>& point) {
  if (box.size() != point.size()) return false;
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!box[i].contains(point[i])) return false;
  return true;
}

/// Splits `iv` at its midpoint.
inline std::pair<Interval, Interval> bisect(const Interval& iv) {
  const double m = iv.mid();
  return {{iv.lo, m}, {m, iv.hi}};
}

}  // namespace pabs
