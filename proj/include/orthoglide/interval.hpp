#pragma once

// Minimal interval arithmetic for the workspace certifier.
//
// Outward rounding is approximated by epsilon-inflation: every arithmetic
// result is widened by 1e-12 relative (plus one denormal-scale absolute
// tick), which dominates the bounded number of roundings inside each
// enclosure expression.  This is the documented alternative to directed
// rounding; certificates are therefore sound up to the stated inflation.

#include <algorithm>
#include <cmath>
#include <limits>

namespace orthoglide {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double a) { return {a, a}; }
    static Interval make(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

    double mid() const { return 0.5 * (lo + hi); }
    double rad() const { return 0.5 * (hi - lo); }
    double width() const { return hi - lo; }
    double mag() const { return std::max(std::abs(lo), std::abs(hi)); }  // sup |x|
    double mig() const {                                                 // inf |x|
        if (lo > 0.0) return lo;
        if (hi < 0.0) return -hi;
        return 0.0;
    }
    bool contains(double a) const { return lo <= a && a <= hi; }
};

namespace iv {

constexpr double kInflate = 1e-12;

inline Interval widen(double lo, double hi) {
    const double pad_lo = kInflate * std::abs(lo) + std::numeric_limits<double>::denorm_min();
    const double pad_hi = kInflate * std::abs(hi) + std::numeric_limits<double>::denorm_min();
    return {lo - pad_lo, hi + pad_hi};
}

inline Interval add(const Interval& a, const Interval& b) { return widen(a.lo + b.lo, a.hi + b.hi); }
inline Interval sub(const Interval& a, const Interval& b) { return widen(a.lo - b.hi, a.hi - b.lo); }
inline Interval neg(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval mul(const Interval& a, const Interval& b) {
    const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return widen(std::min(std::min(p1, p2), std::min(p3, p4)),
                 std::max(std::max(p1, p2), std::max(p3, p4)));
}

inline Interval sqr(const Interval& a) {
    const double m = a.mag(), g = a.mig();
    return widen(g * g, m * m);
}

/// Quotient a / b for b strictly positive.
inline Interval div_pos(const Interval& a, const Interval& b) {
    const double q1 = a.lo / b.hi, q2 = a.lo / b.lo, q3 = a.hi / b.hi, q4 = a.hi / b.lo;
    return widen(std::min(std::min(q1, q2), std::min(q3, q4)),
                 std::max(std::max(q1, q2), std::max(q3, q4)));
}

/// Square root of the nonnegative part (lower end clamped at zero).
inline Interval sqrt_nonneg(const Interval& a) {
    const double lo = a.lo > 0.0 ? std::sqrt(a.lo) : 0.0;
    const double hi = a.hi > 0.0 ? std::sqrt(a.hi) : 0.0;
    const Interval w = widen(lo, hi);
    return {std::max(0.0, w.lo), w.hi};
}

inline Interval scale(const Interval& a, double c) { return mul(a, Interval::point(c)); }

}  // namespace iv
}  // namespace orthoglide
