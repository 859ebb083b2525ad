#pragma once
#include <cmath>

#include "dnull/linalg.hpp"

// First-order jets (value + coordinate partials) for assembling flux fields whose
// exact divergence is needed. Product/chain rules are applied term by term; the
// only finite differences live one level deeper (third partials of scalar fields,
// second partials of the metric).

namespace dnull {

struct Jet1 {
    double v = 0.0;
    Vec d;

    Jet1() = default;
    Jet1(double value, const Vec& deriv) : v(value), d(deriv) {}
    static Jet1 constant(double c, int n) { return Jet1(c, Vec(n)); }
};

inline Jet1 operator+(const Jet1& a, const Jet1& b) { return Jet1(a.v + b.v, a.d + b.d); }
inline Jet1 operator-(const Jet1& a, const Jet1& b) { return Jet1(a.v - b.v, a.d - b.d); }
inline Jet1 operator-(const Jet1& a) { return Jet1(-a.v, -1.0 * a.d); }
inline Jet1 operator*(const Jet1& a, const Jet1& b) { return Jet1(a.v * b.v, b.v * a.d + a.v * b.d); }
inline Jet1 operator*(double c, const Jet1& a) { return Jet1(c * a.v, c * a.d); }
inline Jet1 operator+(const Jet1& a, double c) { return Jet1(a.v + c, a.d); }
inline Jet1 operator/(const Jet1& a, const Jet1& b) {
    const double inv = 1.0 / b.v;
    return Jet1(a.v * inv, inv * a.d - (a.v * inv * inv) * b.d);
}
inline Jet1 sqrt(const Jet1& a) {
    const double s = std::sqrt(a.v);
    return Jet1(s, (0.5 / s) * a.d);
}
inline Jet1 abs(const Jet1& a) { return a.v >= 0.0 ? a : -a; }

}  // namespace dnull
