#pragma once
#include <functional>
#include <string>
#include <vector>

#include "dnull/linalg.hpp"

namespace dnull {

using ScalarFn = std::function<double(const Vec&)>;
using VecFn = std::function<Vec(const Vec&)>;
using MatFn = std::function<Mat(const Vec&)>;
using Ten3Fn = std::function<Ten3(const Vec&)>;
using Ten4Fn = std::function<Ten4(const Vec&)>;
using DomainFn = std::function<bool(const Vec&)>;

// Coordinate chart with metric components and exact first partials.
// Second partials are optional; when absent they come from the central-difference
// oracle applied to dg (see geometry.hpp).
struct ChartedMetric {
    int dim = 3;
    std::vector<std::string> coords;
    MatFn g;
    Ten3Fn dg;    // dg(x)(k,i,j) = d_k g_ij
    Ten4Fn d2g;   // optional: d2g(x)(l,k,i,j) = d_l d_k g_ij
    DomainFn valid;
    double scale = 1.0;
    bool lorentzian = false;

    bool is_valid(const Vec& x) const { return !valid || valid(x); }
};

// Scalar field with exact partials through second order; third partials optional
// (when absent, the oracle differentiates hess).
struct ScalarField {
    ScalarFn value;
    VecFn grad;   // coordinate partials d_i f
    MatFn hess;   // d_i d_j f
    Ten3Fn third; // optional: third(x)(k,i,j) = d_k d_i d_j f
};

// Symmetric 2-tensor field (lower indices) with exact first partials.
struct SymTensorField {
    MatFn value;
    Ten3Fn deriv;  // deriv(x)(k,i,j) = d_k T_ij
};

// Vector field (upper index) with exact first partials.
struct VectorField {
    VecFn value;
    MatFn deriv;  // deriv(x)(k,i) = d_k V^i
};

// ---- small combinators used by presets and tests ----

inline ScalarField constant_field(double c, int dim) {
    return ScalarField{
        [c](const Vec&) { return c; },
        [dim](const Vec&) { return Vec(dim); },
        [dim](const Vec&) { return Mat(dim); },
        [dim](const Vec&) { return Ten3(dim); },
    };
}

inline ScalarField affine_field(double c0, const Vec& lin) {
    const int dim = lin.n;
    return ScalarField{
        [c0, lin](const Vec& x) { return c0 + dot(lin, x); },
        [lin](const Vec&) { return lin; },
        [dim](const Vec&) { return Mat(dim); },
        [dim](const Vec&) { return Ten3(dim); },
    };
}

// r = |x| on a Cartesian chart, with closed-form partials through third order.
inline ScalarField radius_field(int dim) {
    auto rof = [dim](const Vec& x) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += x[i] * x[i];
        return std::sqrt(s);
    };
    return ScalarField{
        rof,
        [rof, dim](const Vec& x) {
            const double r = rof(x);
            Vec d(dim);
            for (int i = 0; i < dim; ++i) d[i] = x[i] / r;
            return d;
        },
        [rof, dim](const Vec& x) {
            const double r = rof(x);
            Mat h(dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    h(i, j) = ((i == j) ? 1.0 : 0.0) / r - x[i] * x[j] / (r * r * r);
            return h;
        },
        [rof, dim](const Vec& x) {
            const double r = rof(x);
            const double r3 = r * r * r, r5 = r3 * r * r;
            Ten3 t(dim);
            for (int k = 0; k < dim; ++k)
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) {
                        const double dij = (i == j) ? 1.0 : 0.0;
                        const double dik = (i == k) ? 1.0 : 0.0;
                        const double djk = (j == k) ? 1.0 : 0.0;
                        t(k, i, j) = -(dij * x[k] + dik * x[j] + djk * x[i]) / r3 +
                                     3.0 * x[i] * x[j] * x[k] / r5;
                    }
            return t;
        },
    };
}

inline ScalarField add_fields(const ScalarField& f, const ScalarField& g, double cf = 1.0, double cg = 1.0) {
    ScalarField out;
    out.value = [=](const Vec& x) { return cf * f.value(x) + cg * g.value(x); };
    out.grad = [=](const Vec& x) { return cf * f.grad(x) + cg * g.grad(x); };
    out.hess = [=](const Vec& x) { return cf * f.hess(x) + cg * g.hess(x); };
    if (f.third && g.third) {
        out.third = [=](const Vec& x) {
            Ten3 a = f.third(x), b = g.third(x);
            Ten3 r(a.n);
            for (size_t i = 0; i < r.a.size(); ++i) r.a[i] = cf * a.a[i] + cg * b.a[i];
            return r;
        };
    }
    return out;
}

inline SymTensorField zero_sym_tensor(int dim) {
    return SymTensorField{
        [dim](const Vec&) { return Mat(dim); },
        [dim](const Vec&) { return Ten3(dim); },
    };
}

// k = c * g for a metric with analytic dg.
inline SymTensorField metric_multiple(const ChartedMetric& m, double c) {
    return SymTensorField{
        [m, c](const Vec& x) { return c * m.g(x); },
        [m, c](const Vec& x) {
            Ten3 d = m.dg(x);
            for (size_t i = 0; i < d.a.size(); ++i) d.a[i] *= c;
            return d;
        },
    };
}

}  // namespace dnull
