#pragma once
#include <cmath>
#include <functional>

#include "dnull/chart.hpp"
#include "dnull/error.hpp"
#include "dnull/linalg.hpp"

// Central-difference oracle used to validate analytic derivative data and to
// supply derivatives one order beyond what a handle carries.

namespace dnull {

inline Vec shifted(const Vec& x, int i, double h) {
    Vec y = x;
    y[i] += h;
    return y;
}

inline void check_margin(const ChartedMetric& m, const Vec& x, double h) {
    for (int i = 0; i < m.dim; ++i) {
        if (!m.is_valid(shifted(x, i, 2.0 * h)) || !m.is_valid(shifted(x, i, -2.0 * h)))
            throw Error(ErrorCode::DomainMargin, "FD stencil leaves the chart domain");
    }
}

inline Vec fd_gradient(const ScalarFn& f, const Vec& x, double h) {
    Vec g(x.n);
    for (int i = 0; i < x.n; ++i)
        g[i] = (f(shifted(x, i, h)) - f(shifted(x, i, -h))) / (2.0 * h);
    return g;
}

// Hessian by direct O(h^2) stencils on f itself.
inline Mat fd_hessian(const ScalarFn& f, const Vec& x, double h) {
    const int n = x.n;
    Mat hess(n);
    const double f0 = f(x);
    for (int i = 0; i < n; ++i) {
        hess(i, i) = (f(shifted(x, i, h)) - 2.0 * f0 + f(shifted(x, i, -h))) / (h * h);
        for (int j = i + 1; j < n; ++j) {
            Vec pp = shifted(shifted(x, i, h), j, h);
            Vec pm = shifted(shifted(x, i, h), j, -h);
            Vec mp = shifted(shifted(x, i, -h), j, h);
            Vec mm = shifted(shifted(x, i, -h), j, -h);
            hess(i, j) = hess(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
        }
    }
    return hess;
}

inline Ten3 fd_deriv_of_matrix(const MatFn& f, const Vec& x, double h) {
    const int n = x.n;
    Ten3 out(n);
    for (int k = 0; k < n; ++k) {
        Mat d = (1.0 / (2.0 * h)) * (f(shifted(x, k, h)) - f(shifted(x, k, -h)));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out(k, i, j) = d(i, j);
    }
    return out;
}

inline Mat fd_deriv_of_vector(const VecFn& f, const Vec& x, double h) {
    const int n = x.n;
    Mat out(n);  // out(k,i) = d_k V^i
    for (int k = 0; k < n; ++k) {
        Vec d = (1.0 / (2.0 * h)) * (f(shifted(x, k, h)) - f(shifted(x, k, -h)));
        for (int i = 0; i < n; ++i) out(k, i) = d[i];
    }
    return out;
}

// d_l dg(k,i,j), symmetrized in (l,k).
inline Ten4 fd_second_metric(const Ten3Fn& dg, const Vec& x, double h) {
    const int n = x.n;
    Ten4 out(n);
    for (int l = 0; l < n; ++l) {
        Ten3 p = dg(shifted(x, l, h));
        Ten3 m = dg(shifted(x, l, -h));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    out(l, k, i, j) = (p(k, i, j) - m(k, i, j)) / (2.0 * h);
    }
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < l; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double s = 0.5 * (out(l, k, i, j) + out(k, l, i, j));
                    out(l, k, i, j) = out(k, l, i, j) = s;
                }
    return out;
}

// d_k d_i d_j f from the analytic Hessian, symmetrized.
inline Ten3 fd_third_from_hessian(const MatFn& hess, const Vec& x, double h) {
    const int n = x.n;
    Ten3 out = fd_deriv_of_matrix(hess, x, h);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) {
                const double s = 0.5 * (out(k, i, j) + out(i, k, j));
                out(k, i, j) = out(i, k, j) = s;
            }
    return out;
}

struct RichardsonCheck {
    double resid_h;
    double resid_h2;
    double ratio;  // resid_h / resid_h2, ~4 for an O(h^2) scheme
};

// Compares an analytic gradient against the oracle at steps h and h/2.
inline RichardsonCheck richardson_gradient(const ScalarFn& f, const VecFn& grad, const Vec& x, double h) {
    auto resid = [&](double step) {
        Vec fd = fd_gradient(f, x, step);
        Vec an = grad(x);
        double r = 0.0;
        for (int i = 0; i < x.n; ++i) r = std::fmax(r, std::fabs(fd[i] - an[i]));
        return r;
    };
    const double r1 = resid(h), r2 = resid(0.5 * h);
    return RichardsonCheck{r1, r2, r2 > 0 ? r1 / r2 : 0.0};
}

}  // namespace dnull
