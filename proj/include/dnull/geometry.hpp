#pragma once
#include <cmath>

#include "dnull/chart.hpp"
#include "dnull/error.hpp"
#include "dnull/fd_oracle.hpp"
#include "dnull/linalg.hpp"

namespace dnull {

// Controls where finite differences replace analytic derivative data.
// Defaults follow the module contract: metric second partials at 1e-5*scale
// unless supplied, field third partials at 1e-4*scale unless supplied.
struct EvalOptions {
    bool force_fd_metric_second = false;
    bool force_fd_third = false;
    double h_metric_second = 0.0;  // 0 -> 1e-5 * chart scale
    double h_third = 0.0;          // 0 -> 1e-4 * chart scale

    double metric_step(const ChartedMetric& m) const {
        return h_metric_second > 0 ? h_metric_second : 1e-5 * m.scale;
    }
    double third_step(const ChartedMetric& m) const {
        return h_third > 0 ? h_third : 1e-4 * m.scale;
    }
    EvalOptions ladder(double factor) const {
        EvalOptions o = *this;
        o.force_fd_metric_second = true;
        o.force_fd_third = true;
        o.h_metric_second = (h_metric_second > 0 ? h_metric_second : 1e-5) * factor;
        o.h_third = (h_third > 0 ? h_third : 1e-4) * factor;
        return o;
    }
};

constexpr double kGradientFloorBase = 1e-10;  // times 1/(chart scale)

// Everything the tensor calculus needs at one point, computed once.
struct GeometryFrame {
    int n = 0;
    Vec x;
    Mat g, gi;
    double detg = 0.0, sqrtg = 0.0;
    Ten3 dg;
    Ten4 d2g;
    Ten3 dgi;      // dgi(m,i,j) = d_m g^{ij}
    Ten3 gamma;    // gamma(k,i,j) = Gamma^k_ij
    Ten4 dgamma;   // dgamma(m,k,i,j) = d_m Gamma^k_ij
    Mat ric;
    double R = 0.0;
};

inline GeometryFrame make_frame(const ChartedMetric& m, const Vec& x, const EvalOptions& opts = {}) {
    GeometryFrame f;
    const int n = m.dim;
    f.n = n;
    f.x = x;
    if (!m.is_valid(x)) throw Error(ErrorCode::OutOfRange, "point outside chart domain");
    f.g = m.g(x);
    if (!invert(f.g, f.gi, &f.detg)) throw Error(ErrorCode::SingularMetric, "metric not invertible at point");
    f.sqrtg = std::sqrt(std::fabs(f.detg));
    f.dg = m.dg(x);
    if (m.d2g && !opts.force_fd_metric_second) {
        f.d2g = m.d2g(x);
    } else {
        f.d2g = fd_second_metric(m.dg, x, opts.metric_step(m));
    }

    f.dgi = Ten3(n);
    for (int mm = 0; mm < n; ++mm) {
        Mat dgm(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dgm(i, j) = f.dg(mm, i, j);
        Mat t = matmul(f.gi, matmul(dgm, f.gi));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) f.dgi(mm, i, j) = -t(i, j);
    }

    f.gamma = Ten3(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += f.gi(k, l) * (f.dg(i, j, l) + f.dg(j, i, l) - f.dg(l, i, j));
                f.gamma(k, i, j) = 0.5 * s;
            }

    f.dgamma = Ten4(n);
    for (int mm = 0; mm < n; ++mm)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < n; ++l) {
                        s += f.dgi(mm, k, l) * (f.dg(i, j, l) + f.dg(j, i, l) - f.dg(l, i, j));
                        s += f.gi(k, l) * (f.d2g(mm, i, j, l) + f.d2g(mm, j, i, l) - f.d2g(mm, l, i, j));
                    }
                    f.dgamma(mm, k, i, j) = 0.5 * s;
                }

    f.ric = Mat(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a) {
                s += f.dgamma(a, a, i, j) - f.dgamma(i, a, a, j);
                for (int b = 0; b < n; ++b)
                    s += f.gamma(a, a, b) * f.gamma(b, i, j) - f.gamma(a, i, b) * f.gamma(b, a, j);
            }
            f.ric(i, j) = s;
        }
    f.R = trace_with(f.gi, f.ric);
    return f;
}

// ---- chart operations ----

inline Ten3 christoffel_symbols(const ChartedMetric& m, const Vec& x, const EvalOptions& opts = {}) {
    const int n = m.dim;
    Mat g = m.g(x), gi;
    if (!invert(g, gi)) throw Error(ErrorCode::SingularMetric, "metric not invertible at point");
    Ten3 dg = m.dg(x);
    Ten3 out(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += gi(k, l) * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
                out(k, i, j) = 0.5 * s;
            }
    (void)opts;
    return out;
}

struct Curvature {
    Mat ric;
    double R;
};

inline Curvature curvature(const ChartedMetric& m, const Vec& x, const EvalOptions& opts = {}) {
    GeometryFrame f = make_frame(m, x, opts);
    return Curvature{f.ric, f.R};
}

inline Mat scalar_hessian_in(const GeometryFrame& f, const ScalarField& u) {
    const int n = f.n;
    Vec du = u.grad(f.x);
    Mat h = u.hess(f.x);
    Mat out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = h(i, j);
            for (int k = 0; k < n; ++k) s -= f.gamma(k, i, j) * du[k];
            out(i, j) = s;
        }
    return out;
}

inline Mat scalar_hessian(const ChartedMetric& m, const ScalarField& u, const Vec& x,
                          const EvalOptions& opts = {}) {
    return scalar_hessian_in(make_frame(m, x, opts), u);
}

inline double laplacian_in(const GeometryFrame& f, const ScalarField& u) {
    return trace_with(f.gi, scalar_hessian_in(f, u));
}

// (div T)_j = g^{il} nabla_i T_lj
inline Vec tensor_divergence_in(const GeometryFrame& f, const SymTensorField& T) {
    const int n = f.n;
    Mat tv = T.value(f.x);
    Ten3 dt = T.deriv(f.x);
    Vec out(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l) {
                double cov = dt(i, l, j);
                for (int mm = 0; mm < n; ++mm)
                    cov -= f.gamma(mm, i, l) * tv(mm, j) + f.gamma(mm, i, j) * tv(l, mm);
                s += f.gi(i, l) * cov;
            }
        out[j] = s;
    }
    return out;
}

inline Vec tensor_divergence(const ChartedMetric& m, const SymTensorField& T, const Vec& x,
                             const EvalOptions& opts = {}) {
    return tensor_divergence_in(make_frame(m, x, opts), T);
}

inline double norm_grad_in(const GeometryFrame& f, const ScalarField& u) {
    Vec du = u.grad(f.x);
    return std::sqrt(dot(du, matvec(f.gi, du)));
}

inline double inner_grad_in(const GeometryFrame& f, const ScalarField& u, const ScalarField& v) {
    return dot(u.grad(f.x), matvec(f.gi, v.grad(f.x)));
}

inline double tensor_norm2_in(const GeometryFrame& f, const Mat& t) {
    const int n = f.n;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) s += f.gi(i, k) * f.gi(j, l) * t(i, j) * t(k, l);
    return s;
}

struct LevelSetFrame {
    Vec nu_up;    // unit normal, upper index
    Vec nu_dn;    // unit normal, lower index
    double H;     // mean curvature of the level set
    Mat A;        // second fundamental form (lower indices)
    double K;     // Gaussian curvature via the Gauss equation
    double area_element;  // co-area density sqrt(det g) * |grad f|
};

inline LevelSetFrame level_set_geometry_in(const GeometryFrame& f, const ScalarField& u,
                                           double gradient_floor) {
    const int n = f.n;
    Vec du = u.grad(f.x);
    Vec du_up = matvec(f.gi, du);
    const double p = std::sqrt(dot(du, du_up));
    if (!(p > gradient_floor))
        throw Error(ErrorCode::DegenerateGradient, "|grad f| at or below gradient floor");
    LevelSetFrame out;
    out.nu_dn = (1.0 / p) * du;
    out.nu_up = (1.0 / p) * du_up;
    Mat hess = scalar_hessian_in(f, u);
    // tangential projector P^i_j = delta^i_j - nu^i nu_j
    Mat proj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) proj(i, j) = ((i == j) ? 1.0 : 0.0) - out.nu_up[i] * out.nu_dn[j];
    Mat A(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) s += proj(a, i) * proj(b, j) * hess(a, b);
            A(i, j) = s / p;
        }
    out.A = A;
    out.H = trace_with(f.gi, A);
    const double A2 = tensor_norm2_in(f, A);
    const double ric_nn = dot(out.nu_up, matvec(f.ric, out.nu_up));
    out.K = 0.5 * (f.R - 2.0 * ric_nn + out.H * out.H - A2);
    out.area_element = f.sqrtg * p;
    return out;
}

inline LevelSetFrame level_set_geometry(const ChartedMetric& m, const ScalarField& u, const Vec& x,
                                        const EvalOptions& opts = {}) {
    GeometryFrame f = make_frame(m, x, opts);
    return level_set_geometry_in(f, u, kGradientFloorBase / m.scale);
}

// Third partials of a scalar field: analytic when carried, else oracle on hess.
inline Ten3 third_partials(const ChartedMetric& m, const ScalarField& u, const Vec& x,
                           const EvalOptions& opts) {
    if (u.third && !opts.force_fd_third) return u.third(x);
    return fd_third_from_hessian(u.hess, x, opts.third_step(m));
}

// Covariant divergence of an assembled vector field from value + coordinate partials:
// div V = d_i V^i + Gamma^m_{mi} V^i.
inline double divergence_from_jet(const GeometryFrame& f, const Vec& value, const Mat& dvalue) {
    double s = 0.0;
    for (int i = 0; i < f.n; ++i) {
        s += dvalue(i, i);
        for (int mm = 0; mm < f.n; ++mm) s += f.gamma(mm, mm, i) * value[i];
    }
    return s;
}

// Oracle divergence: (1/sqrt g) d_i (sqrt g V^i) with FD of the assembled field.
inline double divergence_oracle(const ChartedMetric& m, const VecFn& field, const Vec& x, double h) {
    double s = 0.0;
    for (int i = 0; i < m.dim; ++i) {
        Vec xp = shifted(x, i, h), xm = shifted(x, i, -h);
        const double fp = std::sqrt(std::fabs(determinant(m.g(xp)))) * field(xp)[i];
        const double fm = std::sqrt(std::fabs(determinant(m.g(xm)))) * field(xm)[i];
        s += (fp - fm) / (2.0 * h);
    }
    return s / std::sqrt(std::fabs(determinant(m.g(x))));
}

}  // namespace dnull
