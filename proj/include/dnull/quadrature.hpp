#pragma once
#include <cmath>
#include <functional>
#include <vector>

#include "dnull/chart.hpp"
#include "dnull/error.hpp"

namespace dnull {

struct QuadRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n.
inline QuadRule gauss_legendre(int n) {
    QuadRule q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        q.nodes[i] = -x;
        q.nodes[n - 1 - i] = x;
        q.weights[i] = q.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return q;
}

// Closed 2-surface embedded in a chart, parametrized by (th, ph) in (0,pi)x(0,2pi).
struct ParamSurface {
    std::function<Vec(double, double)> embed;
    std::function<void(double, double, Vec&, Vec&)> jacobian;  // d(embed)/dth, /dph
};

// coordinate sphere r = r0 in a polar-type chart (r, th, ph)
inline ParamSurface coord_sphere(double r0, int dim = 3) {
    ParamSurface s;
    s.embed = [r0, dim](double th, double ph) {
        Vec x(dim);
        x[0] = r0;
        x[1] = th;
        x[2] = ph;
        return x;
    };
    s.jacobian = [dim](double, double, Vec& dth, Vec& dph) {
        dth = Vec(dim);
        dph = Vec(dim);
        dth[1] = 1.0;
        dph[2] = 1.0;
    };
    return s;
}

// round sphere |x| = r0 embedded in a Cartesian chart
inline ParamSurface cartesian_sphere(double r0) {
    ParamSurface s;
    s.embed = [r0](double th, double ph) {
        return Vec{r0 * std::sin(th) * std::cos(ph), r0 * std::sin(th) * std::sin(ph), r0 * std::cos(th)};
    };
    s.jacobian = [r0](double th, double ph, Vec& dth, Vec& dph) {
        dth = Vec{r0 * std::cos(th) * std::cos(ph), r0 * std::cos(th) * std::sin(ph), -r0 * std::sin(th)};
        dph = Vec{-r0 * std::sin(th) * std::sin(ph), r0 * std::sin(th) * std::cos(ph), 0.0};
    };
    return s;
}

// Integrate f over the surface with product Gauss-Legendre in (th, ph).
inline double surface_integral(const ChartedMetric& m, const ParamSurface& surf,
                               const std::function<double(const Vec&)>& f, int n_theta, int n_phi) {
    QuadRule qt = gauss_legendre(n_theta);
    QuadRule qp = gauss_legendre(n_phi);
    double total = 0.0;
    for (int i = 0; i < n_theta; ++i) {
        const double th = 0.5 * M_PI * (qt.nodes[i] + 1.0);
        const double wt = 0.5 * M_PI * qt.weights[i];
        for (int j = 0; j < n_phi; ++j) {
            const double ph = M_PI * (qp.nodes[j] + 1.0);
            const double wp = M_PI * qp.weights[j];
            Vec x = surf.embed(th, ph);
            Vec e1, e2;
            surf.jacobian(th, ph, e1, e2);
            Mat g = m.g(x);
            const double E = dot(e1, matvec(g, e1));
            const double F = dot(e1, matvec(g, e2));
            const double G = dot(e2, matvec(g, e2));
            const double dA = std::sqrt(std::fmax(E * G - F * F, 0.0));
            total += wt * wp * f(x) * dA;
        }
    }
    return total;
}

// Two-level refinement gate: integral at (n, 2n) must agree to rel_tol.
inline double surface_integral_checked(const ChartedMetric& m, const ParamSurface& surf,
                                       const std::function<double(const Vec&)>& f, int n_base,
                                       double rel_tol = 1e-6) {
    const double coarse = surface_integral(m, surf, f, n_base, n_base);
    const double fine = surface_integral(m, surf, f, 2 * n_base, 2 * n_base);
    const double scale = std::fmax(1.0, std::fabs(fine));
    if (std::fabs(fine - coarse) > rel_tol * scale)
        throw Error(ErrorCode::QuadratureUnderResolved,
                    "surface quadrature not converged between refinement levels");
    return fine;
}

}  // namespace dnull
