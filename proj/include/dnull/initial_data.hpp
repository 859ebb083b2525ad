#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "dnull/chart.hpp"
#include "dnull/geometry.hpp"
#include "dnull/quadrature.hpp"

namespace dnull {

struct InitialDataSet {
    ChartedMetric metric;   // dim 3
    SymTensorField k;       // extrinsic curvature, lower indices
    std::string name;
};

struct ConstraintDensities {
    double mu = 0.0;
    Vec J;               // covector
    double J_norm = 0.0; // |J|_g
    double dec_margin = 0.0;
};

inline ConstraintDensities constraint_densities_in(const GeometryFrame& f, const InitialDataSet& ids) {
    ConstraintDensities out;
    Mat kv = ids.k.value(f.x);
    const double trk = trace_with(f.gi, kv);
    const double k2 = tensor_norm2_in(f, kv);
    out.mu = 0.5 * (f.R + trk * trk - k2);

    // J = div(k - trk g); assemble pi = k - trk g with exact first partials
    const int n = f.n;
    Ten3 dk = ids.k.deriv(f.x);
    Vec dtrk(n);
    for (int m = 0; m < n; ++m) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += f.dgi(m, i, j) * kv(i, j) + f.gi(i, j) * dk(m, i, j);
        dtrk[m] = s;
    }
    Mat pi = kv - trk * f.g;
    Ten3 dpi(n);
    for (int m = 0; m < n; ++m)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                dpi(m, i, j) = dk(m, i, j) - dtrk[m] * f.g(i, j) - trk * f.dg(m, i, j);
    out.J = Vec(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l) {
                double cov = dpi(i, l, j);
                for (int m = 0; m < n; ++m)
                    cov -= f.gamma(m, i, l) * pi(m, j) + f.gamma(m, i, j) * pi(l, m);
                s += f.gi(i, l) * cov;
            }
        out.J[j] = s;
    }
    out.J_norm = std::sqrt(std::fmax(dot(out.J, matvec(f.gi, out.J)), 0.0));
    out.dec_margin = out.mu - out.J_norm;
    return out;
}

inline ConstraintDensities constraint_densities(const InitialDataSet& ids, const Vec& x,
                                                const EvalOptions& opts = {}) {
    return constraint_densities_in(make_frame(ids.metric, x, opts), ids);
}

struct NullExpansions {
    double theta_plus = 0.0;
    double theta_minus = 0.0;
    double H = 0.0;
    double tr_sigma_k = 0.0;
};

// theta_pm = H +- tr_Sigma k with tr_Sigma k = tr_g k - k(nu,nu)
inline NullExpansions null_expansions(const InitialDataSet& ids, const ScalarField& level_fn,
                                      const Vec& x, const EvalOptions& opts = {}) {
    GeometryFrame f = make_frame(ids.metric, x, opts);
    LevelSetFrame ls = level_set_geometry_in(f, level_fn, kGradientFloorBase / ids.metric.scale);
    Mat kv = ids.k.value(x);
    const double trk = trace_with(f.gi, kv);
    const double knn = dot(ls.nu_up, matvec(kv, ls.nu_up));
    NullExpansions out;
    out.H = ls.H;
    out.tr_sigma_k = trk - knn;
    out.theta_plus = ls.H + out.tr_sigma_k;
    out.theta_minus = ls.H - out.tr_sigma_k;
    return out;
}

struct SurfaceSlice {
    ParamSurface surface;
    ScalarField level_fn;  // the surface lies in a level set of this function
    int quad_order = 24;
};

enum class HawkingVariant { Riemannian, Spacetime };

inline double hawking_mass(const InitialDataSet& ids, const SurfaceSlice& slice, HawkingVariant variant,
                           const EvalOptions& opts = {}) {
    auto one = [](const Vec&) { return 1.0; };
    const double area = surface_integral_checked(ids.metric, slice.surface, one, slice.quad_order);
    auto integrand = [&](const Vec& x) {
        NullExpansions th = null_expansions(ids, slice.level_fn, x, opts);
        if (variant == HawkingVariant::Spacetime) return th.theta_plus * th.theta_minus;
        return th.H * th.H;
    };
    const double flux = surface_integral_checked(ids.metric, slice.surface, integrand, slice.quad_order);
    return std::sqrt(area / (16.0 * M_PI)) * (1.0 - flux / (16.0 * M_PI));
}

struct DecScanResult {
    double min_margin = 0.0;
    Vec argmin;
    bool satisfies_dec = false;
};

inline DecScanResult dec_margin_scan(const InitialDataSet& ids, const std::vector<Vec>& lattice,
                                     const EvalOptions& opts = {}, double tol = 1e-8) {
    DecScanResult out;
    bool first = true;
    for (const Vec& x : lattice) {
        ConstraintDensities c = constraint_densities(ids, x, opts);
        if (first || c.dec_margin < out.min_margin) {
            out.min_margin = c.dec_margin;
            out.argmin = x;
            first = false;
        }
    }
    out.satisfies_dec = out.min_margin >= -tol;
    return out;
}

}  // namespace dnull
