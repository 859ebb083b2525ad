#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "dnull/error.hpp"
#include "dnull/radial.hpp"

// Solver for the a=0 coupled system on radial annuli:
//   Delta u = -sigma trk |u'| + (3|u'||v'| + u'v') / (|u+v| + eps)
//   Delta v = +sigma trk |v'| + (3|u'||v'| + u'v') / (|u+v| + eps)
// with Dirichlet data u = c_pm, v = sigma d_pm + (1-sigma) c_pm - eps, solved by
// damped Picard iteration of the Delta_0^{-1} fixed-point map along the
// sigma-continuation and then down the eps ladder.

namespace dnull {

struct BoundaryData {
    double c_minus = 0.0, c_plus = 0.0, d_minus = 0.0, d_plus = 0.0;

    // The continuation scheme assumes strict ordering; the harmonic seed also
    // makes sense for equal ends (constant seed), so that path relaxes it.
    void validate(bool strict_order = true) const {
        if (!(c_minus > 0.0 && c_plus > 0.0 && d_minus > 0.0 && d_plus > 0.0))
            throw Error(ErrorCode::ValidationError, "boundary data must be positive");
        if (strict_order && (!(c_minus < c_plus) || !(d_minus < d_plus)))
            throw Error(ErrorCode::ValidationError, "boundary data must be ordered c-<c+, d-<d+");
    }
};

struct ContinuationSchedule {
    std::vector<double> sigma_steps = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> eps_ladder = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double damping = 0.5;
    int max_iters = 4000;
    double tol = 1e-10;

    void validate(const BoundaryData& bc) const {
        if (sigma_steps.empty() || sigma_steps.front() != 0.0 || sigma_steps.back() != 1.0)
            throw Error(ErrorCode::ValidationError, "sigma steps must run 0 to 1");
        for (size_t i = 1; i < sigma_steps.size(); ++i)
            if (sigma_steps[i] <= sigma_steps[i - 1])
                throw Error(ErrorCode::ValidationError, "sigma steps must increase");
        if (eps_ladder.empty()) throw Error(ErrorCode::ValidationError, "eps ladder empty");
        for (size_t i = 1; i < eps_ladder.size(); ++i)
            if (!(eps_ladder[i] < eps_ladder[i - 1]) || !(eps_ladder[i] > 0.0))
                throw Error(ErrorCode::ValidationError, "eps ladder must decrease and stay positive");
        if (!(damping > 0.0 && damping <= 1.0))
            throw Error(ErrorCode::ValidationError, "damping must lie in (0,1]");
        // sigma d_pm + (1-sigma) c_pm - eps > 0 for all sigma in [0,1]
        const double floor_v = std::fmin(std::fmin(bc.c_minus, bc.d_minus), std::fmin(bc.c_plus, bc.d_plus));
        if (!(eps_ladder.front() < floor_v))
            throw Error(ErrorCode::ValidationError,
                        "eps too large: sigma d_pm + (1-sigma) c_pm - eps must stay positive");
    }
};

struct LegTrace {
    double sigma = 0.0, eps = 0.0;
    int iterations = 0;
    double final_step = 0.0;
    double bounds_margin = 0.0;  // min distance of u,v to the Lemma-mp bounds
};

struct DiscreteSolution {
    std::vector<double> grid;
    std::vector<double> u, v;
    std::vector<double> residual_u, residual_v;  // nodal residual of the eps=0 system
    double max_residual = 0.0;
    std::vector<LegTrace> trace;
    double min_bounds_margin = 0.0;
};

namespace detail {

// tridiagonal solve of psi'' + H psi' = f with Dirichlet ends
inline std::vector<double> radial_laplace_inverse(const std::vector<double>& H, double dl,
                                                  const std::vector<double>& f, double bc_lo,
                                                  double bc_hi) {
    const int n = static_cast<int>(H.size());
    if (n < 3) throw Error(ErrorCode::ValidationError, "grid needs at least 3 nodes");
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    d[0] = bc_lo;
    d[n - 1] = bc_hi;
    for (int i = 1; i + 1 < n; ++i) {
        a[i] = 1.0 / (dl * dl) - H[i] / (2.0 * dl);
        b[i] = -2.0 / (dl * dl);
        c[i] = 1.0 / (dl * dl) + H[i] / (2.0 * dl);
        d[i] = f[i];
    }
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for (int i = 1; i < n; ++i) {
        const double den = b[i] - a[i] * cp[i - 1];
        if (std::fabs(den) < 1e-300) throw Error(ErrorCode::SingularSystem, "tridiagonal pivot vanished");
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    std::vector<double> x(n);
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
}

inline std::vector<double> nodal_derivative(const std::vector<double>& u, double dl) {
    const int n = static_cast<int>(u.size());
    std::vector<double> du(n);
    for (int i = 1; i + 1 < n; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * dl);
    du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dl);
    du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dl);
    return du;
}

inline std::vector<double> nodal_laplacian(const std::vector<double>& u, const std::vector<double>& H,
                                           double dl) {
    const int n = static_cast<int>(u.size());
    std::vector<double> lap(n, 0.0);
    for (int i = 1; i + 1 < n; ++i)
        lap[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dl * dl) +
                 H[i] * (u[i + 1] - u[i - 1]) / (2.0 * dl);
    return lap;
}

}  // namespace detail

struct RadialSolverGrid {
    std::vector<double> l;
    std::vector<double> H;    // 2 rho'/rho at nodes
    std::vector<double> trk;  // kn + 2 kt at nodes
    double dl = 0.0;

    static RadialSolverGrid build(const RadialIDS& data) {
        RadialSolverGrid g;
        g.l = data.grid();
        g.dl = data.dl();
        g.H.resize(g.l.size());
        g.trk.resize(g.l.size());
        for (size_t i = 0; i < g.l.size(); ++i) {
            const double rho = data.prof.rho(g.l[i]);
            g.H[i] = 2.0 * data.prof.drho(g.l[i]) / rho;
            g.trk[i] = data.prof.kn(g.l[i]) + 2.0 * data.prof.kt(g.l[i]);
        }
        return g;
    }
};

// Delta_0^{-1}: solve the discrete radial Laplacian with given rhs and ends.
inline std::vector<double> discrete_laplace_inverse(const RadialIDS& data, const std::vector<double>& rhs,
                                                    double bc_lo, double bc_hi) {
    RadialSolverGrid g = RadialSolverGrid::build(data);
    return detail::radial_laplace_inverse(g.H, g.dl, rhs, bc_lo, bc_hi);
}

struct SeedPair {
    std::vector<double> u, v;
    double max_pde_residual = 0.0;  // nodal residual of Delta u = 2|u'|^2/u
};

// U0 harmonic with U0 = 1/c_pm, u = 1/U0, v = u - eps.
inline SeedPair harmonic_seed(const RadialIDS& data, const BoundaryData& bc, double eps) {
    bc.validate(/*strict_order=*/false);
    if (!(eps < std::fmin(bc.c_minus, bc.d_minus) / 2.0))
        throw Error(ErrorCode::ValidationError, "seed requires eps < min(c-, d-)/2");
    RadialSolverGrid g = RadialSolverGrid::build(data);
    std::vector<double> zero(g.l.size(), 0.0);
    std::vector<double> U0 =
        detail::radial_laplace_inverse(g.H, g.dl, zero, 1.0 / bc.c_minus, 1.0 / bc.c_plus);
    SeedPair out;
    out.u.resize(g.l.size());
    out.v.resize(g.l.size());
    for (size_t i = 0; i < g.l.size(); ++i) {
        out.u[i] = 1.0 / U0[i];
        out.v[i] = out.u[i] - eps;
        if (!(out.v[i] > 0.0)) throw Error(ErrorCode::NonPositiveSeed, "seed v = u - eps not positive");
    }
    std::vector<double> du = detail::nodal_derivative(out.u, g.dl);
    std::vector<double> lap = detail::nodal_laplacian(out.u, g.H, g.dl);
    for (size_t i = 1; i + 1 < g.l.size(); ++i)
        out.max_pde_residual =
            std::fmax(out.max_pde_residual, std::fabs(lap[i] - 2.0 * du[i] * du[i] / out.u[i]));
    return out;
}

struct StepResult {
    std::vector<double> u, v;
    double step_change = 0.0;
};

inline StepResult fixed_point_step(const RadialSolverGrid& g, const std::vector<double>& u,
                                   const std::vector<double>& v, double sigma, double eps,
                                   const BoundaryData& bc, double lambda) {
    const size_t n = g.l.size();
    std::vector<double> du = detail::nodal_derivative(u, g.dl);
    std::vector<double> dv = detail::nodal_derivative(v, g.dl);
    std::vector<double> su(n, 0.0), sv(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double denom = std::fabs(u[i] + v[i]) + eps;
        if (!(denom > 0.0) || !std::isfinite(denom))
            throw Error(ErrorCode::NaNSource, "source denominator degenerate");
        const double mid = (3.0 * std::fabs(du[i]) * std::fabs(dv[i]) + du[i] * dv[i]) / denom;
        su[i] = -sigma * g.trk[i] * std::fabs(du[i]) + mid;
        sv[i] = +sigma * g.trk[i] * std::fabs(dv[i]) + mid;
    }
    const double bvl = sigma * bc.d_minus + (1.0 - sigma) * bc.c_minus - eps;
    const double bvr = sigma * bc.d_plus + (1.0 - sigma) * bc.c_plus - eps;
    std::vector<double> un = detail::radial_laplace_inverse(g.H, g.dl, su, bc.c_minus, bc.c_plus);
    std::vector<double> vn = detail::radial_laplace_inverse(g.H, g.dl, sv, bvl, bvr);
    StepResult out;
    out.u.resize(n);
    out.v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.u[i] = lambda * un[i] + (1.0 - lambda) * u[i];
        out.v[i] = lambda * vn[i] + (1.0 - lambda) * v[i];
        out.step_change = std::fmax(out.step_change, std::fabs(out.u[i] - u[i]));
        out.step_change = std::fmax(out.step_change, std::fabs(out.v[i] - v[i]));
    }
    return out;
}

inline StepResult fixed_point_step(const RadialIDS& data, const std::vector<double>& u,
                                   const std::vector<double>& v, double sigma, double eps,
                                   const BoundaryData& bc, double lambda = 1.0) {
    return fixed_point_step(RadialSolverGrid::build(data), u, v, sigma, eps, bc, lambda);
}

inline DiscreteSolution continuation_solve(const RadialIDS& data, const BoundaryData& bc,
                                           const ContinuationSchedule& sched) {
    bc.validate();
    sched.validate(bc);
    RadialSolverGrid g = RadialSolverGrid::build(data);
    const double eps0 = sched.eps_ladder.front();
    SeedPair seed = harmonic_seed(data, bc, eps0);

    DiscreteSolution sol;
    sol.grid = g.l;
    sol.u = seed.u;
    sol.v = seed.v;
    sol.min_bounds_margin = 1e300;

    std::vector<std::pair<double, double>> legs;
    for (double s : sched.sigma_steps) legs.push_back({s, eps0});
    for (size_t i = 1; i < sched.eps_ladder.size(); ++i) legs.push_back({1.0, sched.eps_ladder[i]});

    for (auto [sigma, eps] : legs) {
        double lambda = sched.damping;
        double prev_step = 1e300;
        int it = 0;
        int halvings = 0;
        bool converged = false;
        for (; it < sched.max_iters; ++it) {
            StepResult step = fixed_point_step(g, sol.u, sol.v, sigma, eps, bc, lambda);
            sol.u = std::move(step.u);
            sol.v = std::move(step.v);
            if (step.step_change > 2.0 * prev_step && halvings < 6) {
                lambda *= 0.5;
                ++halvings;
            }
            prev_step = step.step_change;
            if (step.step_change < sched.tol) {
                converged = true;
                ++it;
                break;
            }
        }
        if (!converged) {
            LegTrace t{sigma, eps, it, prev_step, 0.0};
            sol.trace.push_back(t);
            throw Error(ErrorCode::NoConvergence, "iteration budget exhausted at sigma=" +
                                                      std::to_string(sigma) + " eps=" +
                                                      std::to_string(eps));
        }
        // Lemma-mp bounds on the accepted leg
        const double vlo = sigma * bc.d_minus + (1.0 - sigma) * bc.c_minus - eps;
        const double vhi = sigma * bc.d_plus + (1.0 - sigma) * bc.c_plus - eps;
        double margin = 1e300;
        for (size_t i = 0; i < g.l.size(); ++i) {
            margin = std::fmin(margin, sol.u[i] - bc.c_minus);
            margin = std::fmin(margin, bc.c_plus - sol.u[i]);
            margin = std::fmin(margin, sol.v[i] - vlo);
            margin = std::fmin(margin, vhi - sol.v[i]);
        }
        if (margin < -1e-8)
            throw Error(ErrorCode::BoundsViolation,
                        "maximum-principle bounds violated beyond 1e-8 on an accepted leg");
        sol.min_bounds_margin = std::fmin(sol.min_bounds_margin, margin);
        LegTrace t{sigma, eps, it, prev_step, margin};
        sol.trace.push_back(t);
    }

    // nodal residual of the eps = 0 system
    std::vector<double> du = detail::nodal_derivative(sol.u, g.dl);
    std::vector<double> dv = detail::nodal_derivative(sol.v, g.dl);
    std::vector<double> lap_u = detail::nodal_laplacian(sol.u, g.H, g.dl);
    std::vector<double> lap_v = detail::nodal_laplacian(sol.v, g.H, g.dl);
    sol.residual_u.assign(g.l.size(), 0.0);
    sol.residual_v.assign(g.l.size(), 0.0);
    for (size_t i = 1; i + 1 < g.l.size(); ++i) {
        const double mid = (3.0 * std::fabs(du[i]) * std::fabs(dv[i]) + du[i] * dv[i]) / (sol.u[i] + sol.v[i]);
        sol.residual_u[i] = lap_u[i] + g.trk[i] * std::fabs(du[i]) - mid;
        sol.residual_v[i] = lap_v[i] - g.trk[i] * std::fabs(dv[i]) - mid;
        sol.max_residual = std::fmax(sol.max_residual, std::fabs(sol.residual_u[i]));
        sol.max_residual = std::fmax(sol.max_residual, std::fabs(sol.residual_v[i]));
    }
    return sol;
}

struct SolverDiagnostics {
    double max_w_residual = 0.0;   // Delta w - sigma trk (|u'| + |v'|)
    double max_h_residual = 0.0;   // the (w,h) reformulation's h equation
    double min_bounds_margin = 0.0;
    bool u_monotone = false, v_monotone = false;
    int small_gradient_nodes = 0;  // |u'| < 1e-12 audit flag
};

inline SolverDiagnostics solution_diagnostics(const RadialIDS& data, const DiscreteSolution& sol,
                                              double sigma, double eps) {
    RadialSolverGrid g = RadialSolverGrid::build(data);
    const size_t n = g.l.size();
    std::vector<double> w(n), h(n);
    for (size_t i = 0; i < n; ++i) {
        w[i] = sol.v[i] - sol.u[i];
        h[i] = 1.0 / (sol.u[i] + sol.v[i] + eps);
    }
    // 5-point stencils: the solver's own 3-point operator is satisfied to the
    // iteration tolerance by construction, so the continuum-equation residual
    // has to be measured at higher order to expose the O(dl^2) solution error
    auto d5 = [&](const std::vector<double>& f, size_t i) {
        return (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * g.dl);
    };
    auto lap5 = [&](const std::vector<double>& f, size_t i) {
        const double second =
            (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) /
            (12.0 * g.dl * g.dl);
        return second + g.H[i] * d5(f, i);
    };

    SolverDiagnostics out;
    out.min_bounds_margin = sol.min_bounds_margin;
    for (size_t i = 2; i + 2 < n; ++i) {
        const double dui = d5(sol.u, i), dvi = d5(sol.v, i), dwi = d5(w, i);
        const double lap_wi = lap5(w, i), lap_hi = lap5(h, i);
        const double pw = std::fabs(dui), qw = std::fabs(dvi);
        out.max_w_residual =
            std::fmax(out.max_w_residual, std::fabs(lap_wi - sigma * g.trk[i] * (pw + qw)));
        // h equation: (1/2) h^{-2} Delta h =
        //   (1/chi)(-3 p |dw|^2 / D + |dw|^2)
        //   + (3/chi) <du,dw>/D^2 (|dw|^2 + 2<du,dw>)
        //   - (sigma trk / 2) (|dw|^2 + 2<du,dw>) / D,   D = p + q, chi = u+v+eps
        const double chi = sol.u[i] + sol.v[i] + eps;
        const double D = pw + qw;
        const double dw2 = dwi * dwi;
        const double udw = dui * dwi;
        const double rhs = (1.0 / chi) * (-3.0 * pw * dw2 / D + dw2) +
                           (3.0 / chi) * (udw / (D * D)) * (dw2 + 2.0 * udw) -
                           0.5 * sigma * g.trk[i] * (dw2 + 2.0 * udw) / D;
        out.max_h_residual =
            std::fmax(out.max_h_residual, std::fabs(0.5 * lap_hi / (h[i] * h[i]) - rhs));
        if (pw < 1e-12 || qw < 1e-12) ++out.small_gradient_nodes;
    }
    out.u_monotone = true;
    out.v_monotone = true;
    for (size_t i = 1; i < n; ++i) {
        if (sol.u[i] < sol.u[i - 1] - 1e-12) out.u_monotone = false;
        if (sol.v[i] < sol.v[i - 1] - 1e-12) out.v_monotone = false;
    }
    return out;
}

}  // namespace dnull
