#pragma once
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dnull/chart.hpp"
#include "dnull/error.hpp"

// Spherically symmetric pipeline in the geodesic gauge g = dl^2 + rho(l)^2 gS2,
// k = kn dl^2 + kt rho^2 gS2. l is distance from the inner boundary.

namespace dnull {

struct RadialProfile {
    std::function<double(double)> rho, drho, ddrho;
    std::function<double(double)> kn, dkn, kt, dkt;
    double l_min = 0.0, l_max = 1.0;
    std::string name;
};

struct RadialIDS {
    RadialProfile prof;
    int n_nodes = 2001;

    std::vector<double> grid() const {
        std::vector<double> l(n_nodes);
        for (int i = 0; i < n_nodes; ++i)
            l[i] = prof.l_min + (prof.l_max - prof.l_min) * i / (n_nodes - 1.0);
        return l;
    }
    double dl() const { return (prof.l_max - prof.l_min) / (n_nodes - 1.0); }
};

struct RadialGeometry {
    double H = 0.0, R = 0.0;
    double theta_plus = 0.0, theta_minus = 0.0;
    double mu = 0.0, J_r = 0.0;
};

inline RadialGeometry radial_geometry(const RadialIDS& data, double l) {
    const RadialProfile& p = data.prof;
    if (l < p.l_min - 1e-12 || l > p.l_max + 1e-12)
        throw Error(ErrorCode::OutOfRange, "radius outside the profile range");
    RadialGeometry out;
    const double rho = p.rho(l), rhop = p.drho(l), rhopp = p.ddrho(l);
    const double kn = p.kn(l), kt = p.kt(l), ktp = p.dkt(l);
    out.H = 2.0 * rhop / rho;
    out.R = (2.0 / (rho * rho)) * (1.0 - rhop * rhop) - 4.0 * rhopp / rho;
    out.theta_plus = out.H + 2.0 * kt;
    out.theta_minus = out.H - 2.0 * kt;
    out.mu = 0.5 * (out.R + 4.0 * kn * kt + 2.0 * kt * kt);
    out.J_r = -2.0 * ktp - 2.0 * (rhop / rho) * (kt - kn);
    return out;
}

// Largest root of theta_+ * theta_- on the grid (node hit or bisection-refined
// bracket); nullopt when both expansions stay positive.
inline std::optional<double> find_outermost_horizon(const RadialIDS& data) {
    std::vector<double> l = data.grid();
    auto f = [&](double x) {
        RadialGeometry g = radial_geometry(data, x);
        return g.theta_plus * g.theta_minus;
    };
    const double node_tol = 1e-14;
    for (int i = data.n_nodes - 1; i >= 1; --i) {
        const double fi = f(l[i]);
        if (std::fabs(fi) < node_tol) return l[i];
        const double fprev = f(l[i - 1]);
        if (fi * fprev < 0.0) {
            double a = l[i - 1], b = l[i];
            double fa = fprev;
            for (int it = 0; it < 200 && (b - a) > 1e-10 * std::fmax(1.0, std::fabs(b)); ++it) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if (fa * fm <= 0.0) {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return 0.5 * (a + b);
        }
    }
    if (std::fabs(f(l[0])) < node_tol) return l[0];
    return std::nullopt;
}

namespace detail {

// one RK4 step of y' = c(l) * y with c = H/2 (s) or the quadrature row (w)
struct FlowState {
    double s, w;
};

inline FlowState rk4_flow_step(const RadialProfile& p, double l, double h, FlowState y) {
    auto deriv = [&p](double ll, FlowState st) {
        const double H = 2.0 * p.drho(ll) / p.rho(ll);
        return FlowState{0.5 * H * st.s, p.kt(ll) * st.s};
    };
    FlowState k1 = deriv(l, y);
    FlowState k2 = deriv(l + 0.5 * h, {y.s + 0.5 * h * k1.s, y.w + 0.5 * h * k1.w});
    FlowState k3 = deriv(l + 0.5 * h, {y.s + 0.5 * h * k2.s, y.w + 0.5 * h * k2.w});
    FlowState k4 = deriv(l + h, {y.s + h * k3.s, y.w + h * k3.w});
    return FlowState{y.s + h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s),
                     y.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w)};
}

}  // namespace detail

// s solves s' = (H/2) s from l0 with s(l0) = s0 (RK4 on the grid restricted to
// l >= l0). In this gauge the closed form is s = s0 * rho / rho(l0).
inline std::vector<double> solve_rescaled_imcf(const RadialIDS& data, double l0, double s0,
                                               std::vector<double>* grid_out = nullptr) {
    std::vector<double> grid;
    for (double l : data.grid())
        if (l >= l0 - 1e-14) grid.push_back(l);
    if (grid.empty() || std::fabs(grid.front() - l0) > 1e-12) grid.insert(grid.begin(), l0);
    std::vector<double> s(grid.size());
    detail::FlowState y{s0, 0.0};
    s[0] = s0;
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        if (radial_geometry(data, grid[i + 1]).H <= 0.0)
            throw Error(ErrorCode::HorizonInterior, "H <= 0 encountered outside the starting surface");
        y = detail::rk4_flow_step(data.prof, grid[i], h, y);
        s[i + 1] = y.s;
    }
    if (grid_out) *grid_out = grid;
    return s;
}

struct FlowSolution {
    std::vector<double> l;       // grid from l0 to l_max
    std::vector<double> s, w, u, v;
    std::vector<double> theta_plus, theta_minus;
    double l0 = 0.0, s0 = 0.0;
    double max_theta_relation_resid = 0.0;  // | |u'| - theta_- s/4 |, 5-point stencil
};

inline FlowSolution build_double_null_flow(const RadialIDS& data, double l0, double s0) {
    FlowSolution out;
    out.l0 = l0;
    out.s0 = s0;
    for (double l : data.grid())
        if (l >= l0 - 1e-14) out.l.push_back(l);
    if (out.l.empty() || std::fabs(out.l.front() - l0) > 1e-12) out.l.insert(out.l.begin(), l0);
    const size_t n = out.l.size();
    out.s.resize(n);
    out.w.resize(n);
    out.u.resize(n);
    out.v.resize(n);
    out.theta_plus.resize(n);
    out.theta_minus.resize(n);

    detail::FlowState y{s0, 0.0};
    for (size_t i = 0; i < n; ++i) {
        if (i > 0) y = detail::rk4_flow_step(data.prof, out.l[i - 1], out.l[i] - out.l[i - 1], y);
        out.s[i] = y.s;
        out.w[i] = y.w;
        out.u[i] = 0.5 * (y.s - y.w);
        out.v[i] = 0.5 * (y.s + y.w);
        RadialGeometry g = radial_geometry(data, out.l[i]);
        out.theta_plus[i] = g.theta_plus;
        out.theta_minus[i] = g.theta_minus;
        if (i > 0 && (out.theta_minus[i] <= 0.0 || out.theta_plus[i] <= 0.0))
            throw Error(ErrorCode::FlowDegenerate,
                        "theta_+ or theta_- not positive outside the starting surface (u' or v' <= 0)");
        if (!(out.u[i] > 0.0) || !(out.v[i] > 0.0))
            throw Error(ErrorCode::FlowDegenerate, "u or v not positive along the flow");
    }

    // theta relations |u'| = theta_- s / 4, |v'| = theta_+ s / 4, checked with a
    // 5-point derivative of the nodal profiles (order 4, consistent with RK4)
    auto deriv5 = [&](const std::vector<double>& f, size_t i, double h) {
        return (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
    };
    const double h = out.l.size() > 1 ? out.l[1] - out.l[0] : 1.0;
    for (size_t i = 2; i + 2 < n; ++i) {
        const double up = deriv5(out.u, i, h), vp = deriv5(out.v, i, h);
        out.max_theta_relation_resid =
            std::fmax(out.max_theta_relation_resid,
                      std::fabs(std::fabs(up) - 0.25 * out.theta_minus[i] * out.s[i]));
        out.max_theta_relation_resid =
            std::fmax(out.max_theta_relation_resid,
                      std::fabs(std::fabs(vp) - 0.25 * out.theta_plus[i] * out.s[i]));
    }
    return out;
}

struct MonotonicityRow {
    double l = 0.0, area = 0.0, theta_plus = 0.0, theta_minus = 0.0, m_H = 0.0, delta_m_H = 0.0;
};

struct MonotonicityTable {
    std::vector<MonotonicityRow> rows;
    double min_delta = 0.0;
    bool monotone = false;
    double tol = 1e-8;
};

inline MonotonicityTable hawking_profile(const RadialIDS& data, const FlowSolution& flow,
                                         double tol = 1e-8) {
    MonotonicityTable t;
    t.tol = tol;
    t.rows.reserve(flow.l.size());
    for (size_t i = 0; i < flow.l.size(); ++i) {
        MonotonicityRow row;
        row.l = flow.l[i];
        const double rho = data.prof.rho(row.l);
        row.area = 4.0 * M_PI * rho * rho;
        row.theta_plus = flow.theta_plus[i];
        row.theta_minus = flow.theta_minus[i];
        row.m_H = 0.5 * rho * (1.0 - rho * rho * row.theta_plus * row.theta_minus / 4.0);
        row.delta_m_H = i == 0 ? 0.0 : row.m_H - t.rows[i - 1].m_H;
        t.rows.push_back(row);
    }
    t.min_delta = t.rows.size() > 1 ? 1e300 : 0.0;
    for (size_t i = 1; i < t.rows.size(); ++i) t.min_delta = std::fmin(t.min_delta, t.rows[i].delta_m_H);
    t.monotone = t.min_delta >= -tol;
    return t;
}

struct PenroseAreaReport {
    bool horizon_found = false;
    double penrose_gap = 0.0;      // m_H(r_+) - sqrt(|Sigma_0|/16 pi)
    bool area_law_applicable = false;  // kn == kt within 1e-10 on the grid
    double area_law_drift = 0.0;       // relative drift of |Sigma| (u+v)^{-2}
};

inline PenroseAreaReport penrose_and_area_checks(const RadialIDS& data, const FlowSolution& flow,
                                                 const MonotonicityTable& table, bool horizon_found) {
    PenroseAreaReport rep;
    rep.horizon_found = horizon_found;
    if (horizon_found) {
        const double rho0 = data.prof.rho(flow.l0);
        rep.penrose_gap = table.rows.back().m_H - 0.5 * rho0;
    }
    double max_aniso = 0.0;
    for (double l : flow.l)
        max_aniso = std::fmax(max_aniso, std::fabs(data.prof.kn(l) - data.prof.kt(l)));
    rep.area_law_applicable = max_aniso <= 1e-10;
    if (rep.area_law_applicable) {
        // conserved quantity |Sigma| / (u+v)^2  (constant 16 pi in this gauge)
        double q0 = 0.0;
        for (size_t i = 0; i < flow.l.size(); ++i) {
            const double rho = data.prof.rho(flow.l[i]);
            const double q = 4.0 * M_PI * rho * rho / (flow.s[i] * flow.s[i]);
            if (i == 0)
                q0 = q;
            else
                rep.area_law_drift = std::fmax(rep.area_law_drift, std::fabs(q / q0 - 1.0));
        }
    }
    return rep;
}

struct BoundaryFunctional {
    double general_form = 0.0;   // the Corollary bracket with |du|, |dv|
    double theta_form = 0.0;     // (u+v)(1 - (1/16pi) integral theta+ theta-)
    double delta = 0.0;
};

inline BoundaryFunctional boundary_functional(const RadialIDS& data, const FlowSolution& flow,
                                              double l) {
    if (l < flow.l.front() - 1e-12 || l > flow.l.back() + 1e-12)
        throw Error(ErrorCode::OutOfRange, "radius outside the flow range");
    // snap to the nearest node with enough margin for the 5-point stencil
    size_t i = 2;
    double best = 1e300;
    for (size_t j = 2; j + 2 < flow.l.size(); ++j) {
        const double d = std::fabs(flow.l[j] - l);
        if (d < best) {
            best = d;
            i = j;
        }
    }
    const double h = flow.l[1] - flow.l[0];
    auto deriv5 = [&](const std::vector<double>& f) {
        return (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
    };
    const double up = std::fabs(deriv5(flow.u)), vp = std::fabs(deriv5(flow.v));
    const double s = flow.s[i];
    const double rho = data.prof.rho(flow.l[i]);
    const double thp = flow.theta_plus[i], thm = flow.theta_minus[i];

    BoundaryFunctional out;
    // (u+v)[1 - (1/8pi) * 4 pi rho^2 * (2 th+ |du|/s + 2 th- |dv|/s - 8 |du||dv|/s^2)]
    const double integrand = 2.0 * thp * up / s + 2.0 * thm * vp / s - 8.0 * up * vp / (s * s);
    out.general_form = s * (1.0 - 0.5 * rho * rho * integrand);
    out.theta_form = s * (1.0 - rho * rho * thp * thm / 4.0);
    out.delta = out.general_form - out.theta_form;
    return out;
}

// ---------------------------------------------------------------------------
// radial presets
// ---------------------------------------------------------------------------

inline RadialProfile flat_radial_profile(double r_min, double r_max, double umbilic_c = 0.0) {
    RadialProfile p;
    p.rho = [](double l) { return l; };
    p.drho = [](double) { return 1.0; };
    p.ddrho = [](double) { return 0.0; };
    p.kn = [umbilic_c](double) { return umbilic_c; };
    p.dkn = [](double) { return 0.0; };
    p.kt = [umbilic_c](double) { return umbilic_c; };
    p.dkt = [](double) { return 0.0; };
    p.l_min = r_min;
    p.l_max = r_max;
    p.name = umbilic_c == 0.0 ? "flat" : "flat-umbilic";
    return p;
}

namespace detail {

// proper distance from the horizon: ell(rho) with ell(2m) = 0
inline double schwarzschild_ell(double m, double rho) {
    const double s = std::sqrt(rho), q = std::sqrt(std::fmax(rho - 2.0 * m, 0.0));
    return s * q + 2.0 * m * std::log((s + q) / std::sqrt(2.0 * m));
}

inline double schwarzschild_rho_of_ell(double m, double l) {
    if (l <= 0.0) return 2.0 * m;
    double lo = 2.0 * m, hi = 2.0 * m + l + 10.0 * m;
    while (schwarzschild_ell(m, hi) < l) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (schwarzschild_ell(m, mid) < l)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Schwarzschild t=0 slice in the geodesic gauge, starting at area radius rho_min
inline RadialProfile schwarzschild_radial_profile(double m, double rho_min, double rho_max) {
    if (rho_min < 2.0 * m) throw Error(ErrorCode::HorizonContact, "rho_min below the horizon radius");
    RadialProfile p;
    p.rho = [m](double l) { return detail::schwarzschild_rho_of_ell(m, l); };
    p.drho = [m](double l) {
        const double rho = detail::schwarzschild_rho_of_ell(m, l);
        return std::sqrt(std::fmax(1.0 - 2.0 * m / rho, 0.0));
    };
    p.ddrho = [m](double l) {
        const double rho = detail::schwarzschild_rho_of_ell(m, l);
        return m / (rho * rho);
    };
    auto zero = [](double) { return 0.0; };
    p.kn = zero;
    p.dkn = zero;
    p.kt = zero;
    p.dkt = zero;
    p.l_min = detail::schwarzschild_ell(m, rho_min);
    p.l_max = detail::schwarzschild_ell(m, rho_max);
    p.name = "schwarzschild";
    return p;
}

// DEC-certified perturbation of the Schwarzschild profile:
//   kt = eps tanh^3(l/tau) >= 0, kn = kt + rho kt'/rho' + beta kt^2.
// With this kn the momentum density is J = 2 beta rho' kt^2 / rho and
// mu - |J| = 2 kt^2 + 2 rho kt kt'/rho' + 2 beta kt^3 + (1 - 2 beta rho'/rho) kt^2 >= 0;
// the scan in dec_margin_scan certifies it numerically rather than by this bound.
inline RadialProfile dec_bump_radial_profile(double m, double rho_max, double eps = 0.08,
                                             double tau = 1.5, double beta = 1.0) {
    RadialProfile p = schwarzschild_radial_profile(m, 2.0 * m, rho_max);
    auto th = [tau](double l) { return std::tanh(l / tau); };
    auto kt = [eps, th](double l) {
        const double s = th(l);
        return eps * s * s * s;
    };
    auto dkt = [eps, tau, th](double l) {
        const double s = th(l);
        return 3.0 * eps * s * s * (1.0 - s * s) / tau;
    };
    auto ddkt = [eps, tau, th](double l) {
        const double s = th(l);
        return 6.0 * eps * s * (1.0 - s * s) * (1.0 - 2.0 * s * s) / (tau * tau);
    };
    auto rho = p.rho, drho = p.drho, ddrho = p.ddrho;
    auto kn = [kt, dkt, rho, drho, beta](double l) {
        const double k = kt(l);
        if (l < 1e-12) return beta * k * k;  // rho kt'/rho' -> 0 at the throat
        return k + rho(l) * dkt(l) / drho(l) + beta * k * k;
    };
    auto dkn = [kt, dkt, ddkt, rho, drho, ddrho, beta](double l) {
        if (l < 1e-12) return 0.0;
        const double r = rho(l), rp = drho(l), rpp = ddrho(l);
        return dkt(l) + (rp * dkt(l) + r * ddkt(l)) / rp - r * dkt(l) * rpp / (rp * rp) +
               2.0 * beta * kt(l) * dkt(l);
    };
    p.kt = kt;
    p.dkt = dkt;
    p.kn = kn;
    p.dkn = dkn;
    p.name = "schwarzschild-dec-bump";
    return p;
}

// Radialized Minkowski graph slice t = c r^2 on [r_min, r_max]; carries the
// closed-form exact pair u = r + c r^2, v = r - c r^2 for solver tests.
struct MinkowskiRadialData {
    RadialProfile prof;
    double c = 0.0;
    std::function<double(double)> r_of_l;  // area radius from arclength
    double exact_u(double l) const {
        const double r = r_of_l(l);
        return r + c * r * r;
    }
    double exact_v(double l) const {
        const double r = r_of_l(l);
        return r - c * r * r;
    }
};

inline MinkowskiRadialData minkowski_graph_radial(double c, double r_min, double r_max) {
    // ell(r) = int sqrt(1 - 4 c^2 x^2) dx from r_min
    auto F = [c](double x) {
        const double s = 2.0 * c * x;
        if (std::fabs(s) >= 1.0) throw Error(ErrorCode::NotSpacelike, "graph slope reaches 1");
        return 0.5 * (x * std::sqrt(1.0 - s * s) + std::asin(s) / (2.0 * c));
    };
    auto ell = [F, r_min](double r) { return F(r) - F(r_min); };
    auto r_of_l = [ell, c, r_min](double l) {
        double r = r_min + l;
        for (int it = 0; it < 100; ++it) {
            const double fr = ell(r) - l;
            const double dr = std::sqrt(1.0 - 4.0 * c * c * r * r);
            const double step = fr / dr;
            r -= step;
            if (std::fabs(step) < 1e-15 * std::fmax(1.0, r)) break;
        }
        return r;
    };
    auto gamma = [c](double r) { return 1.0 / std::sqrt(1.0 - 4.0 * c * c * r * r); };

    MinkowskiRadialData out;
    out.c = c;
    out.r_of_l = r_of_l;
    RadialProfile p;
    p.rho = r_of_l;
    p.drho = [r_of_l, gamma](double l) { return gamma(r_of_l(l)); };
    p.ddrho = [r_of_l, gamma, c](double l) {
        const double r = r_of_l(l), g = gamma(r);
        return 4.0 * c * c * r * g * g * g * g;
    };
    // k(X,Y) = ghat(hat-nabla_X Y, N), future unit normal
    p.kn = [r_of_l, gamma, c](double l) {
        const double g = gamma(r_of_l(l));
        return -2.0 * c * g * g * g;
    };
    p.dkn = [r_of_l, gamma, c](double l) {
        const double r = r_of_l(l), g = gamma(r);
        return -24.0 * c * c * c * r * g * g * g * g * g * g;
    };
    p.kt = [r_of_l, gamma, c](double l) { return -2.0 * c * gamma(r_of_l(l)); };
    p.dkt = [r_of_l, gamma, c](double l) {
        const double r = r_of_l(l), g = gamma(r);
        return -8.0 * c * c * c * r * g * g * g * g;
    };
    p.l_min = 0.0;
    p.l_max = ell(r_max);
    p.name = "minkowski-graph-radial";
    out.prof = p;
    return out;
}

// equivalent 3-chart of a radial data set, for cross-checks against the
// chart-based tensor calculus
inline ChartedMetric warped_radial_chart(const RadialProfile& p) {
    ChartedMetric m;
    m.dim = 3;
    m.coords = {"l", "theta", "phi"};
    m.g = [p](const Vec& x) {
        Mat g(3);
        const double rho = p.rho(x[0]), st = std::sin(x[1]);
        g(0, 0) = 1.0;
        g(1, 1) = rho * rho;
        g(2, 2) = rho * rho * st * st;
        return g;
    };
    m.dg = [p](const Vec& x) {
        Ten3 d(3);
        const double rho = p.rho(x[0]), rhop = p.drho(x[0]);
        const double st = std::sin(x[1]), ct = std::cos(x[1]);
        d(0, 1, 1) = 2.0 * rho * rhop;
        d(0, 2, 2) = 2.0 * rho * rhop * st * st;
        d(1, 2, 2) = 2.0 * rho * rho * st * ct;
        return d;
    };
    m.d2g = [p](const Vec& x) {
        Ten4 d(3);
        const double rho = p.rho(x[0]), rhop = p.drho(x[0]), rhopp = p.ddrho(x[0]);
        const double st = std::sin(x[1]), ct = std::cos(x[1]);
        d(0, 0, 1, 1) = 2.0 * (rhop * rhop + rho * rhopp);
        d(0, 0, 2, 2) = 2.0 * (rhop * rhop + rho * rhopp) * st * st;
        d(0, 1, 2, 2) = d(1, 0, 2, 2) = 2.0 * rho * rhop * 2.0 * st * ct;
        d(1, 1, 2, 2) = 2.0 * rho * rho * (ct * ct - st * st);
        return d;
    };
    const double lo = p.l_min, hi = p.l_max;
    m.valid = [lo, hi](const Vec& x) {
        return x[0] >= lo && x[0] <= hi && x[1] > 1e-6 && x[1] < M_PI - 1e-6;
    };
    return m;
}

inline SymTensorField warped_radial_k(const RadialProfile& p) {
    SymTensorField k;
    k.value = [p](const Vec& x) {
        Mat kv(3);
        const double rho = p.rho(x[0]), st = std::sin(x[1]);
        kv(0, 0) = p.kn(x[0]);
        kv(1, 1) = p.kt(x[0]) * rho * rho;
        kv(2, 2) = p.kt(x[0]) * rho * rho * st * st;
        return kv;
    };
    k.deriv = [p](const Vec& x) {
        Ten3 d(3);
        const double rho = p.rho(x[0]), rhop = p.drho(x[0]);
        const double kt = p.kt(x[0]), dkt = p.dkt(x[0]);
        const double st = std::sin(x[1]), ct = std::cos(x[1]);
        d(0, 0, 0) = p.dkn(x[0]);
        d(0, 1, 1) = dkt * rho * rho + 2.0 * kt * rho * rhop;
        d(0, 2, 2) = (dkt * rho * rho + 2.0 * kt * rho * rhop) * st * st;
        d(1, 2, 2) = kt * rho * rho * 2.0 * st * ct;
        return d;
    };
    return k;
}

}  // namespace dnull
