#pragma once
#include <cmath>
#include <random>
#include <vector>

#include "dnull/chart.hpp"
#include "dnull/linalg.hpp"

namespace dnull {

// ---------------------------------------------------------------------------
// trig-poly scalar data: c0 + lin.x + x^T Q x + sum amp*cos(omega.x + phase)
// Exact derivatives through third order; used for random analytic (g,k,u,v).
// ---------------------------------------------------------------------------

struct TrigTerm {
    double amp = 0.0;
    Vec omega;
    double phase = 0.0;
};

struct TrigPoly {
    int dim = 3;
    double c0 = 0.0;
    Vec lin;
    Mat quad;  // symmetric
    std::vector<TrigTerm> terms;

    TrigPoly() = default;
    explicit TrigPoly(int n) : dim(n), lin(n), quad(n) {}

    double value(const Vec& x) const {
        double s = c0 + dot(lin, x) + dot(x, matvec(quad, x));
        for (const auto& t : terms) s += t.amp * std::cos(dot(t.omega, x) + t.phase);
        return s;
    }
    Vec grad(const Vec& x) const {
        Vec g = lin + 2.0 * matvec(quad, x);
        for (const auto& t : terms) {
            const double s = t.amp * std::sin(dot(t.omega, x) + t.phase);
            g = g - s * t.omega;
        }
        return g;
    }
    Mat hess(const Vec& x) const {
        Mat h = 2.0 * quad;
        for (const auto& t : terms) {
            const double c = t.amp * std::cos(dot(t.omega, x) + t.phase);
            h = h - c * outer(t.omega, t.omega);
        }
        return h;
    }
    Ten3 third(const Vec& x) const {
        Ten3 out(dim);
        for (const auto& t : terms) {
            const double s = t.amp * std::sin(dot(t.omega, x) + t.phase);
            for (int k = 0; k < dim; ++k)
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j)
                        out(k, i, j) += s * t.omega[k] * t.omega[i] * t.omega[j];
        }
        return out;
    }
    ScalarField field() const {
        TrigPoly self = *this;
        return ScalarField{
            [self](const Vec& x) { return self.value(x); },
            [self](const Vec& x) { return self.grad(x); },
            [self](const Vec& x) { return self.hess(x); },
            [self](const Vec& x) { return self.third(x); },
        };
    }
};

inline DomainFn box_domain(const Vec& lo, const Vec& hi) {
    return [lo, hi](const Vec& x) {
        for (int i = 0; i < lo.n; ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    };
}

inline DomainFn annulus_domain(int dim, double r_min, double r_max) {
    return [dim, r_min, r_max](const Vec& x) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += x[i] * x[i];
        const double r = std::sqrt(s);
        return r >= r_min && r <= r_max;
    };
}

// ---------------------------------------------------------------------------
// basic charts
// ---------------------------------------------------------------------------

inline ChartedMetric flat_cartesian(int dim, DomainFn domain = nullptr) {
    ChartedMetric m;
    m.dim = dim;
    m.coords = dim == 3 ? std::vector<std::string>{"x", "y", "z"} : std::vector<std::string>{"x", "y"};
    m.g = [dim](const Vec&) { return Mat::identity(dim); };
    m.dg = [dim](const Vec&) { return Ten3(dim); };
    m.d2g = [dim](const Vec&) { return Ten4(dim); };
    m.valid = domain;
    return m;
}

// polar chart of flat R^3: g = diag(1, r^2, r^2 sin^2 th), coords (r, th, ph)
inline ChartedMetric flat_spherical3(double r_min = 0.1, double r_max = 100.0) {
    ChartedMetric m;
    m.dim = 3;
    m.coords = {"r", "theta", "phi"};
    m.g = [](const Vec& x) {
        Mat g(3);
        const double r = x[0], st = std::sin(x[1]);
        g(0, 0) = 1.0;
        g(1, 1) = r * r;
        g(2, 2) = r * r * st * st;
        return g;
    };
    m.dg = [](const Vec& x) {
        Ten3 d(3);
        const double r = x[0], st = std::sin(x[1]), ct = std::cos(x[1]);
        d(0, 1, 1) = 2.0 * r;
        d(0, 2, 2) = 2.0 * r * st * st;
        d(1, 2, 2) = r * r * 2.0 * st * ct;
        return d;
    };
    m.d2g = [](const Vec& x) {
        Ten4 d(3);
        const double r = x[0], st = std::sin(x[1]), ct = std::cos(x[1]);
        d(0, 0, 1, 1) = 2.0;
        d(0, 0, 2, 2) = 2.0 * st * st;
        d(0, 1, 2, 2) = d(1, 0, 2, 2) = 2.0 * r * 2.0 * st * ct;
        d(1, 1, 2, 2) = r * r * 2.0 * (ct * ct - st * st);
        return d;
    };
    m.valid = [r_min, r_max](const Vec& x) {
        return x[0] >= r_min && x[0] <= r_max && x[1] > 1e-6 && x[1] < M_PI - 1e-6;
    };
    return m;
}

// round 2-sphere of given radius, coords (th, ph)
inline ChartedMetric sphere2(double radius) {
    ChartedMetric m;
    m.dim = 2;
    m.coords = {"theta", "phi"};
    const double R2 = radius * radius;
    m.g = [R2](const Vec& x) {
        Mat g(2);
        const double st = std::sin(x[0]);
        g(0, 0) = R2;
        g(1, 1) = R2 * st * st;
        return g;
    };
    m.dg = [R2](const Vec& x) {
        Ten3 d(2);
        d(0, 1, 1) = R2 * 2.0 * std::sin(x[0]) * std::cos(x[0]);
        return d;
    };
    m.d2g = [R2](const Vec& x) {
        Ten4 d(2);
        const double st = std::sin(x[0]), ct = std::cos(x[0]);
        d(0, 0, 1, 1) = R2 * 2.0 * (ct * ct - st * st);
        return d;
    };
    m.valid = [](const Vec& x) { return x[0] > 1e-6 && x[0] < M_PI - 1e-6; };
    return m;
}

// Schwarzschild t=const spatial slice in polar-area coords:
// g = diag(1/phi^2, r^2, r^2 sin^2 th), phi^2 = 1 - 2m/r
inline ChartedMetric schwarzschild_spatial(double mass, double r_min = 0.0, double r_max = 1e9) {
    ChartedMetric m;
    m.dim = 3;
    m.coords = {"r", "theta", "phi"};
    const double M = mass;
    if (r_min <= 2.0 * M) r_min = 2.0 * M * (1.0 + 1e-9) + 1e-12;
    m.g = [M](const Vec& x) {
        Mat g(3);
        const double r = x[0], st = std::sin(x[1]);
        g(0, 0) = 1.0 / (1.0 - 2.0 * M / r);
        g(1, 1) = r * r;
        g(2, 2) = r * r * st * st;
        return g;
    };
    m.dg = [M](const Vec& x) {
        Ten3 d(3);
        const double r = x[0], st = std::sin(x[1]), ct = std::cos(x[1]);
        const double phi2 = 1.0 - 2.0 * M / r;
        d(0, 0, 0) = -(2.0 * M / (r * r)) / (phi2 * phi2);
        d(0, 1, 1) = 2.0 * r;
        d(0, 2, 2) = 2.0 * r * st * st;
        d(1, 2, 2) = 2.0 * r * r * st * ct;
        return d;
    };
    m.d2g = [M](const Vec& x) {
        Ten4 d(3);
        const double r = x[0], st = std::sin(x[1]), ct = std::cos(x[1]);
        const double phi2 = 1.0 - 2.0 * M / r;
        const double dphi2 = 2.0 * M / (r * r);
        // d/dr [ -dphi2 / phi2^2 ] = (4M/r^3)/phi2^2 + 2 dphi2^2 / phi2^3
        d(0, 0, 0, 0) = (4.0 * M / (r * r * r)) / (phi2 * phi2) + 2.0 * dphi2 * dphi2 / (phi2 * phi2 * phi2);
        d(0, 0, 1, 1) = 2.0;
        d(0, 0, 2, 2) = 2.0 * st * st;
        d(0, 1, 2, 2) = d(1, 0, 2, 2) = 4.0 * r * st * ct;
        d(1, 1, 2, 2) = 2.0 * r * r * (ct * ct - st * st);
        return d;
    };
    m.valid = [r_min, r_max](const Vec& x) {
        return x[0] > r_min && x[0] <= r_max && x[1] > 1e-6 && x[1] < M_PI - 1e-6;
    };
    m.scale = std::fmax(1.0, 2.0 * M);
    return m;
}

// Minkowski in Cartesian coords (t, x, y, z)
inline ChartedMetric minkowski4() {
    ChartedMetric m;
    m.dim = 4;
    m.coords = {"t", "x", "y", "z"};
    m.lorentzian = true;
    m.g = [](const Vec&) {
        Mat g = Mat::identity(4);
        g(0, 0) = -1.0;
        return g;
    };
    m.dg = [](const Vec&) { return Ten3(4); };
    m.d2g = [](const Vec&) { return Ten4(4); };
    return m;
}

// Schwarzschild in static coords (t, r, th, ph)
inline ChartedMetric schwarzschild_static4(double mass) {
    ChartedMetric m;
    m.dim = 4;
    m.coords = {"t", "r", "theta", "phi"};
    m.lorentzian = true;
    const double M = mass;
    m.g = [M](const Vec& x) {
        Mat g(4);
        const double r = x[1], st = std::sin(x[2]);
        const double phi2 = 1.0 - 2.0 * M / r;
        g(0, 0) = -phi2;
        g(1, 1) = 1.0 / phi2;
        g(2, 2) = r * r;
        g(3, 3) = r * r * st * st;
        return g;
    };
    m.dg = [M](const Vec& x) {
        Ten3 d(4);
        const double r = x[1], st = std::sin(x[2]), ct = std::cos(x[2]);
        const double phi2 = 1.0 - 2.0 * M / r;
        const double dphi2 = 2.0 * M / (r * r);
        d(1, 0, 0) = -dphi2;
        d(1, 1, 1) = -dphi2 / (phi2 * phi2);
        d(1, 2, 2) = 2.0 * r;
        d(1, 3, 3) = 2.0 * r * st * st;
        d(2, 3, 3) = 2.0 * r * r * st * ct;
        return d;
    };
    m.d2g = [M](const Vec& x) {
        Ten4 d(4);
        const double r = x[1], st = std::sin(x[2]), ct = std::cos(x[2]);
        const double phi2 = 1.0 - 2.0 * M / r;
        const double dphi2 = 2.0 * M / (r * r);
        const double ddphi2 = -4.0 * M / (r * r * r);
        d(1, 1, 0, 0) = -ddphi2;
        d(1, 1, 1, 1) = -ddphi2 / (phi2 * phi2) + 2.0 * dphi2 * dphi2 / (phi2 * phi2 * phi2);
        d(1, 1, 2, 2) = 2.0;
        d(1, 1, 3, 3) = 2.0 * st * st;
        d(1, 2, 3, 3) = d(2, 1, 3, 3) = 4.0 * r * st * ct;
        d(2, 2, 3, 3) = 2.0 * r * r * (ct * ct - st * st);
        return d;
    };
    m.valid = [M](const Vec& x) { return x[1] > 2.0 * M * (1.0 + 1e-9); };
    m.scale = std::fmax(1.0, 2.0 * M);
    return m;
}

// ---------------------------------------------------------------------------
// seeded random analytic data for property runs
// ---------------------------------------------------------------------------

inline TrigPoly random_trig_poly(std::mt19937_64& rng, int dim, double amp, int nterms,
                                 double c0 = 0.0, double lin_scale = 0.0) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    TrigPoly p(dim);
    p.c0 = c0;
    for (int i = 0; i < dim; ++i) p.lin[i] = lin_scale * uni(rng);
    for (int t = 0; t < nterms; ++t) {
        TrigTerm term;
        term.amp = amp * (0.3 + 0.7 * std::fabs(uni(rng)));
        term.omega = Vec(dim);
        for (int i = 0; i < dim; ++i) term.omega[i] = 1.5 * uni(rng);
        term.phase = 3.14159 * uni(rng);
        p.terms.push_back(term);
    }
    return p;
}

struct RandomChartData {
    ChartedMetric metric;
    SymTensorField k;
    ScalarField u;
    ScalarField v;
};

// Mildly curved SPD metric, small k, positive u,v with gradients bounded away
// from zero on the box [-1,1]^3.
inline RandomChartData random_analytic_case(unsigned long long seed, double metric_amp = 0.04,
                                            double k_amp = 0.05) {
    std::mt19937_64 rng(seed);
    const int n = 3;
    auto entries = std::make_shared<std::vector<TrigPoly>>();
    auto kentries = std::make_shared<std::vector<TrigPoly>>();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            entries->push_back(random_trig_poly(rng, n, metric_amp, 2));
            kentries->push_back(random_trig_poly(rng, n, k_amp, 2));
        }
    auto idx = [n](int i, int j) {
        if (i > j) std::swap(i, j);
        int ofs = 0;
        for (int r = 0; r < i; ++r) ofs += n - r;
        return ofs + (j - i);
    };

    RandomChartData out;
    out.metric.dim = n;
    out.metric.coords = {"x", "y", "z"};
    out.metric.g = [entries, idx, n](const Vec& x) {
        Mat g = Mat::identity(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double e = (*entries)[idx(i, j)].value(x);
                g(i, j) += e;
                if (i != j) g(j, i) += e;
            }
        return g;
    };
    out.metric.dg = [entries, idx, n](const Vec& x) {
        Ten3 d(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Vec gr = (*entries)[idx(i, j)].grad(x);
                for (int k = 0; k < n; ++k) {
                    d(k, i, j) = gr[k];
                    d(k, j, i) = gr[k];
                }
            }
        return d;
    };
    out.metric.d2g = [entries, idx, n](const Vec& x) {
        Ten4 d(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Mat h = (*entries)[idx(i, j)].hess(x);
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        d(l, k, i, j) = h(l, k);
                        d(l, k, j, i) = h(l, k);
                    }
            }
        return d;
    };
    out.metric.valid = box_domain(Vec{-1.2, -1.2, -1.2}, Vec{1.2, 1.2, 1.2});

    out.k.value = [kentries, idx, n](const Vec& x) {
        Mat kv(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double e = (*kentries)[idx(i, j)].value(x);
                kv(i, j) = e;
                kv(j, i) = e;
            }
        return kv;
    };
    out.k.deriv = [kentries, idx, n](const Vec& x) {
        Ten3 d(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Vec gr = (*kentries)[idx(i, j)].grad(x);
                for (int k = 0; k < n; ++k) {
                    d(k, i, j) = gr[k];
                    d(k, j, i) = gr[k];
                }
            }
        return d;
    };

    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    TrigPoly up = random_trig_poly(rng, n, 0.12, 2, 2.4 + 0.3 * std::fabs(uni(rng)));
    up.lin = Vec{1.0, 0.15 * uni(rng), 0.15 * uni(rng)};
    TrigPoly vp = random_trig_poly(rng, n, 0.10, 2, 2.8 + 0.3 * std::fabs(uni(rng)));
    vp.lin = Vec{0.8, 0.2 * uni(rng), 0.15 * uni(rng)};
    out.u = up.field();
    out.v = vp.field();
    return out;
}

// Uniform lattice over a box, row-major deterministic ordering.
inline std::vector<Vec> box_lattice(const Vec& lo, const Vec& hi, int n_per_axis) {
    std::vector<Vec> pts;
    const int dim = lo.n;
    std::vector<int> idx(dim, 0);
    const int total = static_cast<int>(std::pow(n_per_axis, dim));
    pts.reserve(total);
    for (int t = 0; t < total; ++t) {
        int rem = t;
        Vec x(dim);
        for (int d = dim - 1; d >= 0; --d) {
            const int i = rem % n_per_axis;
            rem /= n_per_axis;
            x[d] = n_per_axis == 1 ? lo[d] : lo[d] + (hi[d] - lo[d]) * i / (n_per_axis - 1.0);
        }
        pts.push_back(x);
    }
    return pts;
}

}  // namespace dnull
