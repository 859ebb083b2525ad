#pragma once
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "dnull/geometry.hpp"
#include "dnull/initial_data.hpp"
#include "dnull/jets.hpp"

// Assembly of the divergence identities: modified Hessians, flux fields Y and Z,
// Stern's identity, the Riemannian a-family, and the charged variant.
//
// Flux divergences are exact products/chain rules over the assembled terms
// (first-order jets); the only finite differences sit one level deeper (third
// partials of u,v and second partials of g), per the module contract. The
// independent cross-check is divergence_oracle on the assembled values.

namespace dnull {

struct FieldJets {
    double val = 0.0;
    Vec d;
    Mat dd;
    Ten3 ddd;
};

inline FieldJets field_jets(const ChartedMetric& m, const ScalarField& u, const Vec& x,
                            const EvalOptions& opts) {
    FieldJets out;
    out.val = u.value(x);
    out.d = u.grad(x);
    out.dd = u.hess(x);
    out.ddd = third_partials(m, u, x, opts);
    return out;
}

// value + first and second coordinate partials of a derived scalar
struct Scalar2 {
    double v = 0.0;
    Vec d;
    Mat dd;
    Jet1 jet() const { return Jet1(v, d); }
    Jet1 partial(int j) const {  // jet of d_j(this)
        Vec row(d.n);
        for (int m = 0; m < d.n; ++m) row[m] = dd(m, j);
        return Jet1(d[j], row);
    }
};

// d_l d_m g^{ab} from dg and d2g
inline Ten4 second_inverse_metric(const GeometryFrame& f) {
    const int n = f.n;
    Ten4 out(n);
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            Mat dgl(n), dgm(n), d2(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    dgl(i, j) = f.dg(l, i, j);
                    dgm(i, j) = f.dg(m, i, j);
                    d2(i, j) = f.d2g(l, m, i, j);
                }
            Mat t = matmul(f.gi, matmul(dgl, matmul(f.gi, matmul(dgm, f.gi)))) +
                    matmul(f.gi, matmul(dgm, matmul(f.gi, matmul(dgl, f.gi)))) -
                    matmul(f.gi, matmul(d2, f.gi));
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) out(l, m, a, b) = t(a, b);
        }
    return out;
}

// Shared per-point assembly state for the identity modules.
struct PointAssembly {
    GeometryFrame f;
    FieldJets U, V;
    Mat kv;
    Ten3 dk;
    bool has_k = false;
    Ten4 d2gi;

    int n() const { return f.n; }

    Jet1 jet_gi(int i, int j) const {
        Vec d(f.n);
        for (int m = 0; m < f.n; ++m) d[m] = f.dgi(m, i, j);
        return Jet1(f.gi(i, j), d);
    }
    Jet1 jet_gamma(int k, int i, int j) const {
        Vec d(f.n);
        for (int m = 0; m < f.n; ++m) d[m] = f.dgamma(m, k, i, j);
        return Jet1(f.gamma(k, i, j), d);
    }
    Jet1 jet_k(int i, int j) const {
        Vec d(f.n);
        for (int m = 0; m < f.n; ++m) d[m] = dk(m, i, j);
        return Jet1(kv(i, j), d);
    }
    static Jet1 jet_d(const FieldJets& w, int i) {
        Vec d(w.d.n);
        for (int m = 0; m < w.d.n; ++m) d[m] = w.dd(m, i);
        return Jet1(w.d[i], d);
    }
    static Jet1 jet_dd(const FieldJets& w, int i, int j) {
        Vec d(w.d.n);
        for (int m = 0; m < w.d.n; ++m) d[m] = w.ddd(m, i, j);
        return Jet1(w.dd(i, j), d);
    }
    Jet1 jet_value(const FieldJets& w) const { return Jet1(w.val, w.d); }

    // |grad w| with first and second partials
    Scalar2 grad_norm2_squared(const FieldJets& w) const {
        const int nn = f.n;
        Scalar2 S;
        S.d = Vec(nn);
        S.dd = Mat(nn);
        for (int a = 0; a < nn; ++a)
            for (int b = 0; b < nn; ++b) {
                S.v += f.gi(a, b) * w.d[a] * w.d[b];
                for (int m = 0; m < nn; ++m) {
                    S.d[m] += f.dgi(m, a, b) * w.d[a] * w.d[b] + 2.0 * f.gi(a, b) * w.dd(a, m) * w.d[b];
                    for (int l = 0; l < nn; ++l)
                        S.dd(l, m) += d2gi(l, m, a, b) * w.d[a] * w.d[b] +
                                      f.dgi(m, a, b) * (w.dd(a, l) * w.d[b] + w.d[a] * w.dd(b, l)) +
                                      2.0 * (f.dgi(l, a, b) * w.dd(a, m) * w.d[b] +
                                             f.gi(a, b) * (w.ddd(l, m, a) * w.d[b] + w.dd(a, m) * w.dd(b, l)));
                }
            }
        return S;
    }
    Scalar2 grad_norm_jet(const FieldJets& w) const {
        Scalar2 S = grad_norm2_squared(w);
        Scalar2 p;
        p.v = std::sqrt(S.v);
        p.d = (0.5 / p.v) * S.d;
        p.dd = Mat(f.n);
        for (int l = 0; l < f.n; ++l)
            for (int m = 0; m < f.n; ++m)
                p.dd(l, m) = S.dd(l, m) / (2.0 * p.v) - S.d[l] * S.d[m] / (4.0 * p.v * p.v * p.v);
        return p;
    }

    Jet1 inner_grads(const FieldJets& a, const FieldJets& b) const {
        Jet1 out = Jet1::constant(0.0, f.n);
        for (int i = 0; i < f.n; ++i)
            for (int j = 0; j < f.n; ++j)
                out = out + jet_gi(i, j) * jet_d(a, i) * jet_d(b, j);
        return out;
    }

    Jet1 laplacian_jet(const FieldJets& w) const {
        Jet1 out = Jet1::constant(0.0, f.n);
        for (int i = 0; i < f.n; ++i)
            for (int j = 0; j < f.n; ++j) {
                Jet1 cov = jet_dd(w, i, j);
                for (int k = 0; k < f.n; ++k) cov = cov - jet_gamma(k, i, j) * jet_d(w, k);
                out = out + jet_gi(i, j) * cov;
            }
        return out;
    }

    Jet1 trk_jet() const {
        Jet1 out = Jet1::constant(0.0, f.n);
        for (int i = 0; i < f.n; ++i)
            for (int j = 0; j < f.n; ++j) out = out + jet_gi(i, j) * jet_k(i, j);
        return out;
    }

    // raised gradient component (grad w)^i
    Jet1 grad_up(const FieldJets& w, int i) const {
        Jet1 out = Jet1::constant(0.0, f.n);
        for (int j = 0; j < f.n; ++j) out = out + jet_gi(i, j) * jet_d(w, j);
        return out;
    }

    // (grad of a derived scalar)^i from its Scalar2 jet
    Jet1 grad_up_scalar2(const Scalar2& s, int i) const {
        Jet1 out = Jet1::constant(0.0, f.n);
        for (int j = 0; j < f.n; ++j) out = out + jet_gi(i, j) * s.partial(j);
        return out;
    }

    // k(grad w, .)^i = g^{ia} k_ab (grad w)^b
    Jet1 k_grad_up(const FieldJets& w, int i) const {
        Jet1 out = Jet1::constant(0.0, f.n);
        for (int a = 0; a < f.n; ++a)
            for (int b = 0; b < f.n; ++b) out = out + jet_gi(i, a) * jet_k(a, b) * grad_up(w, b);
        return out;
    }

    double divergence(const std::vector<Jet1>& comp) const {
        double s = 0.0;
        for (int i = 0; i < f.n; ++i) {
            s += comp[i].d[i];
            for (int m = 0; m < f.n; ++m) s += f.gamma(m, m, i) * comp[i].v;
        }
        return s;
    }
};

inline PointAssembly make_assembly(const ChartedMetric& metric, const ScalarField& u,
                                   const ScalarField& v, const SymTensorField* k, const Vec& x,
                                   const EvalOptions& opts) {
    PointAssembly a;
    a.f = make_frame(metric, x, opts);
    a.U = field_jets(metric, u, x, opts);
    a.V = field_jets(metric, v, x, opts);
    if (k) {
        a.kv = k->value(x);
        a.dk = k->deriv(x);
        a.has_k = true;
    } else {
        a.kv = Mat(metric.dim);
        a.dk = Ten3(metric.dim);
    }
    a.d2gi = second_inverse_metric(a.f);
    return a;
}

// ---------------------------------------------------------------------------
// modified Hessians
// ---------------------------------------------------------------------------

struct ModifiedHessians {
    Mat Hplus, Hminus;
    double trace_plus = 0.0, trace_minus = 0.0;
    double normal_plus = 0.0, normal_minus = 0.0;  // (.)_{nu nu} components
    double a = 0.0;
};

inline ModifiedHessians modified_hessians_in(const GeometryFrame& f, const ScalarField& u,
                                             const ScalarField& v, const SymTensorField& k, double a,
                                             double gradient_floor) {
    const int n = f.n;
    const double uu = u.value(f.x), vv = v.value(f.x);
    if (!(uu > 0.0) || !(vv > 0.0)) throw Error(ErrorCode::NonPositive, "u, v must be positive");
    Vec du = u.grad(f.x), dv = v.grad(f.x);
    Vec du_up = matvec(f.gi, du), dv_up = matvec(f.gi, dv);
    const double p = std::sqrt(dot(du, du_up)), q = std::sqrt(dot(dv, dv_up));
    if (!(p > gradient_floor) || !(q > gradient_floor))
        throw Error(ErrorCode::DegenerateGradient, "|grad u| or |grad v| at gradient floor");
    const double ip = dot(du, dv_up);
    const double P = p * q + ip;
    const double s = uu + vv;
    Mat kv = k.value(f.x);
    Mat Hu = scalar_hessian_in(f, u), Hv = scalar_hessian_in(f, v);
    Mat sym = outer(du, dv) + outer(dv, du);
    ModifiedHessians out;
    out.a = a;
    out.Hplus = Hu + p * kv - (P / s) * f.g + (1.0 / s) * sym;
    out.Hminus = Hv - q * kv - (P / s) * f.g + (1.0 / s) * sym;
    out.trace_plus = trace_with(f.gi, out.Hplus);
    out.trace_minus = trace_with(f.gi, out.Hminus);
    Vec nu_u = (1.0 / p) * du_up, nu_v = (1.0 / q) * dv_up;
    out.normal_plus = dot(nu_u, matvec(out.Hplus, nu_u));
    out.normal_minus = dot(nu_v, matvec(out.Hminus, nu_v));
    return out;
}

inline ModifiedHessians modified_hessians(const InitialDataSet& ids, const ScalarField& u,
                                          const ScalarField& v, double a, const Vec& x,
                                          const EvalOptions& opts = {}) {
    GeometryFrame f = make_frame(ids.metric, x, opts);
    return modified_hessians_in(f, u, v, ids.k, a, kGradientFloorBase / ids.metric.scale);
}

// ---------------------------------------------------------------------------
// flux Y and its exact divergence
// ---------------------------------------------------------------------------

struct FluxY {
    Vec Y;        // upper index
    double divY;  // exact divergence of the assembly
};

inline std::vector<Jet1> assemble_Y_jets(const PointAssembly& a) {
    const int n = a.n();
    Scalar2 p = a.grad_norm_jet(a.U);
    Scalar2 q = a.grad_norm_jet(a.V);
    Jet1 pj = p.jet(), qj = q.jet();
    Jet1 lap_u = a.laplacian_jet(a.U), lap_v = a.laplacian_jet(a.V);
    Jet1 trk = a.trk_jet();
    Jet1 s = a.jet_value(a.U) + a.jet_value(a.V);
    std::vector<Jet1> Y(n);
    for (int i = 0; i < n; ++i) {
        Jet1 yi = 2.0 * (a.grad_up_scalar2(p, i) + a.grad_up_scalar2(q, i));
        yi = yi + 2.0 * (a.k_grad_up(a.U, i) - a.k_grad_up(a.V, i));
        yi = yi + (4.0 * (pj * a.grad_up(a.V, i) + qj * a.grad_up(a.U, i))) / s;
        yi = yi - 2.0 * (lap_u * a.grad_up(a.U, i)) / pj - 2.0 * (lap_v * a.grad_up(a.V, i)) / qj;
        yi = yi - 2.0 * trk * (a.grad_up(a.U, i) - a.grad_up(a.V, i));
        Y[i] = yi;
    }
    return Y;
}

inline FluxY flux_Y(const InitialDataSet& ids, const ScalarField& u, const ScalarField& v, const Vec& x,
                    const EvalOptions& opts = {}) {
    PointAssembly a = make_assembly(ids.metric, u, v, &ids.k, x, opts);
    const double floor = kGradientFloorBase / ids.metric.scale;
    Scalar2 p = a.grad_norm_jet(a.U), q = a.grad_norm_jet(a.V);
    if (!(p.v > floor) || !(q.v > floor))
        throw Error(ErrorCode::DegenerateGradient, "gradient at floor in flux assembly");
    std::vector<Jet1> Y = assemble_Y_jets(a);
    FluxY out;
    out.Y = Vec(a.n());
    for (int i = 0; i < a.n(); ++i) out.Y[i] = Y[i].v;
    out.divY = a.divergence(Y);
    return out;
}

// value-only Y at a point, for the FD divergence oracle
inline Vec flux_Y_value(const InitialDataSet& ids, const ScalarField& u, const ScalarField& v,
                        const Vec& x, const EvalOptions& opts = {}) {
    return flux_Y(ids, u, v, x, opts).Y;
}

// ---------------------------------------------------------------------------
// residual reports
// ---------------------------------------------------------------------------

struct ResidualRow {
    Vec x;
    double lhs = 0.0, rhs = 0.0, resid = 0.0;
};

struct ResidualReport {
    std::vector<ResidualRow> rows;
    double max_abs = 0.0;
    double l2_mean = 0.0;
    std::vector<double> ladder_max;     // max residual per derivative-ladder level (coarse -> fine)
    std::vector<double> ladder_orders;  // log2(coarser/finer)

    void finalize() {
        max_abs = 0.0;
        double s = 0.0;
        for (const auto& r : rows) {
            max_abs = std::fmax(max_abs, std::fabs(r.resid));
            s += r.resid * r.resid;
        }
        l2_mean = rows.empty() ? 0.0 : std::sqrt(s / rows.size());
    }
};

enum class SourceMode { SelfSourced, AForm, UserSupplied };

struct SourceSpec {
    SourceMode mode = SourceMode::AForm;
    double a = 1.0;  // for AForm
    ScalarFn f1, f2; // for UserSupplied
};

// Pointwise residual of the main divergence identity.
inline ResidualRow identity_residual_at(const InitialDataSet& ids, const ScalarField& u,
                                        const ScalarField& v, const SourceSpec& src, const Vec& x,
                                        const EvalOptions& opts) {
    PointAssembly a = make_assembly(ids.metric, u, v, &ids.k, x, opts);
    GeometryFrame& f = a.f;
    const double floor = kGradientFloorBase / ids.metric.scale;
    ModifiedHessians mh = modified_hessians_in(f, u, v, ids.k, src.a, floor);
    const double p = norm_grad_in(f, u), q = norm_grad_in(f, v);

    double f1, f2;
    switch (src.mode) {
        case SourceMode::SelfSourced:
            f1 = mh.trace_plus;
            f2 = mh.trace_minus;
            break;
        case SourceMode::AForm:
            f1 = src.a * mh.normal_plus;
            f2 = src.a * mh.normal_minus;
            if (std::fabs(mh.trace_plus - f1) > 1e-6 || std::fabs(mh.trace_minus - f2) > 1e-6)
                throw Error(ErrorCode::SourceMismatch, "u,v do not solve the a-form system at the point");
            break;
        case SourceMode::UserSupplied:
            f1 = src.f1(x);
            f2 = src.f2(x);
            if (std::fabs(mh.trace_plus - f1) > 1e-6 || std::fabs(mh.trace_minus - f2) > 1e-6)
                throw Error(ErrorCode::SourceMismatch, "user sources violate the PDE beyond 1e-6");
            break;
    }

    ConstraintDensities cd = constraint_densities_in(f, ids);
    LevelSetFrame lsu = level_set_geometry_in(f, u, floor);
    LevelSetFrame lsv = level_set_geometry_in(f, v, floor);
    Vec d_uv = u.grad(x) - v.grad(x);
    const double Jterm = dot(cd.J, matvec(f.gi, d_uv));

    ResidualRow row;
    row.x = x;
    row.rhs = (tensor_norm2_in(f, mh.Hplus) - f1 * f1) / p + (tensor_norm2_in(f, mh.Hminus) - f2 * f2) / q +
              2.0 * cd.mu * (p + q) + 2.0 * Jterm - 2.0 * lsu.K * p - 2.0 * lsv.K * q;
    row.lhs = a.divergence(assemble_Y_jets(a));
    row.resid = row.lhs - row.rhs;
    return row;
}

inline ResidualReport identity_residual(const InitialDataSet& ids, const ScalarField& u,
                                        const ScalarField& v, const SourceSpec& src,
                                        const std::vector<Vec>& lattice, const EvalOptions& opts = {},
                                        int ladder_levels = 0) {
    ResidualReport rep;
    for (const Vec& x : lattice) rep.rows.push_back(identity_residual_at(ids, u, v, src, x, opts));
    rep.finalize();
    for (int lv = ladder_levels - 1; lv >= 0; --lv) {
        const double factor = std::pow(2.0, lv);
        EvalOptions lopts = opts.ladder(factor);
        double mx = 0.0;
        for (const Vec& x : lattice)
            mx = std::fmax(mx, std::fabs(identity_residual_at(ids, u, v, src, x, lopts).resid));
        rep.ladder_max.push_back(mx);
    }
    for (size_t i = 0; i + 1 < rep.ladder_max.size(); ++i)
        rep.ladder_orders.push_back(std::log2(rep.ladder_max[i] / rep.ladder_max[i + 1]));
    return rep;
}

// ---------------------------------------------------------------------------
// Stern's identity
// ---------------------------------------------------------------------------

inline ResidualRow stern_residual_at(const ChartedMetric& metric, const ScalarField& u, const Vec& x,
                                     const EvalOptions& opts) {
    PointAssembly a = make_assembly(metric, u, u, nullptr, x, opts);
    GeometryFrame& f = a.f;
    const double floor = kGradientFloorBase / metric.scale;
    Scalar2 p = a.grad_norm_jet(a.U);
    if (!(p.v > floor)) throw Error(ErrorCode::DegenerateGradient, "gradient at floor");
    Jet1 lap = a.laplacian_jet(a.U);
    std::vector<Jet1> flux(a.n());
    for (int i = 0; i < a.n(); ++i)
        flux[i] = a.grad_up_scalar2(p, i) - (lap * a.grad_up(a.U, i)) / p.jet();
    ResidualRow row;
    row.x = x;
    row.lhs = 2.0 * a.divergence(flux);
    Mat Hu = scalar_hessian_in(f, u);
    LevelSetFrame ls = level_set_geometry_in(f, u, floor);
    const double lapv = trace_with(f.gi, Hu);
    row.rhs = (tensor_norm2_in(f, Hu) + p.v * p.v * (f.R - 2.0 * ls.K) - lapv * lapv) / p.v;
    row.resid = row.lhs - row.rhs;
    return row;
}

inline ResidualReport stern_residual(const ChartedMetric& metric, const ScalarField& u,
                                     const std::vector<Vec>& lattice, const EvalOptions& opts = {},
                                     int ladder_levels = 0) {
    ResidualReport rep;
    for (const Vec& x : lattice) rep.rows.push_back(stern_residual_at(metric, u, x, opts));
    rep.finalize();
    for (int lv = ladder_levels - 1; lv >= 0; --lv) {
        EvalOptions lopts = opts.ladder(std::pow(2.0, lv));
        double mx = 0.0;
        for (const Vec& x : lattice)
            mx = std::fmax(mx, std::fabs(stern_residual_at(metric, u, x, lopts).resid));
        rep.ladder_max.push_back(mx);
    }
    for (size_t i = 0; i + 1 < rep.ladder_max.size(); ++i)
        rep.ladder_orders.push_back(std::log2(rep.ladder_max[i] / rep.ladder_max[i + 1]));
    return rep;
}

// ---------------------------------------------------------------------------
// Riemannian a-family (k = 0)
// ---------------------------------------------------------------------------

inline ResidualRow riemannian_residual_at(const ChartedMetric& metric, const ScalarField& u, double a,
                                          bool self_sourced, const Vec& x, const EvalOptions& opts) {
    PointAssembly asm_ = make_assembly(metric, u, u, nullptr, x, opts);
    GeometryFrame& f = asm_.f;
    const double floor = kGradientFloorBase / metric.scale;
    const double uu = u.value(x);
    if (!(uu > 0.0)) throw Error(ErrorCode::NonPositive, "u must be positive");
    Scalar2 p = asm_.grad_norm_jet(asm_.U);
    if (!(p.v > floor)) throw Error(ErrorCode::DegenerateGradient, "gradient at floor");

    Mat Hu = scalar_hessian_in(f, u);
    Vec du = u.grad(x);
    Mat Hc = Hu - (p.v * p.v / uu) * f.g + (1.0 / uu) * outer(du, du);
    const double trH = trace_with(f.gi, Hc);
    Vec nu = (1.0 / p.v) * matvec(f.gi, du);
    const double Hnn = dot(nu, matvec(Hc, nu));  // equals nabla_{nu nu} u
    double fa;
    if (self_sourced) {
        fa = trH;
    } else {
        fa = a * Hnn;
        if (std::fabs(trH - fa) > 1e-6)
            throw Error(ErrorCode::SourceMismatch, "u does not solve the k=0 a-family PDE at the point");
    }

    Jet1 lap = asm_.laplacian_jet(asm_.U);
    Jet1 pj = p.jet();
    Jet1 uj = asm_.jet_value(asm_.U);
    std::vector<Jet1> flux(asm_.n());
    for (int i = 0; i < asm_.n(); ++i)
        flux[i] = asm_.grad_up_scalar2(p, i) + (pj / uj) * asm_.grad_up(asm_.U, i) -
                  (lap * asm_.grad_up(asm_.U, i)) / pj;

    LevelSetFrame ls = level_set_geometry_in(f, u, floor);
    ResidualRow row;
    row.x = x;
    row.lhs = 2.0 * asm_.divergence(flux);
    row.rhs = f.R * p.v + (tensor_norm2_in(f, Hc) - fa * fa) / p.v - 2.0 * ls.K * p.v;
    row.resid = row.lhs - row.rhs;
    return row;
}

inline ResidualReport riemannian_residual(const ChartedMetric& metric, const ScalarField& u, double a,
                                          const std::vector<Vec>& lattice, bool self_sourced = false,
                                          const EvalOptions& opts = {}) {
    ResidualReport rep;
    for (const Vec& x : lattice)
        rep.rows.push_back(riemannian_residual_at(metric, u, a, self_sourced, x, opts));
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// charged variant
// ---------------------------------------------------------------------------

struct ChargedFrame {
    Vec eta_dn;          // unit covector along nu_u + nu_v (zero only if nu_u = -nu_v)
    double xi = 0.0;     // sqrt(|grad u| |grad v|)
    double E_eta = 0.0;  // <E, eta>
    Mat EHplus, EHminus;
    double trace_plus = 0.0, trace_minus = 0.0;
    Vec Z;
    double divZ = 0.0;
};

// The E-flux coefficient is 2*sqrt(2(|du||dv| + <du,dv>)), the form that makes
// the divergence identity close for generic normals; it coincides with the
// normalization 2 xi^{-1}(|du||dv| + <du,dv>) exactly when nu_u = nu_v.
inline ChargedFrame charged_frame(const InitialDataSet& ids, const ScalarField& u, const ScalarField& v,
                                  const VectorField& E, const Vec& x, const EvalOptions& opts = {},
                                  double div_free_tol = 1e-8) {
    PointAssembly a = make_assembly(ids.metric, u, v, &ids.k, x, opts);
    GeometryFrame& f = a.f;
    const int n = f.n;
    const double floor = kGradientFloorBase / ids.metric.scale;

    // div E = 0 gate
    {
        Vec Ev = E.value(x);
        Mat dE = E.deriv(x);
        double divE = 0.0;
        for (int i = 0; i < n; ++i) {
            divE += dE(i, i);
            for (int m = 0; m < n; ++m) divE += f.gamma(m, m, i) * Ev[i];
        }
        if (std::fabs(divE) > div_free_tol)
            throw Error(ErrorCode::NotDivergenceFree, "E is not divergence free at the point");
    }

    Vec du = u.grad(x), dv = v.grad(x);
    Vec du_up = matvec(f.gi, du), dv_up = matvec(f.gi, dv);
    const double p = std::sqrt(dot(du, du_up)), q = std::sqrt(dot(dv, dv_up));
    if (!(p > floor) || !(q > floor)) throw Error(ErrorCode::DegenerateGradient, "gradient at floor");
    Vec nu_u_dn = (1.0 / p) * du, nu_v_dn = (1.0 / q) * dv;
    Vec ssum = nu_u_dn + nu_v_dn;
    const double slen2 = dot(ssum, matvec(f.gi, ssum));
    if (slen2 < 1e-24)
        throw Error(ErrorCode::ParallelOppositeNormals, "nu_u = -nu_v: eta undefined at the point");

    ChargedFrame out;
    out.eta_dn = (1.0 / std::sqrt(slen2)) * ssum;
    out.xi = std::sqrt(p * q);
    Vec Ev = E.value(x);
    Vec E_dn = matvec(f.g, Ev);
    out.E_eta = dot(Ev, out.eta_dn);

    Mat Hu = scalar_hessian_in(f, u), Hv = scalar_hessian_in(f, v);
    Mat S = out.xi * (outer(out.eta_dn, E_dn) + outer(E_dn, out.eta_dn)) - (out.xi * out.E_eta) * f.g;
    out.EHplus = Hu + S + p * a.kv;
    out.EHminus = Hv + S - q * a.kv;
    out.trace_plus = trace_with(f.gi, out.EHplus);
    out.trace_minus = trace_with(f.gi, out.EHminus);

    // Z = grad p + grad q - lap_u du/p - lap_v dv/q + k(d(u-v),.) - trk d(u-v) + 2 sqrt(2P) E
    Scalar2 pj2 = a.grad_norm_jet(a.U), qj2 = a.grad_norm_jet(a.V);
    Jet1 pj = pj2.jet(), qj = qj2.jet();
    Jet1 lap_u = a.laplacian_jet(a.U), lap_v = a.laplacian_jet(a.V);
    Jet1 trk = a.trk_jet();
    Jet1 P = pj * qj + a.inner_grads(a.U, a.V);
    Jet1 coefE = 2.0 * sqrt(2.0 * P);
    std::vector<Jet1> Z(n);
    for (int i = 0; i < n; ++i) {
        Vec dEi(n);
        for (int m = 0; m < n; ++m) dEi[m] = E.deriv(x)(m, i);
        Jet1 Ei(E.value(x)[i], dEi);
        Jet1 zi = a.grad_up_scalar2(pj2, i) + a.grad_up_scalar2(qj2, i);
        zi = zi - (lap_u * a.grad_up(a.U, i)) / pj - (lap_v * a.grad_up(a.V, i)) / qj;
        zi = zi + a.k_grad_up(a.U, i) - a.k_grad_up(a.V, i);
        zi = zi - trk * (a.grad_up(a.U, i) - a.grad_up(a.V, i));
        zi = zi + coefE * Ei;
        Z[i] = zi;
    }
    out.Z = Vec(n);
    for (int i = 0; i < n; ++i) out.Z[i] = Z[i].v;
    out.divZ = a.divergence(Z);
    return out;
}

inline ResidualRow charged_residual_at(const InitialDataSet& ids, const ScalarField& u,
                                       const ScalarField& v, const VectorField& E, bool self_sourced,
                                       const Vec& x, const EvalOptions& opts) {
    GeometryFrame f = make_frame(ids.metric, x, opts);
    ChargedFrame cf = charged_frame(ids, u, v, E, x, opts);
    const double floor = kGradientFloorBase / ids.metric.scale;
    const double p = norm_grad_in(f, u), q = norm_grad_in(f, v);

    if (!self_sourced) {
        // system (charged): Delta u = xi E_eta - trk |du|, Delta v = xi E_eta + trk |dv|
        if (std::fabs(cf.trace_plus) > 1e-6 || std::fabs(cf.trace_minus) > 1e-6)
            throw Error(ErrorCode::SourceMismatch, "u,v do not solve the charged system at the point");
    }

    ConstraintDensities cd = constraint_densities_in(f, ids);
    LevelSetFrame lsu = level_set_geometry_in(f, u, floor);
    LevelSetFrame lsv = level_set_geometry_in(f, v, floor);
    Vec Ev = E.value(x);
    const double E2 = dot(Ev, matvec(f.g, Ev));
    const double Ju = dot(cd.J, matvec(f.gi, u.grad(x)));
    const double Jv = dot(cd.J, matvec(f.gi, v.grad(x)));

    double r1 = (tensor_norm2_in(f, cf.EHplus) + p * p * (2.0 * cd.mu - 2.0 * lsu.K - 2.0 * E2) +
                 2.0 * p * Ju) /
                (2.0 * p);
    double r2 = (tensor_norm2_in(f, cf.EHminus) + q * q * (2.0 * cd.mu - 2.0 * lsv.K - 2.0 * E2) -
                 2.0 * q * Jv) /
                (2.0 * q);
    if (self_sourced) {
        r1 -= cf.trace_plus * cf.trace_plus / (2.0 * p);
        r2 -= cf.trace_minus * cf.trace_minus / (2.0 * q);
    }

    ResidualRow row;
    row.x = x;
    row.lhs = cf.divZ;
    row.rhs = r1 + r2;
    row.resid = row.lhs - row.rhs;
    return row;
}

inline ResidualReport charged_residual(const InitialDataSet& ids, const ScalarField& u,
                                       const ScalarField& v, const VectorField& E,
                                       const std::vector<Vec>& lattice, bool self_sourced = false,
                                       const EvalOptions& opts = {}) {
    ResidualReport rep;
    for (const Vec& x : lattice)
        rep.rows.push_back(charged_residual_at(ids, u, v, E, self_sourced, x, opts));
    rep.finalize();
    return rep;
}

}  // namespace dnull
