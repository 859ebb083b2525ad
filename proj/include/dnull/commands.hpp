#pragma once
#include <cmath>
#include <random>

#include "dnull/config.hpp"
#include "dnull/divergence_identity.hpp"
#include "dnull/elliptic.hpp"
#include "dnull/exact_slices.hpp"
#include "dnull/radial.hpp"
#include "dnull/report.hpp"
#include "dnull/spline.hpp"

// The eight verification commands behind the CLI. Each builds the relevant
// module pipeline, registers pass/fail metrics at their stated tolerances, and
// attaches CSV tables.

namespace dnull {

namespace cmd_detail {

inline ScalarField quadratic_graph_field(double c) {
    ScalarField f;
    f.value = [c](const Vec& x) { return c * dot(x, x); };
    f.grad = [c](const Vec& x) { return 2.0 * c * x; };
    f.hess = [c](const Vec&) { return 2.0 * c * Mat::identity(3); };
    f.third = [](const Vec&) { return Ten3(3); };
    return f;
}

inline MinkowskiGraphSlice minkowski_slice_from(const RunConfig& cfg) {
    const Vec lo{0.7, 0.7, 0.7}, hi{1.4, 1.4, 1.4};
    if (cfg.preset == "minkowski-boost")
        return induce_minkowski_graph(affine_field(0.0, Vec{cfg.param("a", 0.4), 0.0, 0.0}), lo, hi);
    if (cfg.preset == "minkowski-graph")
        return induce_minkowski_graph(quadratic_graph_field(cfg.param("c", 0.1)), lo, hi);
    if (!cfg.preset.empty() && cfg.preset != "minkowski-t0")
        throw Error(ErrorCode::ValidationError,
                    "dataset: preset '" + cfg.preset + "' is not a Minkowski slice");
    return induce_minkowski_graph(constant_field(0.0, 3), lo, hi);  // minkowski-t0
}

inline RadialProfile radial_profile_from(const RunConfig& cfg, MinkowskiRadialData* mk_out = nullptr) {
    if (cfg.has_table) {
        auto rho = std::make_shared<CubicSpline>(cfg.tab_l, cfg.tab_rho);
        auto kn = std::make_shared<CubicSpline>(cfg.tab_l, cfg.tab_kn);
        auto kt = std::make_shared<CubicSpline>(cfg.tab_l, cfg.tab_kt);
        RadialProfile p;
        p.rho = [rho](double l) { return rho->value(l); };
        p.drho = [rho](double l) { return rho->deriv(l); };
        p.ddrho = [rho](double l) { return rho->second(l); };
        p.kn = [kn](double l) { return kn->value(l); };
        p.dkn = [kn](double l) { return kn->deriv(l); };
        p.kt = [kt](double l) { return kt->value(l); };
        p.dkt = [kt](double l) { return kt->deriv(l); };
        p.l_min = cfg.tab_l.front();
        p.l_max = cfg.tab_l.back();
        p.name = "table";
        return p;
    }
    const std::string& preset = cfg.preset;
    if (preset == "schwarzschild-t0")
        return schwarzschild_radial_profile(cfg.param("m", 1.0), cfg.param("rho-min", 2.0 * cfg.param("m", 1.0)),
                                            cfg.param("rho-max", 8.0));
    if (preset == "dec-bump")
        return dec_bump_radial_profile(cfg.param("m", 1.0), cfg.param("rho-max", 5.0),
                                       cfg.param("eps", 0.08), cfg.param("tau", 1.5),
                                       cfg.param("beta", 1.0));
    if (preset == "flat-umbilic")
        return flat_radial_profile(cfg.param("r-min", 1.0), cfg.param("r-max", 2.0),
                                   cfg.param("c", 0.4));
    if (preset == "minkowski-graph-radial") {
        MinkowskiRadialData mk =
            minkowski_graph_radial(cfg.param("c", 0.18), cfg.param("r-min", 1.0), cfg.param("r-max", 2.0));
        if (mk_out) *mk_out = mk;
        return mk.prof;
    }
    if (preset == "flat-shell") return flat_radial_profile(cfg.param("r-min", 1.0), cfg.param("r-max", 2.0));
    if (preset == "schwarzschild-shell")
        return schwarzschild_radial_profile(cfg.param("m", 1.0), cfg.param("rho-min", 3.0),
                                            cfg.param("rho-max", 6.0));
    if (!preset.empty() && preset != "flat")
        throw Error(ErrorCode::ValidationError,
                    "dataset: preset '" + preset + "' does not describe radial data");
    return flat_radial_profile(cfg.param("r-min", 1.0), cfg.param("r-max", 2.0));  // flat
}

}  // namespace cmd_detail

// ---------------------------------------------------------------------------

inline RunReport cmd_verify_minkowski(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "verify-minkowski";
    MinkowskiGraphSlice slice = cmd_detail::minkowski_slice_from(cfg);
    NullPair pair = minkowski_null_pair(slice);
    const int n = cfg.lattice_n > 0 ? cfg.lattice_n : 10;
    std::vector<Vec> lattice = box_lattice(slice.lo, slice.hi, n);
    NullPairReport r = verify_null_pair(slice, pair, lattice);

    rep.add_metric("max_modified_hessian_plus", r.max_plus, cfg.tol("residual", 1e-8));
    rep.add_metric("max_modified_hessian_minus", r.max_minus, cfg.tol("residual", 1e-8));
    rep.add_metric("pair_identity", r.max_pair_identity, cfg.tol("pair", 1e-8));

    // negative control: a perturbed pair must be clearly detected
    ScalarField bump;
    bump.value = [](const Vec& x) { return 0.01 * x[0] * x[0]; };
    bump.grad = [](const Vec& x) { return Vec{0.02 * x[0], 0.0, 0.0}; };
    bump.hess = [](const Vec&) {
        Mat h(3);
        h(0, 0) = 0.02;
        return h;
    };
    bump.third = [](const Vec&) { return Ten3(3); };
    NullPair bad{add_fields(pair.u, bump, 1.0, 1.0), pair.v};
    NullPairReport rb = verify_null_pair(slice, bad, lattice);
    rep.add_metric("negative_control", rb.max_plus, cfg.tol("negative", 1e-4), "ge");

    CsvTable t;
    t.name = "minkowski_residuals";
    t.columns = {"x", "y", "z", "hessian_plus", "hessian_minus"};
    for (const Vec& x : lattice) {
        GeometryFrame f = make_frame(slice.induced.metric, x);
        ModifiedHessians mh = modified_hessians_in(f, pair.u, pair.v, slice.induced.k, 1.0, 1e-12);
        t.rows.push_back({x[0], x[1], x[2], std::sqrt(tensor_norm2_in(f, mh.Hplus)),
                          std::sqrt(tensor_norm2_in(f, mh.Hminus))});
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

inline RunReport cmd_verify_identity(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "verify-identity";
    const int cases = static_cast<int>(cfg.param("cases", 3));
    const int n = cfg.lattice_n > 0 ? cfg.lattice_n : 3;
    std::mt19937_64 rng(cfg.seed == 0 ? 0x5eed : cfg.seed);

    CsvTable rows;
    rows.name = "identity_residuals";
    rows.columns = {"case", "x", "y", "z", "lhs", "rhs", "residual"};
    CsvTable t;
    t.name = "identity_ladder";
    t.columns = {"case", "level", "max_residual"};
    ojson cases_json = ojson::array();
    SourceSpec ss{SourceMode::SelfSourced, 1.0, nullptr, nullptr};
    for (int c = 0; c < cases; ++c) {
        RandomChartData rc = random_analytic_case(rng());
        InitialDataSet ids{rc.metric, rc.k, "random"};
        std::vector<Vec> lattice = box_lattice(Vec{-0.5, -0.5, -0.5}, Vec{0.5, 0.5, 0.5}, n);
        ResidualReport r = identity_residual(ids, rc.u, rc.v, ss, lattice, {}, 3);
        for (const auto& row : r.rows)
            rows.rows.push_back({double(c), row.x[0], row.x[1], row.x[2], row.lhs, row.rhs, row.resid});
        for (size_t lv = 0; lv < r.ladder_max.size(); ++lv)
            t.rows.push_back({double(c), double(lv), r.ladder_max[lv]});
        ojson jc;
        jc["max"] = format_g17(r.max_abs);
        jc["l2_mean"] = format_g17(r.l2_mean);
        ojson orders = ojson::array();
        for (double o : r.ladder_orders) orders.push_back(format_g17(o));
        jc["refinement_orders"] = orders;
        cases_json.push_back(jc);
        const std::string tag = "case" + std::to_string(c) + "_";
        rep.add_metric(tag + "terminal_residual", r.ladder_max.back(), cfg.tol("terminal", 1e-5));
        for (size_t o = 0; o < r.ladder_orders.size(); ++o) {
            rep.add_metric(tag + "order" + std::to_string(o) + "_lo", r.ladder_orders[o],
                           cfg.tol("order_lo", 1.8), "ge");
            rep.add_metric(tag + "order" + std::to_string(o) + "_hi", r.ladder_orders[o],
                           cfg.tol("order_hi", 2.2));
        }
    }
    rep.tables.push_back(std::move(rows));
    rep.tables.push_back(std::move(t));
    rep.details = ojson{{"cases", cases_json}};
    return rep;
}

inline RunReport cmd_verify_stern(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "verify-stern";
    ChartedMetric flat = flat_cartesian(3, annulus_domain(3, 0.3, 50.0));
    ScalarField r = radius_field(3);
    ResidualRow closed = stern_residual_at(flat, r, Vec{2.0, 0.0, 0.0}, {});
    rep.add_metric("closed_form_residual", std::fabs(closed.resid), cfg.tol("closed", 1e-8));

    std::mt19937_64 rng(cfg.seed == 0 ? 0x57e4 : cfg.seed);
    const int n = cfg.lattice_n > 0 ? cfg.lattice_n : 3;
    RandomChartData rc = random_analytic_case(rng());
    std::vector<Vec> lattice = box_lattice(Vec{-0.5, -0.5, -0.5}, Vec{0.5, 0.5, 0.5}, n);
    ResidualReport rr = stern_residual(rc.metric, rc.u, lattice, {}, 3);
    rep.add_metric("terminal_residual", rr.ladder_max.back(), cfg.tol("terminal", 1e-5));
    for (size_t o = 0; o < rr.ladder_orders.size(); ++o) {
        rep.add_metric("order" + std::to_string(o) + "_lo", rr.ladder_orders[o], cfg.tol("order_lo", 1.8),
                       "ge");
        rep.add_metric("order" + std::to_string(o) + "_hi", rr.ladder_orders[o], cfg.tol("order_hi", 2.2));
    }
    CsvTable rows;
    rows.name = "stern_residuals";
    rows.columns = {"x", "y", "z", "lhs", "rhs", "residual"};
    for (const auto& row : rr.rows)
        rows.rows.push_back({row.x[0], row.x[1], row.x[2], row.lhs, row.rhs, row.resid});
    rep.tables.push_back(std::move(rows));
    CsvTable t;
    t.name = "stern_ladder";
    t.columns = {"level", "max_residual"};
    for (size_t lv = 0; lv < rr.ladder_max.size(); ++lv) t.rows.push_back({double(lv), rr.ladder_max[lv]});
    rep.tables.push_back(std::move(t));
    ojson orders = ojson::array();
    for (double o : rr.ladder_orders) orders.push_back(format_g17(o));
    rep.details = ojson{{"max", format_g17(rr.max_abs)},
                        {"l2_mean", format_g17(rr.l2_mean)},
                        {"refinement_orders", orders}};
    return rep;
}

inline RunReport cmd_verify_charged(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "verify-charged";

    // E = 0 reduction on a quadratic graph slice: u=(x+t)|, v=(x-t)| are
    // spacetime harmonic and the identity reduces to the HKK form
    ScalarField f = cmd_detail::quadratic_graph_field(cfg.param("c", 0.1));
    MinkowskiGraphSlice slice = induce_minkowski_graph(f, Vec{0.7, 0.7, 0.7}, Vec{1.4, 1.4, 1.4});
    ScalarField xc = affine_field(0.0, Vec{1.0, 0.0, 0.0});
    ScalarField u = add_fields(xc, f, 1.0, 1.0);
    ScalarField v = add_fields(xc, f, 1.0, -1.0);
    VectorField E0;
    E0.value = [](const Vec&) { return Vec(3); };
    E0.deriv = [](const Vec&) { return Mat(3); };
    const int n = cfg.lattice_n > 0 ? cfg.lattice_n : 3;
    std::vector<Vec> lattice = box_lattice(Vec{0.8, 0.8, 0.8}, Vec{1.3, 1.3, 1.3}, n);
    ResidualReport e0 = charged_residual(slice.induced, u, v, E0, lattice);
    rep.add_metric("e0_spacetime_harmonic_residual", e0.max_abs, cfg.tol("e0", 1e-7));

    // k = 0 charged harmonic with E = grad(1/r) on the flat annulus
    InitialDataSet fl{flat_cartesian(3, annulus_domain(3, 0.6, 3.0)), zero_sym_tensor(3), "flat"};
    VectorField E;
    E.value = [](const Vec& x) {
        const double rr = std::sqrt(dot(x, x));
        return (-1.0 / (rr * rr * rr)) * x;
    };
    E.deriv = [](const Vec& x) {
        const double rr = std::sqrt(dot(x, x));
        Mat d(3);
        for (int m = 0; m < 3; ++m)
            for (int i = 0; i < 3; ++i)
                d(m, i) = -((m == i) ? 1.0 : 0.0) / (rr * rr * rr) + 3.0 * x[m] * x[i] / std::pow(rr, 5);
        return d;
    };
    // u = A - B exp(1/r) solves Delta u = <E, grad u>
    ScalarField uc;
    uc.value = [](const Vec& x) {
        const double rr = std::sqrt(dot(x, x));
        return 3.0 - std::exp(1.0 / rr);
    };
    uc.grad = [](const Vec& x) {
        const double rr = std::sqrt(dot(x, x));
        const double e = std::exp(1.0 / rr);
        return (e / (rr * rr * rr)) * x;
    };
    uc.hess = [](const Vec& x) {
        const double rr = std::sqrt(dot(x, x));
        const double e = std::exp(1.0 / rr);
        Vec dw = (-1.0 / (rr * rr * rr)) * x;
        Mat ddw(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                ddw(i, j) = -((i == j) ? 1.0 : 0.0) / (rr * rr * rr) + 3.0 * x[i] * x[j] / std::pow(rr, 5);
        return (-e) * (outer(dw, dw) + ddw);
    };
    ResidualReport ch = charged_residual(fl, uc, uc, E, lattice);
    rep.add_metric("charged_harmonic_residual", ch.max_abs, cfg.tol("charged", 1e-6));

    // self-sourced extension on generic data
    std::mt19937_64 rng(cfg.seed == 0 ? 0xc4a6 : cfg.seed);
    RandomChartData rc = random_analytic_case(rng());
    InitialDataSet ids{flat_cartesian(3, annulus_domain(3, 0.5, 60.0)), rc.k, "flat-k"};
    ResidualReport gen = charged_residual(ids, rc.u, rc.v, E, lattice, true);
    rep.add_metric("self_sourced_residual", gen.max_abs, cfg.tol("self_sourced", 1e-6));

    CsvTable t;
    t.name = "charged_residuals";
    t.columns = {"x", "y", "z", "e0_residual", "charged_harmonic_residual"};
    for (size_t i = 0; i < lattice.size(); ++i)
        t.rows.push_back({lattice[i][0], lattice[i][1], lattice[i][2], e0.rows[i].resid, ch.rows[i].resid});
    rep.tables.push_back(std::move(t));
    return rep;
}

inline RunReport cmd_verify_schwarzschild(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "verify-schwarzschild";
    const double m = cfg.param("m", 1.0);
    const double tilt = cfg.param("tilt", cfg.preset == "schwarzschild-tilted" ? 0.05 : 0.0);
    const double r_lo = cfg.param("r-min", 3.0), r_hi = cfg.param("r-max", 8.0);

    std::vector<Vec> lattice4;
    for (double r : {r_lo + 0.2, 0.5 * (r_lo + r_hi), r_hi - 0.5})
        for (double th : {0.8, 1.6}) lattice4.push_back(Vec{0.3, r, th, 0.7});
    std::vector<std::pair<int, int>> dirs = {{2, 2}, {3, 3}, {2, 3}, {0, 2}, {1, 2}, {3, 1}};
    NullFieldsReport nf = schwarzschild_null_fields_check(m, lattice4, dirs);
    rep.add_metric("null_fields_residual", nf.max_resid, cfg.tol("null_fields", 1e-8));

    std::vector<Vec> lattice3;
    for (double r : {r_lo + 0.2, 4.0, 5.5, r_hi - 1.0})
        for (double th : {0.9, 1.7}) lattice3.push_back(Vec{r, th, 0.6});

    SchwarzschildSlice st = schwarzschild_static_data(m, RadialFn::zero(), r_lo, r_hi);
    TortoiseReport a = tortoise_pair_check(st, lattice3);
    const double tor_tol = cfg.tol("tortoise", 1e-7);
    rep.add_metric("tortoise_static_sys_plus", a.max_sys_plus, tor_tol);
    rep.add_metric("tortoise_static_sys_minus", a.max_sys_minus, tor_tol);
    rep.add_metric("tortoise_static_hess_u", a.max_hess_u, tor_tol);
    rep.add_metric("tortoise_static_hess_v", a.max_hess_v, tor_tol);

    SchwarzschildSlice tl =
        schwarzschild_static_data(m, RadialFn::linear(tilt == 0.0 ? 0.05 : tilt), r_lo, r_hi);
    TortoiseReport b = tortoise_pair_check(tl, lattice3);
    rep.add_metric("tortoise_tilted_sys_plus", b.max_sys_plus, tor_tol);
    rep.add_metric("tortoise_tilted_sys_minus", b.max_sys_minus, tor_tol);
    rep.add_metric("tortoise_tilted_hess_u", b.max_hess_u, tor_tol);
    rep.add_metric("tortoise_tilted_hess_v", b.max_hess_v, tor_tol);

    rep.add_metric("integrability_residual", null_fields_integrability_residual(tl, lattice3),
                   cfg.tol("integrability", 1e-8));

    CsvTable t;
    t.name = "schwarzschild_residuals";
    t.columns = {"check", "residual"};
    t.rows = {{0.0, nf.max_resid},     {1.0, a.max_sys_plus},  {2.0, a.max_sys_minus},
              {3.0, a.max_hess_u},     {4.0, a.max_hess_v},    {5.0, b.max_sys_plus},
              {6.0, b.max_sys_minus},  {7.0, b.max_hess_u},    {8.0, b.max_hess_v}};
    rep.tables.push_back(std::move(t));
    return rep;
}

inline RunReport cmd_riemannian_identity(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "riemannian-identity";
    ChartedMetric flat = flat_cartesian(3, annulus_domain(3, 0.3, 50.0));
    ScalarField r = radius_field(3);
    const int n = cfg.lattice_n > 0 ? cfg.lattice_n : 3;
    std::vector<Vec> lattice = box_lattice(Vec{0.7, 0.7, 0.7}, Vec{1.5, 1.5, 1.5}, n);

    ResidualReport a1 = riemannian_residual(flat, r, 1.0, lattice);
    rep.add_metric("flat_imcf_a1_residual", a1.max_abs, cfg.tol("a1", 1e-8));
    ResidualReport a0 = riemannian_residual(flat, r, 0.0, lattice, true);
    rep.add_metric("flat_self_sourced_a0_residual", a0.max_abs, cfg.tol("a0", 1e-8));

    ChartedMetric schw = schwarzschild_spatial(cfg.param("m", 1.0));
    ScalarField half_r = affine_field(0.0, Vec{0.5, 0.0, 0.0});
    std::vector<Vec> slat;
    for (double rr : {3.0, 4.5, 6.0}) slat.push_back(Vec{rr, 1.1, 0.7});
    ResidualReport sw = riemannian_residual(schw, half_r, 1.0, slat);
    rep.add_metric("schwarzschild_imcf_residual", sw.max_abs, cfg.tol("schwarzschild", 1e-6));

    CsvTable t;
    t.name = "riemannian_residuals";
    t.columns = {"x", "lhs", "rhs", "residual"};
    for (const auto& row : a1.rows) t.rows.push_back({row.x[0], row.lhs, row.rhs, row.resid});
    rep.tables.push_back(std::move(t));
    return rep;
}

inline RunReport cmd_flow_spherical(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "flow-spherical";
    MinkowskiRadialData mk;
    RadialProfile prof = cmd_detail::radial_profile_from(cfg, &mk);
    RadialIDS data{prof, cfg.grid_n > 0 ? cfg.grid_n : 2001};

    auto horizon = find_outermost_horizon(data);
    const double l0 = horizon.value_or(prof.l_min);
    const double s0 = 0.5 * prof.rho(l0);
    FlowSolution flow = build_double_null_flow(data, l0, s0);

    // closed form s = s0 rho/rho(l0)
    double s_err = 0.0;
    for (size_t i = 0; i < flow.l.size(); ++i)
        s_err = std::fmax(s_err, std::fabs(flow.s[i] - s0 * prof.rho(flow.l[i]) / prof.rho(l0)));
    rep.add_metric("rescaled_imcf_closed_form", s_err, cfg.tol("s_closed_form", 1e-10));
    rep.add_metric("theta_relation_residual", flow.max_theta_relation_resid, cfg.tol("theta", 1e-8));

    MonotonicityTable table = hawking_profile(data, flow);
    // DEC certification scan on the grid
    double dec_min = 1e300;
    for (double l : flow.l) {
        RadialGeometry g = radial_geometry(data, l);
        dec_min = std::fmin(dec_min, g.mu - std::fabs(g.J_r));
    }
    rep.add_metric("dec_margin_min", dec_min, -cfg.tol("dec", 1e-8), "ge");
    rep.add_metric("hawking_min_step", table.min_delta, -cfg.tol("monotone", 1e-8), "ge");

    PenroseAreaReport pa = penrose_and_area_checks(data, flow, table, horizon.has_value());
    if (horizon.has_value())
        rep.add_metric("penrose_gap", pa.penrose_gap, -cfg.tol("penrose", 1e-6), "ge");
    if (pa.area_law_applicable)
        rep.add_metric("area_law_drift", pa.area_law_drift, cfg.tol("area_law", 1e-8));

    double bf_delta = 0.0;
    for (double frac : {0.3, 0.6, 0.9}) {
        const double l = flow.l.front() + frac * (flow.l.back() - flow.l.front());
        bf_delta = std::fmax(bf_delta, std::fabs(boundary_functional(data, flow, l).delta));
    }
    rep.add_metric("boundary_functional_delta", bf_delta, cfg.tol("boundary", 1e-8));

    CsvTable t;
    t.name = "flow_table";
    t.columns = {"r", "area", "theta_plus", "theta_minus", "m_H", "delta_m_H"};
    for (const auto& row : table.rows)
        t.rows.push_back({row.l, row.area, row.theta_plus, row.theta_minus, row.m_H, row.delta_m_H});
    rep.tables.push_back(std::move(t));

    ojson extra;
    extra["monotone"] = table.monotone;
    extra["horizon_found"] = horizon.has_value();
    if (horizon.has_value()) {
        extra["horizon_l"] = format_g17(*horizon);
        extra["penrose_gap"] = format_g17(pa.penrose_gap);
    }
    extra["area_law_applicable"] = pa.area_law_applicable;
    if (pa.area_law_applicable) extra["area_law_drift"] = format_g17(pa.area_law_drift);
    rep.details = extra;
    return rep;
}

inline ContinuationSchedule schedule_from(const RunConfig& cfg) {
    ContinuationSchedule s;
    const double step = cfg.sched("sigma_step", 0.1);
    s.sigma_steps.clear();
    for (double v = 0.0; v < 1.0 - 1e-12; v += step) s.sigma_steps.push_back(v);
    s.sigma_steps.push_back(1.0);
    const double e0 = cfg.sched("eps_first", 1e-2), eL = cfg.sched("eps_last", 1e-6);
    s.eps_ladder.clear();
    for (double e = e0; e > eL * (1.0 + 1e-9); e /= 10.0) s.eps_ladder.push_back(e);
    s.eps_ladder.push_back(eL);
    s.damping = cfg.sched("damping", 0.5);
    s.max_iters = static_cast<int>(cfg.sched("max_iters", 4000));
    s.tol = cfg.sched("tol", 1e-10);
    return s;
}

inline RunReport cmd_solve_a0(const RunConfig& cfg) {
    RunReport rep;
    rep.command = "solve-a0";
    MinkowskiRadialData mk;
    bool have_exact = false;
    RadialProfile prof;
    if (cfg.preset == "minkowski-graph-radial" || cfg.preset.empty()) {
        RunConfig c2 = cfg;
        c2.preset = "minkowski-graph-radial";
        prof = cmd_detail::radial_profile_from(c2, &mk);
        have_exact = true;
    } else if (cfg.preset == "flat-shell") {
        prof = flat_radial_profile(cfg.param("r-min", 1.0), cfg.param("r-max", 2.0));
    } else if (cfg.preset == "schwarzschild-shell") {
        prof = schwarzschild_radial_profile(cfg.param("m", 1.0), cfg.param("rho-min", 3.0),
                                            cfg.param("rho-max", 6.0));
    } else {
        prof = cmd_detail::radial_profile_from(cfg);
    }

    BoundaryData bc;
    if (have_exact) {
        bc = BoundaryData{mk.exact_u(0.0), mk.exact_u(prof.l_max), mk.exact_v(0.0),
                          mk.exact_v(prof.l_max)};
    } else {
        bc = BoundaryData{cfg.param("c-minus", 1.0), cfg.param("c-plus", 2.0),
                          cfg.param("d-minus", 0.8), cfg.param("d-plus", 1.9)};
    }
    ContinuationSchedule sched = schedule_from(cfg);

    const int n = cfg.grid_n > 0 ? cfg.grid_n : 2001;
    RadialIDS data{prof, n};
    DiscreteSolution sol = continuation_solve(data, bc, sched);
    rep.add_metric("bounds_margin", sol.min_bounds_margin, -cfg.tol("bounds", 1e-8), "ge");
    const double dl = data.dl();
    const double epsL = sched.eps_ladder.back();
    rep.add_metric("pde_residual", sol.max_residual,
                   cfg.tol("residual_coeff", 50.0) * (dl * dl + epsL));

    SolverDiagnostics diag = solution_diagnostics(data, sol, 1.0, epsL);
    rep.add_metric("w_equation_residual", diag.max_w_residual,
                   cfg.tol("w_coeff", 100.0) * (dl * dl + epsL));
    rep.add_metric("h_equation_residual", diag.max_h_residual,
                   cfg.tol("h_coeff", 100.0) * (dl * dl + epsL));

    if (have_exact) {
        double err = 0.0;
        for (size_t i = 0; i < sol.grid.size(); ++i) {
            err = std::fmax(err, std::fabs(sol.u[i] - mk.exact_u(sol.grid[i])));
            err = std::fmax(err, std::fabs(sol.v[i] - mk.exact_v(sol.grid[i])));
        }
        rep.add_metric("sup_error", err, cfg.tol("error_coeff", 25.0) * (dl * dl + epsL));
    }

    // optional order study under N-doubling
    if (have_exact && cfg.order_study.size() >= 2) {
        std::vector<double> errs;
        for (int nn : cfg.order_study) {
            RadialIDS d2{prof, nn};
            DiscreteSolution s2 = continuation_solve(d2, bc, sched);
            double err = 0.0;
            for (size_t i = 0; i < s2.grid.size(); ++i) {
                err = std::fmax(err, std::fabs(s2.u[i] - mk.exact_u(s2.grid[i])));
                err = std::fmax(err, std::fabs(s2.v[i] - mk.exact_v(s2.grid[i])));
            }
            errs.push_back(err);
        }
        for (size_t i = 0; i + 1 < errs.size(); ++i) {
            const double order = std::log2(errs[i] / errs[i + 1]);
            rep.add_metric("order" + std::to_string(i) + "_lo", order, cfg.tol("order_lo", 1.8), "ge");
            rep.add_metric("order" + std::to_string(i) + "_hi", order, cfg.tol("order_hi", 2.2));
        }
    }

    CsvTable t;
    t.name = "solution";
    t.columns = {"r", "u", "v", "residual_u", "residual_v"};
    for (size_t i = 0; i < sol.grid.size(); ++i)
        t.rows.push_back({sol.grid[i], sol.u[i], sol.v[i], sol.residual_u[i], sol.residual_v[i]});
    rep.tables.push_back(std::move(t));

    ojson legs = ojson::array();
    for (const auto& lt : sol.trace) {
        ojson jl;
        jl["sigma"] = format_g17(lt.sigma);
        jl["eps"] = format_g17(lt.eps);
        jl["iterations"] = lt.iterations;
        jl["final_step"] = format_g17(lt.final_step);
        jl["bounds_margin"] = format_g17(lt.bounds_margin);
        legs.push_back(jl);
    }
    rep.details = ojson{{"run_log", legs}};
    return rep;
}

inline RunReport run_command(const RunConfig& cfg_in, const std::string& command) {
    RunConfig cfg = cfg_in;
    if (!cfg.command.empty() && cfg.command != command)
        throw Error(ErrorCode::ValidationError,
                    "config command '" + cfg.command + "' does not match CLI command '" + command + "'");
    cfg.command = command;
    RunReport rep;
    if (command == "verify-minkowski") rep = cmd_verify_minkowski(cfg);
    else if (command == "verify-identity") rep = cmd_verify_identity(cfg);
    else if (command == "verify-stern") rep = cmd_verify_stern(cfg);
    else if (command == "verify-charged") rep = cmd_verify_charged(cfg);
    else if (command == "verify-schwarzschild") rep = cmd_verify_schwarzschild(cfg);
    else if (command == "flow-spherical") rep = cmd_flow_spherical(cfg);
    else if (command == "solve-a0") rep = cmd_solve_a0(cfg);
    else if (command == "riemannian-identity") rep = cmd_riemannian_identity(cfg);
    else
        throw Error(ErrorCode::ValidationError, "unknown command '" + command + "'");
    // embed the config echo and seed
    ojson echo = cfg.echo.is_null() ? ojson::object() : cfg.echo;
    echo["seed"] = cfg.seed;
    rep.config_echo = echo;
    return rep;
}

}  // namespace dnull
