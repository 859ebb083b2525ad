#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "dnull/exact_slices.hpp"
#include "dnull/initial_data.hpp"

using namespace dnull;

namespace {

InitialDataSet flat_k0() {
    return InitialDataSet{flat_cartesian(3, annulus_domain(3, 0.2, 100.0)), zero_sym_tensor(3), "flat"};
}

}  // namespace

TEST_CASE("constraint densities: vacuum slices") {
    InitialDataSet mink = flat_k0();
    ConstraintDensities c = constraint_densities(mink, Vec{0.8, 0.4, 0.9});
    CHECK(std::fabs(c.mu) < 1e-13);
    CHECK(c.J_norm < 1e-13);
    CHECK(std::fabs(c.dec_margin) < 1e-13);

    MinkowskiGraphSlice boost = induce_minkowski_graph(affine_field(0.0, Vec{0.4, 0.0, 0.0}),
                                                       Vec{0.5, 0.5, 0.5}, Vec{1.5, 1.5, 1.5});
    ConstraintDensities cb = constraint_densities(boost.induced, Vec{1.0, 0.8, 1.2});
    CHECK(std::fabs(cb.mu) < 1e-6);
    CHECK(cb.J_norm < 1e-6);

    InitialDataSet schw{schwarzschild_spatial(1.0), zero_sym_tensor(3), "schwarzschild"};
    for (double r : {3.0, 4.0, 7.0}) {
        ConstraintDensities cs = constraint_densities(schw, Vec{r, 1.1, 0.6});
        CHECK(std::fabs(cs.mu) < 1e-6);
        CHECK(cs.J_norm < 1e-6);
    }
}

TEST_CASE("constraint densities: k = g on flat space gives mu = 3") {
    ChartedMetric flat = flat_cartesian(3, annulus_domain(3, 0.2, 100.0));
    InitialDataSet ids{flat, metric_multiple(flat, 1.0), "flat-umbilic"};
    ConstraintDensities c = constraint_densities(ids, Vec{0.5, 0.3, 0.8});
    CHECK(c.mu == Catch::Approx(3.0).margin(1e-12));
    CHECK(c.J_norm < 1e-12);
    CHECK(c.dec_margin == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("mu and J transform as scalar/covector across charts") {
    // flat space with k = g + dr x dr in Cartesian and polar charts
    ChartedMetric cart = flat_cartesian(3, annulus_domain(3, 0.2, 100.0));
    ScalarField r = radius_field(3);
    SymTensorField k_cart;
    k_cart.value = [r](const Vec& x) {
        Vec dr = r.grad(x);
        return Mat::identity(3) + outer(dr, dr);
    };
    k_cart.deriv = [r](const Vec& x) {
        Vec dr = r.grad(x);
        Mat ddr = r.hess(x);
        Ten3 d(3);
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) d(k, i, j) = ddr(i, k) * dr[j] + dr[i] * ddr(j, k);
        return d;
    };
    InitialDataSet a{cart, k_cart, "cart"};

    ChartedMetric polar = flat_spherical3();
    SymTensorField k_pol;
    k_pol.value = [](const Vec& x) {
        Mat kv(3);
        const double rr = x[0], st = std::sin(x[1]);
        kv(0, 0) = 2.0;
        kv(1, 1) = rr * rr;
        kv(2, 2) = rr * rr * st * st;
        return kv;
    };
    k_pol.deriv = [](const Vec& x) {
        Ten3 d(3);
        const double rr = x[0], st = std::sin(x[1]), ct = std::cos(x[1]);
        d(0, 1, 1) = 2.0 * rr;
        d(0, 2, 2) = 2.0 * rr * st * st;
        d(1, 2, 2) = rr * rr * 2.0 * st * ct;
        return d;
    };
    InitialDataSet b{polar, k_pol, "polar"};

    const double rr = 1.7, th = 1.1, ph = 0.6;
    Vec xc{rr * std::sin(th) * std::cos(ph), rr * std::sin(th) * std::sin(ph), rr * std::cos(th)};
    Vec xp{rr, th, ph};
    ConstraintDensities ca = constraint_densities(a, xc);
    ConstraintDensities cb = constraint_densities(b, xp);
    CHECK(ca.mu == Catch::Approx(cb.mu).margin(1e-8));
    CHECK(ca.J_norm == Catch::Approx(cb.J_norm).margin(1e-8));
}

TEST_CASE("null expansions: flat sphere, umbilic slice, time reversal") {
    InitialDataSet mink = flat_k0();
    ScalarField r = radius_field(3);
    NullExpansions t0 = null_expansions(mink, r, Vec{2.0, 0.0, 0.0});
    CHECK(t0.theta_plus == Catch::Approx(1.0).margin(1e-12));
    CHECK(t0.theta_minus == Catch::Approx(1.0).margin(1e-12));

    ChartedMetric flat = flat_cartesian(3, annulus_domain(3, 0.2, 100.0));
    InitialDataSet umb{flat, metric_multiple(flat, 1.0), "flat-umbilic"};
    NullExpansions tu = null_expansions(umb, r, Vec{1.0, 0.0, 0.0});
    CHECK(tu.theta_plus == Catch::Approx(4.0).margin(1e-12));
    CHECK(tu.theta_minus == Catch::Approx(0.0).margin(1e-12));

    // theta_+(k) = theta_-(-k) pointwise
    RandomChartData rc = random_analytic_case(555);
    InitialDataSet idp{rc.metric, rc.k, "rand"};
    SymTensorField mk;
    mk.value = [rc](const Vec& x) { return -1.0 * rc.k.value(x); };
    mk.deriv = [rc](const Vec& x) {
        Ten3 d = rc.k.deriv(x);
        for (auto& e : d.a) e = -e;
        return d;
    };
    InitialDataSet idm{rc.metric, mk, "rand-neg"};
    for (const Vec& x : box_lattice(Vec{-0.4, -0.4, -0.4}, Vec{0.4, 0.4, 0.4}, 3)) {
        NullExpansions tp = null_expansions(idp, rc.u, x);
        NullExpansions tm = null_expansions(idm, rc.u, x);
        CHECK(tp.theta_plus == Catch::Approx(tm.theta_minus).margin(1e-12));
        CHECK(tp.theta_minus == Catch::Approx(tm.theta_plus).margin(1e-12));
    }
}

TEST_CASE("hawking mass: flat, Schwarzschild, umbilic sphere") {
    InitialDataSet mink = flat_k0();
    ScalarField r = radius_field(3);
    for (double rr : {1.0, 2.5}) {
        SurfaceSlice s{cartesian_sphere(rr), r, 16};
        CHECK(std::fabs(hawking_mass(mink, s, HawkingVariant::Riemannian)) < 1e-10);
        CHECK(std::fabs(hawking_mass(mink, s, HawkingVariant::Spacetime)) < 1e-10);
    }

    InitialDataSet schw{schwarzschild_spatial(1.0), zero_sym_tensor(3), "schw"};
    ScalarField rc = affine_field(0.0, Vec{1.0, 0.0, 0.0});
    SurfaceSlice s4{coord_sphere(4.0), rc, 16};
    CHECK(hawking_mass(schw, s4, HawkingVariant::Riemannian) == Catch::Approx(1.0).margin(1e-8));
    CHECK(hawking_mass(schw, s4, HawkingVariant::Spacetime) == Catch::Approx(1.0).margin(1e-8));

    ChartedMetric flat = flat_cartesian(3, annulus_domain(3, 0.2, 100.0));
    InitialDataSet umb{flat, metric_multiple(flat, 1.0), "flat-umbilic"};
    SurfaceSlice s1{cartesian_sphere(1.0), r, 16};
    // theta_- = 0 on the unit sphere, so m_H = sqrt(|S|/16pi) = 1/2
    CHECK(hawking_mass(umb, s1, HawkingVariant::Spacetime) == Catch::Approx(0.5).margin(1e-8));

    // spacetime == riemannian whenever k = 0 on the surface
    SurfaceSlice s2{cartesian_sphere(1.8), r, 16};
    CHECK(hawking_mass(mink, s2, HawkingVariant::Spacetime) ==
          Catch::Approx(hawking_mass(mink, s2, HawkingVariant::Riemannian)).margin(1e-12));
}

TEST_CASE("hawking mass is chart independent for the same sphere") {
    // same Euclidean sphere of radius 1.6 seen in the Cartesian and polar charts
    InitialDataSet cart = flat_k0();
    ScalarField r_cart = radius_field(3);
    SurfaceSlice sc{cartesian_sphere(1.6), r_cart, 16};

    InitialDataSet polar{flat_spherical3(), zero_sym_tensor(3), "flat-polar"};
    ScalarField r_pol = affine_field(0.0, Vec{1.0, 0.0, 0.0});
    SurfaceSlice sp{coord_sphere(1.6), r_pol, 16};

    const double a = hawking_mass(cart, sc, HawkingVariant::Riemannian);
    const double b = hawking_mass(polar, sp, HawkingVariant::Riemannian);
    CHECK(a == Catch::Approx(b).margin(1e-8));
}

TEST_CASE("surface quadrature: area weights and refinement gate") {
    ChartedMetric polar = flat_spherical3();
    auto one = [](const Vec&) { return 1.0; };
    const double area = surface_integral(polar, coord_sphere(2.0), one, 24, 24);
    CHECK(area == Catch::Approx(16.0 * M_PI).margin(1e-9));

    // under-resolved oscillatory integrand trips the two-level gate
    auto wiggly = [](const Vec& x) { return std::cos(19.0 * x[1]) + 1.5; };
    CHECK_THROWS_AS(surface_integral_checked(polar, coord_sphere(2.0), wiggly, 4), Error);
}

TEST_CASE("dec margin scan: vacuum, umbilic, Schwarzschild") {
    InitialDataSet mink = flat_k0();
    std::vector<Vec> lat = box_lattice(Vec{0.6, 0.6, 0.6}, Vec{1.4, 1.4, 1.4}, 4);
    DecScanResult r0 = dec_margin_scan(mink, lat);
    CHECK(std::fabs(r0.min_margin) < 1e-8);
    CHECK(r0.satisfies_dec);

    ChartedMetric flat = flat_cartesian(3, annulus_domain(3, 0.2, 100.0));
    InitialDataSet umb{flat, metric_multiple(flat, 1.0), "flat-umbilic"};
    DecScanResult r1 = dec_margin_scan(umb, lat);
    CHECK(r1.min_margin == Catch::Approx(3.0).margin(1e-10));

    InitialDataSet schw{schwarzschild_spatial(1.0), zero_sym_tensor(3), "schw"};
    std::vector<Vec> slat;
    for (double r : {3.0, 4.0, 5.0, 6.0}) slat.push_back(Vec{r, 1.2, 0.3});
    DecScanResult r2 = dec_margin_scan(schw, slat);
    CHECK(std::fabs(r2.min_margin) < 1e-7);
    CHECK(r2.satisfies_dec);
}
