#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <numbers>

#include "viscosim/backstepping.hpp"

using namespace viscosim;

// Reference values computed independently with 30-digit arbitrary-precision
// arithmetic (mpmath) from the defining series.
namespace ref {
constexpr double i1_half = 0.25789430539089631636247965952;
constexpr double i1_two = 1.5906368546373290633822544254;
constexpr double i1_ten = 2670.9883037012546543410319668;
constexpr double i1_thirty = 768532038938.95699949429471079;
constexpr double ratio_075 = 0.54836294785742662086424939537;
constexpr double ratio_neg4 = 0.28836240387843669360122412114; // = J1(2)/2
constexpr double k_c1 = -0.27418147392871331043212469769;      // k(1, 0.5, c=1)
constexpr double k_cneg1 = 0.22728358440399500687140710083;    // k(1, 0.5, c=-1)
constexpr double int_k_c1 = -0.26606587775200833559824462522;  // int_0^1 k(1,xi,1) dxi
constexpr double int_k_c4 = -1.2795853023360672674372044408;   // int_0^1 k(1,xi,4) dxi
} // namespace ref

TEST_CASE("modified Bessel I1 series against high-precision references") {
    CHECK(bessel_i1(0.5) == Catch::Approx(ref::i1_half).epsilon(1e-14));
    CHECK(bessel_i1(2.0) == Catch::Approx(ref::i1_two).epsilon(1e-14));
    CHECK(bessel_i1(10.0) == Catch::Approx(ref::i1_ten).epsilon(1e-13));
    CHECK(bessel_i1(30.0) == Catch::Approx(ref::i1_thirty).epsilon(1e-12));
    CHECK(bessel_i1(-2.0) == -bessel_i1(2.0)); // odd function
    CHECK(bessel_i1(0.0) == 0.0);
    CHECK_THROWS_AS(bessel_i1(31.0), std::domain_error);
    CHECK_NOTHROW(bessel_i1(12.0, 20.0));                       // loosened caller cap
    CHECK_THROWS_AS(bessel_i1(12.0, 10.0), std::domain_error);  // tightened caller cap
    CHECK_THROWS_AS(bessel_i1(40.0, 50.0), std::domain_error);  // series guard still rules
}

TEST_CASE("kernel ratio covers both branches of the series") {
    CHECK(kernel_ratio(0.0) == 0.5); // exact: every higher term vanishes
    CHECK(kernel_ratio(0.75) == Catch::Approx(ref::ratio_075).epsilon(1e-14));
    CHECK(kernel_ratio(-4.0) == Catch::Approx(ref::ratio_neg4).epsilon(1e-13));
    CHECK_THROWS_AS(kernel_ratio(1000.0), std::domain_error);
}

TEST_CASE("kernel closed form: reference values, edge and diagonal conditions") {
    CHECK(kernel_value(1.0, 0.5, 1.0) == Catch::Approx(ref::k_c1).epsilon(1e-14));
    CHECK(kernel_value(1.0, 0.5, -1.0) == Catch::Approx(ref::k_cneg1).epsilon(1e-13));

    for (double x : {0.1, 0.37, 1.0, 2.5}) {
        CHECK(kernel_value(x, 0.0, 3.0) == 0.0);
        for (double c : {-2.0, 0.0, 1.0, 11.0})
            CHECK(kernel_value(x, x, c) == -c * x / 2.0); // exact, ratio(0) = 1/2
    }
    CHECK_THROWS_AS(kernel_value(1.0, -0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kernel_value(1.0, 1.1, 1.0), std::invalid_argument);
}

TEST_CASE("kernel table stores the lower triangle") {
    const KernelTable t = KernelTable::build(2.0, 1.5, 8);
    CHECK(t.node(0) == 0.0);
    CHECK(t.node(8) == 1.5);
    for (std::size_t i = 0; i <= t.n; ++i) {
        CHECK(t.at(i, 0) == 0.0);
        CHECK(t.at(i, i) == -2.0 * t.node(i) / 2.0);
        for (std::size_t j = i + 1; j <= t.n; ++j)
            CHECK(t.at(i, j) == 0.0);
    }
    CHECK_THROWS_AS(KernelTable::build(1.0, 0.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(KernelTable::build(1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("kernel solves its PDE to second order") {
    const KernelResidualReport r256 = kernel_pde_residual(1.0, 1.0, 256);
    CHECK(r256.max_rel_interior < 1e-3);
    CHECK(r256.max_edge == 0.0);
    CHECK(r256.max_diag < 1e-10);

    const KernelResidualReport r64 = kernel_pde_residual(1.0, 1.0, 64);
    const KernelResidualReport r128 = kernel_pde_residual(1.0, 1.0, 128);
    CHECK(r64.max_abs_interior / r128.max_abs_interior > 3.0); // ~4x per halving

    // negative c (stable reaction) is handled by the same series
    const KernelResidualReport rneg = kernel_pde_residual(-3.0, 1.0, 128);
    CHECK(rneg.max_rel_interior < 1e-3);
    CHECK_THROWS_AS(kernel_pde_residual(1.0, 1.0, 16), std::invalid_argument);
}

TEST_CASE("boundary control quadrature matches the exact kernel integral") {
    // For phi_e = 1 the control reduces to int_0^delta k(delta, xi) dxi.
    auto uniform_control = [](std::size_t nx, double c) {
        GridSpec g{.nx = nx, .ny = 1, .nz = 1, .delta = 1.0, .transverse = false};
        ScalarField phi(g);
        phi.fill(1.0);
        phi.face(0, 0) = 1.0;
        const KernelTable kt = KernelTable::build(c, g.delta, 16);
        return boundary_control(phi, kt)[0];
    };
    CHECK(uniform_control(127, 1.0) == Catch::Approx(ref::int_k_c1).epsilon(1e-4));
    CHECK(uniform_control(127, 4.0) == Catch::Approx(ref::int_k_c4).epsilon(1e-4));
    // documented coarse-grid contract: trapezoid within 1% on a 16-panel grid
    CHECK(uniform_control(15, 1.0) == Catch::Approx(ref::int_k_c1).epsilon(1e-2));

    GridSpec g{.nx = 7, .ny = 1, .nz = 1, .delta = 2.0, .transverse = false};
    ScalarField phi(g);
    const KernelTable mismatched = KernelTable::build(1.0, 1.0, 8);
    CHECK_THROWS_AS(boundary_control(phi, mismatched), std::invalid_argument);
}

TEST_CASE("volterra transform: identity at c = 0, face annihilated under control") {
    GridSpec g{.nx = 21, .ny = 3, .nz = 3, .delta = 1.0, .ly = 2.0, .lz = 2.0};
    ScalarField phi(g);
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t k = 0; k < g.nz; ++k)
                phi.at(i, j, k) = std::sin(std::numbers::pi * g.x(i)) *
                                  (1.0 + 0.3 * static_cast<double>(j) -
                                   0.2 * static_cast<double>(k));

    const KernelTable id = KernelTable::build(0.0, g.delta, 8);
    const ScalarField w0 = volterra_transform(phi, id);
    CHECK(norms(difference(w0, phi)).linf == 0.0);

    // The quadrature weighs the face sample itself, so exact annihilation is
    // the fixed point of face := boundary_control(phi); the lagged update
    // contracts toward it at rate hx*|k(delta,delta)|/2 per application.
    const KernelTable kt = KernelTable::build(6.0, g.delta, 8);
    ScalarField controlled = phi;
    std::vector<double> prev_u(g.face_count(), 0.0);
    double contraction = 0.0;
    for (int it = 0; it < 20; ++it) {
        const std::vector<double> u = boundary_control(controlled, kt);
        if (it == 1) {
            double num = 0.0, den = 0.0;
            for (std::size_t m = 0; m < u.size(); ++m) {
                num = std::max(num, std::abs(u[m] - prev_u[m]));
                den = std::max(den, std::abs(prev_u[m]));
            }
            contraction = num / den;
        }
        prev_u = u;
        controlled = set_actuated_face(controlled, u);
    }
    CHECK(contraction < 0.5 * g.hx() * std::abs(kernel_value(1.0, 1.0, 6.0)) + 1e-12);

    const ScalarField w = volterra_transform(controlled, kt);
    double face_sup = 0.0;
    for (double v : w.face_values())
        face_sup = std::max(face_sup, std::abs(v));
    CHECK(face_sup < 1e-12 * norms(phi).linf);
}

TEST_CASE("boundary control flips an unstable reaction term to decay") {
    // 1D error dynamics with lambda* above the open-loop threshold eps*pi^2.
    GridSpec g{.nx = 63, .ny = 1, .nz = 1, .delta = 1.0, .transverse = false};
    const ErrorPdeCoeffs co{1.0, 12.0, 12.0};
    const KernelTable kt = KernelTable::build(co.c, g.delta, 32);
    const double dt = 0.45 * (g.hx() * g.hx()) / co.eps_star;

    BoundaryControlState open{0.0, ScalarField(g)}, closed{0.0, ScalarField(g)};
    for (std::size_t i = 0; i < g.nx; ++i) {
        const double v = std::sin(std::numbers::pi * g.x(i));
        open.phi_e.at(i, 0, 0) = v;
        closed.phi_e.at(i, 0, 0) = v;
    }
    const double l2_0 = norms(open.phi_e).l2;
    while (open.t < 0.5) {
        open = closed_loop_step(open, kt, co, dt, false);
        closed = closed_loop_step(closed, kt, co, dt, true);
    }
    CHECK(norms(open.phi_e).l2 > 2.0 * l2_0);   // e^{(12 - pi^2) t} growth
    CHECK(norms(closed.phi_e).l2 < 0.05 * l2_0); // e^{-pi^2 t} decay

    CHECK_THROWS_AS(closed_loop_step(closed, kt, co, 1.0, true), std::runtime_error);
}

TEST_CASE("dense kernel table construction stays fast") {
    const auto start = std::chrono::steady_clock::now();
    const KernelTable t = KernelTable::build(11.0, 1.0, 256);
    const KernelResidualReport r = kernel_pde_residual(11.0, 1.0, 128);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    CHECK(t.samples.size() == 257 * 257);
    CHECK(r.max_rel_interior < 1e-3);
    CHECK(elapsed.count() < 5.0);
}
