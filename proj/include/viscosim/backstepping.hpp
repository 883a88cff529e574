#pragma once

// Boundary control of the error dynamics
//   phi_e_t = eps* lap(phi_e) + lambda* phi_e
// by backstepping along the depth axis.  The Volterra kernel solves
//   k_xx - k_xixi = c k,  k(x,0) = 0,  k(x,x) = -c x / 2,   c = lambda*/eps*,
// and has the closed form
//   k(x,xi) = -c xi R(c (x^2 - xi^2)),   R(s) = I1(sqrt(s))/sqrt(s),
// where R is entire in s (R(s) = 1/2 sum_m s^m / (4^m m! (m+1)!)), so the
// same series covers c < 0 (the J1 branch) and gives R(0) = 1/2 exactly --
// the diagonal condition holds to machine precision by construction.
//
// Actuating the face with U_e = integral_0^delta k(delta,xi) phi_e(xi) dxi
// maps the error system onto the target w_t = eps* lap(w) (the unstable
// reaction term is gone), so the slowest closed-loop mode decays at
// eps* (pi/delta)^2 plus the transverse contributions.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "viscosim/admittance.hpp"
#include "viscosim/field.hpp"
#include "viscosim/field_io.hpp"

namespace viscosim {

// R(s) = I1(sqrt(s))/sqrt(s), entire; guarded to sqrt(|s|) <= 30 where the
// power series holds machine accuracy (beyond that the alternating branch
// loses digits to cancellation).
inline double kernel_ratio(double s) {
    if (std::abs(s) > 900.0)
        throw std::domain_error("kernel_ratio: |s| exceeds the series guard (900)");
    double term = 0.5;
    double sum = term;
    for (int m = 1; m <= 200; ++m) {
        term *= s / (4.0 * static_cast<double>(m) * static_cast<double>(m + 1));
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum) && m > 4)
            break;
    }
    return sum;
}

// Modified Bessel I1 via the same series: I1(x) = x R(x^2).
inline double bessel_i1(double x, double max_arg = 30.0) {
    if (std::abs(x) > max_arg)
        throw std::domain_error("bessel_i1: |x| exceeds max_arg");
    return x * kernel_ratio(x * x);
}

inline double kernel_value(double x, double xi, double c) {
    if (!(xi >= 0.0) || !(xi <= x))
        throw std::invalid_argument("kernel_value: need 0 <= xi <= x");
    return -c * xi * kernel_ratio(c * (x * x - xi * xi));
}

// Dense sample of the kernel on an (n+1)x(n+1) node grid over [0,delta]^2
// (lower triangle xi <= x; the rest is zero).  Used for dumps and residual
// diagnostics; control-law evaluations use the closed form at the exact grid
// nodes, with the table carrying (c, delta).
struct KernelTable {
    double c = 0.0;
    double delta = 1.0;
    std::size_t n = 0; // panels per axis
    std::vector<double> samples;

    static KernelTable build(double c, double delta, std::size_t n) {
        if (n < 1)
            throw std::invalid_argument("KernelTable: need at least one panel");
        if (!(delta > 0.0))
            throw std::invalid_argument("KernelTable: delta must be positive");
        KernelTable t;
        t.c = c;
        t.delta = delta;
        t.n = n;
        t.samples.assign((n + 1) * (n + 1), 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                t.samples[i * (n + 1) + j] = kernel_value(t.node(i), t.node(j), c);
        return t;
    }

    double node(std::size_t i) const {
        return delta * static_cast<double>(i) / static_cast<double>(n);
    }

    double at(std::size_t i, std::size_t j) const { return samples[i * (n + 1) + j]; }
};

// Face actuation U_e(y,z) = integral_0^delta k(delta,xi) phi_e(xi,y,z) dxi
// by composite trapezoid over the grid's x-nodes (the xi = delta endpoint
// uses the currently stored face data).  Returns one value per face node.
inline std::vector<double> boundary_control(const ScalarField& phi_e, const KernelTable& kt) {
    const GridSpec& g = phi_e.spec();
    if (std::abs(kt.delta - g.delta) > 1e-9 * g.delta)
        throw std::invalid_argument("boundary_control: kernel was built for a different depth");
    const double hx = g.hx();
    std::vector<double> krow;
    krow.reserve(g.nx + 2);
    krow.push_back(0.0);
    for (std::size_t i = 0; i < g.nx; ++i)
        krow.push_back(kernel_value(g.delta, g.x(i), kt.c));
    krow.push_back(kernel_value(g.delta, g.delta, kt.c));

    std::vector<double> out(g.face_count(), 0.0);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t k = 0; k < g.nz; ++k) {
            double acc = 0.0; // xi = 0 endpoint: k(delta,0) = 0
            for (std::size_t i = 0; i < g.nx; ++i)
                acc += krow[i + 1] * phi_e.at(i, j, k);
            acc += 0.5 * krow[g.nx + 1] * phi_e.face(j, k);
            out[j * g.nz + k] = hx * acc;
        }
    }
    return out;
}

// w = phi_e - integral_0^x k(x,xi) phi_e(xi) dxi per depth column.  Under the
// control law the transformed face value vanishes, which is the invariant the
// stability argument uses.
inline ScalarField volterra_transform(const ScalarField& phi_e, const KernelTable& kt) {
    const GridSpec& g = phi_e.spec();
    if (std::abs(kt.delta - g.delta) > 1e-9 * g.delta)
        throw std::invalid_argument("volterra_transform: kernel was built for a different depth");
    const double hx = g.hx();
    ScalarField w = phi_e;
    for (std::size_t i = 0; i < g.nx; ++i) {
        // nodes 0, x_0..x_i: trapezoid with half weights at both ends
        std::vector<double> krow(i + 2, 0.0);
        for (std::size_t m = 0; m <= i; ++m)
            krow[m + 1] = kernel_value(g.x(i), g.x(m), kt.c);
        for (std::size_t j = 0; j < g.ny; ++j) {
            for (std::size_t k = 0; k < g.nz; ++k) {
                double acc = 0.0;
                for (std::size_t m = 0; m < i; ++m)
                    acc += krow[m + 1] * phi_e.at(m, j, k);
                acc += 0.5 * krow[i + 1] * phi_e.at(i, j, k);
                w.at(i, j, k) = phi_e.at(i, j, k) - hx * acc;
            }
        }
    }
    const std::vector<double> u = boundary_control(phi_e, kt);
    for (std::size_t n = 0; n < u.size(); ++n)
        w.face_values()[n] = phi_e.face_values()[n] - u[n];
    return w;
}

struct KernelResidualReport {
    double h = 0.0;
    double max_abs_interior = 0.0; // max |k_xx - k_xixi - c k| on interior nodes
    double max_rel_interior = 0.0; // normalized by the reaction-term scale |c| max|k|
    double max_edge = 0.0;         // max |k(x, 0)|
    double max_diag = 0.0;         // max |k(x,x) + c x/2|
};

// Finite-difference verification that the closed-form kernel satisfies its
// PDE and boundary conditions, sampled on an n-panel grid (n >= 32).
inline KernelResidualReport kernel_pde_residual(double c, double delta, std::size_t n) {
    if (n < 32)
        throw std::invalid_argument("kernel_pde_residual: need at least 32 panels");
    if (!(delta > 0.0))
        throw std::invalid_argument("kernel_pde_residual: delta must be positive");
    const double h = delta / static_cast<double>(n);
    KernelResidualReport rep;
    rep.h = h;

    double kmax = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = h * static_cast<double>(i);
        for (std::size_t j = 0; j <= i; ++j)
            kmax = std::max(kmax, std::abs(kernel_value(x, h * static_cast<double>(j), c)));
        rep.max_edge = std::max(rep.max_edge, std::abs(kernel_value(x, 0.0, c)));
        rep.max_diag = std::max(rep.max_diag, std::abs(kernel_value(x, x, c) + c * x / 2.0));
    }

    for (std::size_t i = 1; i + 1 <= n; ++i) {
        const double x = h * static_cast<double>(i);
        for (std::size_t j = 1; j + 1 <= i; ++j) {
            const double xi = h * static_cast<double>(j);
            const double k0 = kernel_value(x, xi, c);
            const double d2x =
                (kernel_value(x + h, xi, c) - 2.0 * k0 + kernel_value(x - h, xi, c)) / (h * h);
            const double d2xi =
                (kernel_value(x, xi + h, c) - 2.0 * k0 + kernel_value(x, xi - h, c)) / (h * h);
            rep.max_abs_interior =
                std::max(rep.max_abs_interior, std::abs(d2x - d2xi - c * k0));
        }
    }
    const double scale = std::abs(c) * kmax;
    rep.max_rel_interior = scale > 0.0 ? rep.max_abs_interior / scale : rep.max_abs_interior;
    return rep;
}

struct BoundaryControlState {
    double t = 0.0;
    ScalarField phi_e;
};

// One explicit step of the error dynamics.  With control enabled the face
// data are recomputed from the current field before the interior update;
// otherwise the stored face data (typically zero) are left alone.
inline BoundaryControlState closed_loop_step(BoundaryControlState s, const KernelTable& kt,
                                             const ErrorPdeCoeffs& co, double dt,
                                             bool apply_control = true) {
    if (!(dt > 0.0))
        throw std::invalid_argument("closed_loop_step: dt must be positive");
    const GridSpec& g = s.phi_e.spec();
    const double bound = 1.0 / (2.0 * co.eps_star *
                                (1.0 / (g.hx() * g.hx()) +
                                 (g.transverse ? 1.0 / (g.hy() * g.hy()) + 1.0 / (g.hz() * g.hz())
                                               : 0.0)));
    if (dt > bound)
        throw std::runtime_error("closed_loop_step: dt = " + fmt_g17(dt) +
                                 " violates the diffusion stability bound " + fmt_g17(bound));
    if (apply_control)
        s.phi_e.face_values() = boundary_control(s.phi_e, kt);
    const ScalarField lap = laplacian(s.phi_e);
    for (std::size_t n = 0; n < s.phi_e.values().size(); ++n)
        s.phi_e.values()[n] +=
            dt * (co.eps_star * lap.values()[n] + co.lambda_star * s.phi_e.values()[n]);
    s.t += dt;
    return s;
}

} // namespace viscosim
