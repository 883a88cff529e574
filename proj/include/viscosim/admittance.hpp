#pragma once

// Outer admittance loop.  The reference deformation delta_ref responds to the
// force error f_e through the first-order law
//   lambda2 * delta_ref_dot = a1*f_e + a2*f_e_dot - lambda1*delta_ref,
// i.e. the transfer function G(s) = (a1 + a2 s)/(lambda1 + lambda2 s).
// Folding this reference into the plant turns the tracking-error dynamics
// into a clean reaction-diffusion system with boosted coefficients
//   eps* = eps/(1-lambda2),  lambda* = (lambda + lambda1)/(1-lambda2),
// which is what the boundary-control design works on.

#include <complex>
#include <stdexcept>
#include <string>

#include "viscosim/field.hpp"
#include "viscosim/material.hpp"

namespace viscosim {

struct ControlGains {
    double lambda1 = 1.0;
    double lambda2 = 0.5;
    double a1 = 1.0;
    double a2 = 0.0;

    // Range required by the error-dynamics change of variables.
    void validate() const {
        if (!(lambda1 > 0.0))
            throw std::invalid_argument("ControlGains: lambda1 must be positive");
        if (!(lambda2 > 0.0 && lambda2 < 1.0))
            throw std::invalid_argument("ControlGains: lambda2 must lie in (0, 1)");
    }
};

struct ErrorPdeCoeffs {
    double eps_star = 0.0;
    double lambda_star = 0.0;
    double c = 0.0; // lambda*/eps* = (lambda + lambda1)/eps, the kernel parameter
};

// One explicit Euler step of the admittance law, applied pointwise to the
// interior and the actuated-face plane.
inline ScalarField admittance_update(const ScalarField& delta_ref, const ScalarField& f_e,
                                     const ScalarField& f_e_dot, const ControlGains& gn,
                                     double dt) {
    require_same_grid(delta_ref, f_e, "admittance_update");
    require_same_grid(delta_ref, f_e_dot, "admittance_update");
    if (gn.lambda2 == 0.0)
        throw std::invalid_argument("admittance_update: lambda2 must be nonzero");
    if (!(dt > 0.0))
        throw std::invalid_argument("admittance_update: dt must be positive");
    ScalarField out = delta_ref;
    const double inv = 1.0 / gn.lambda2;
    auto advance = [&](double d, double fe, double fed) {
        return d + dt * inv * (gn.a1 * fe + gn.a2 * fed - gn.lambda1 * d);
    };
    for (std::size_t n = 0; n < out.values().size(); ++n)
        out.values()[n] = advance(delta_ref.values()[n], f_e.values()[n], f_e_dot.values()[n]);
    for (std::size_t n = 0; n < out.face_values().size(); ++n)
        out.face_values()[n] =
            advance(delta_ref.face_values()[n], f_e.face_values()[n], f_e_dot.face_values()[n]);
    return out;
}

inline std::complex<double> transfer_function_eval(const ControlGains& gn, double omega) {
    const std::complex<double> den(gn.lambda1, gn.lambda2 * omega);
    if (std::abs(den) == 0.0)
        throw std::invalid_argument("transfer_function_eval: pole on the imaginary axis");
    return std::complex<double>(gn.a1, gn.a2 * omega) / den;
}

struct PassivityReport {
    bool passive = false;
    double margin = 0.0; // min Re G(j*omega) over the probed decades
    std::string reason;  // "ok" or the violated condition
};

// Positive-real check of G.  Necessary and sufficient for this first-order
// section: lambda1 > 0, lambda2 > 0, a1*lambda1 > 0, a2*lambda2 >= 0 --
// equivalently Re G(j*omega) = (a1*lambda1 + a2*lambda2*omega^2)/|den|^2 > 0
// for all omega.  The margin is evaluated on 61 log-spaced frequencies per
// the reporting convention (omega in [1e-3, 1e3] rad/s).
inline PassivityReport passivity_check(const ControlGains& gn) {
    PassivityReport rep;
    if (!(gn.lambda1 > 0.0)) {
        rep.reason = "lambda1 must be positive";
        return rep;
    }
    if (!(gn.lambda2 > 0.0)) {
        rep.reason = "lambda2 must be positive";
        return rep;
    }
    double margin = 0.0;
    bool first = true;
    for (int n = 0; n <= 60; ++n) {
        const double omega = std::pow(10.0, -3.0 + 0.1 * n);
        const double re = transfer_function_eval(gn, omega).real();
        margin = first ? re : std::min(margin, re);
        first = false;
    }
    rep.margin = margin;
    if (!(gn.a1 * gn.lambda1 > 0.0)) {
        rep.reason = "a1*lambda1 must be positive";
        return rep;
    }
    if (gn.a2 * gn.lambda2 < 0.0) {
        rep.reason = "a2*lambda2 must be nonnegative (fails at high frequency)";
        return rep;
    }
    rep.passive = true;
    rep.reason = "ok";
    return rep;
}

inline ErrorPdeCoeffs error_pde_coeffs(const ViscoParams& p, const ControlGains& gn) {
    gn.validate();
    const double denom = 1.0 - gn.lambda2;
    ErrorPdeCoeffs c;
    c.eps_star = p.eps / denom;
    c.lambda_star = (p.lambda + gn.lambda1) / denom;
    c.c = c.lambda_star / c.eps_star;
    return c;
}

} // namespace viscosim
