#pragma once

// 1D spring–damper force laws and the coefficient maps that feed the unified
// 3D deformation model.  Units follow the convention used throughout the
// library: displacements in mm, forces in N, time in s.

#include <stdexcept>

namespace viscosim {

// Reduced coefficients of the three-element (Burgers-type) network
//   f = k*phi + beta*phi_dot - gamma*f_dot
// obtained from a spring k1 in series with a Kelvin–Voigt pair (k2, b).
struct BurgersCoeffs {
    double k = 0.0;     // [N/mm]
    double beta = 0.0;  // [N*s/mm]
    double gamma = 0.0; // [s]
};

// Parameter vector of the unified PDE
//   phi_t = eps*lap(phi) + a1*f + a2*f_dot + lambda*phi.
struct ViscoParams {
    double eps = 0.0;    // diffusion coefficient [mm^2/s]
    double a1 = 0.0;     // force gain, 1/beta [mm/(N*s)]
    double a2 = 0.0;     // force-rate gain, gamma/beta [mm/N]
    double lambda = 0.0; // reaction rate, -k/beta [1/s]
};

// Kelvin–Voigt law f = k*phi + b*phi_dot (the gamma -> 0 limit of the
// three-element network).
inline double kelvin_voigt_force(double k, double b, double phi, double phi_dot) noexcept {
    return k * phi + b * phi_dot;
}

// One explicit Euler step of the Maxwell element f_dot = (b*phi_dot - f)/alpha.
inline double maxwell_step(double b, double alpha, double f, double phi_dot, double dt) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("maxwell_step: relaxation time alpha must be positive");
    if (!(dt > 0.0))
        throw std::invalid_argument("maxwell_step: dt must be positive");
    return f + dt * (b * phi_dot - f) / alpha;
}

// Network reduction.  k1 is the series spring, (k2, b) the parallel pair:
//   k = k1*k2/(k1+k2), beta = b*k2/(k1+k2), gamma = b/(k1+k2).
// Letting k2 -> inf recovers Kelvin–Voigt (k -> k1, beta -> b, gamma -> 0).
inline BurgersCoeffs burgers_coeffs(double k1, double k2, double b) {
    if (!(k1 > 0.0) || !(k2 > 0.0) || !(b > 0.0))
        throw std::invalid_argument("burgers_coeffs: k1, k2, b must all be positive");
    const double s = k1 + k2;
    return BurgersCoeffs{k1 * k2 / s, b * k2 / s, b / s};
}

// Map reduced network coefficients plus a diffusion coefficient to the PDE
// parameter vector.  Requires beta != 0 (the force gain is 1/beta).
inline ViscoParams pde_params(const BurgersCoeffs& c, double eps) {
    if (c.beta == 0.0)
        throw std::invalid_argument("pde_params: beta must be nonzero");
    if (!(eps > 0.0))
        throw std::invalid_argument("pde_params: eps must be positive");
    return ViscoParams{eps, 1.0 / c.beta, c.gamma / c.beta, -c.k / c.beta};
}

} // namespace viscosim
