#pragma once

// Closed-form eigen-series solutions of the reaction-diffusion system
//   u_t = eps* lap(u) + lambda* u,  u = 0 on the boundary,
// on the box (0,delta)x(0,ly)x(0,lz).  Each Dirichlet mode
//   sin(n pi x/delta) sin(m pi y/ly) sin(p pi z/lz)
// evolves independently with exponent (lambda* - eps* mu), where
//   mu = (n pi/delta)^2 + (m pi/ly)^2 + (p pi/lz)^2.
// On a non-transverse grid the y/z factors drop out and mu keeps only the
// depth term.  These series are the independent reference the solver is
// checked against; sub-Nyquist modes are exactly orthogonal under the
// discrete sine inner product, so projections of grid data are exact.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "viscosim/admittance.hpp"
#include "viscosim/field.hpp"

namespace viscosim {

struct EigenMode {
    int n = 1, m = 1, p = 1; // positive mode numbers per axis
    double coeff = 0.0;
};

inline double mode_eigenvalue(const EigenMode& mode, const GridSpec& g) {
    if (mode.n < 1 || mode.m < 1 || mode.p < 1)
        throw std::invalid_argument("mode_eigenvalue: mode numbers must be >= 1");
    const double pi = std::numbers::pi;
    double mu = std::pow(mode.n * pi / g.delta, 2);
    if (g.transverse)
        mu += std::pow(mode.m * pi / g.ly, 2) + std::pow(mode.p * pi / g.lz, 2);
    return mu;
}

inline double mode_rate(const EigenMode& mode, const ErrorPdeCoeffs& co, const GridSpec& g) {
    return co.lambda_star - co.eps_star * mode_eigenvalue(mode, g);
}

// Slowest (least negative) decay rate: the fundamental mode's exponent.
inline double slowest_rate(const ErrorPdeCoeffs& co, const GridSpec& g) {
    return mode_rate(EigenMode{1, 1, 1, 1.0}, co, g);
}

inline ScalarField box_series_solution(const std::vector<EigenMode>& modes,
                                       const ErrorPdeCoeffs& co, double t, const GridSpec& g) {
    g.validate();
    ScalarField out(g);
    const double pi = std::numbers::pi;
    for (const EigenMode& mode : modes) {
        const double amp = mode.coeff * std::exp(mode_rate(mode, co, g) * t);
        if (amp == 0.0)
            continue;
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double sx = std::sin(mode.n * pi * g.x(i) / g.delta);
            for (std::size_t j = 0; j < g.ny; ++j) {
                const double sy =
                    g.transverse ? std::sin(mode.m * pi * g.y(j) / g.ly) : 1.0;
                for (std::size_t k = 0; k < g.nz; ++k) {
                    const double sz =
                        g.transverse ? std::sin(mode.p * pi * g.z(k) / g.lz) : 1.0;
                    out.at(i, j, k) += amp * sx * sy * sz;
                }
            }
        }
    }
    return out;
}

// Sine-series coefficients of grid data up to max_per_axis in each direction.
// The discrete sine transform with the h-weighted inner product reproduces
// sub-Nyquist coefficients exactly.
inline std::vector<EigenMode> project_initial(const ScalarField& f, int max_per_axis) {
    const GridSpec& g = f.spec();
    if (max_per_axis < 1)
        throw std::invalid_argument("project_initial: max_per_axis must be >= 1");
    const double pi = std::numbers::pi;
    std::vector<EigenMode> out;
    const int nmax = std::min<std::size_t>(max_per_axis, g.nx);
    const int mmax = g.transverse ? std::min<std::size_t>(max_per_axis, g.ny) : 1;
    const int pmax = g.transverse ? std::min<std::size_t>(max_per_axis, g.nz) : 1;
    for (int n = 1; n <= nmax; ++n) {
        for (int m = 1; m <= mmax; ++m) {
            for (int p = 1; p <= pmax; ++p) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.nx; ++i) {
                    const double sx = std::sin(n * pi * g.x(i) / g.delta);
                    for (std::size_t j = 0; j < g.ny; ++j) {
                        const double sy = g.transverse ? std::sin(m * pi * g.y(j) / g.ly) : 1.0;
                        for (std::size_t k = 0; k < g.nz; ++k) {
                            const double sz =
                                g.transverse ? std::sin(p * pi * g.z(k) / g.lz) : 1.0;
                            acc += f.at(i, j, k) * sx * sy * sz;
                        }
                    }
                }
                double coeff = acc * 2.0 * g.hx() / g.delta;
                if (g.transverse)
                    coeff *= (2.0 * g.hy() / g.ly) * (2.0 * g.hz() / g.lz);
                else
                    coeff /= static_cast<double>(g.ny * g.nz);
                out.push_back(EigenMode{n, m, p, coeff});
            }
        }
    }
    return out;
}

} // namespace viscosim
