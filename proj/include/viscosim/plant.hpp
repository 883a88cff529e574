#pragma once

// Explicit time stepping of the unified deformation model
//   phi_t = eps*lap(phi) + a1*f + a2*f_dot + lambda*phi
// on the interior grid, with the actuated-face Dirichlet data held fixed
// during a step (callers update it between steps).

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "viscosim/field.hpp"
#include "viscosim/field_io.hpp"
#include "viscosim/material.hpp"

namespace viscosim {

struct ForceInput {
    ScalarField f;     // applied force density
    ScalarField f_dot; // its time derivative
};

struct PlantState {
    double t = 0.0;
    ScalarField phi;
    ScalarField f_prev; // force of the previous step (for differenced rates on replay)
};

inline PlantState make_plant_state(const GridSpec& g) {
    return PlantState{0.0, ScalarField(g), ScalarField(g)};
}

// Largest stable explicit step for the diffusion part: dt <= 1/(2*eps*sum 1/h^2)
// over the active axes.
inline double cfl_bound(const GridSpec& g, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("cfl_bound: eps must be positive");
    double s = 1.0 / (g.hx() * g.hx());
    if (g.transverse)
        s += 1.0 / (g.hy() * g.hy()) + 1.0 / (g.hz() * g.hz());
    return 1.0 / (2.0 * eps * s);
}

inline PlantState step(const PlantState& state, const ForceInput& force, const ViscoParams& p,
                       double dt) {
    require_same_grid(state.phi, force.f, "plant step");
    require_same_grid(state.phi, force.f_dot, "plant step");
    if (!(dt > 0.0))
        throw std::invalid_argument("plant step: dt must be positive");
    const double bound = cfl_bound(state.phi.spec(), p.eps);
    if (dt > bound)
        throw std::runtime_error("plant step: dt = " + fmt_g17(dt) +
                                 " violates the diffusion stability bound " + fmt_g17(bound));

    const ScalarField lap = laplacian(state.phi);
    PlantState next = state;
    next.t = state.t + dt;
    auto& out = next.phi.values();
    const auto& phi = state.phi.values();
    const auto& lp = lap.values();
    const auto& fv = force.f.values();
    const auto& fd = force.f_dot.values();
    for (std::size_t n = 0; n < out.size(); ++n)
        out[n] = phi[n] + dt * (p.eps * lp[n] + p.a1 * fv[n] + p.a2 * fd[n] + p.lambda * phi[n]);
    // face data persist across the step
    next.f_prev = force.f;
    return next;
}

struct TrajectoryRecord {
    double t = 0.0;
    ScalarField phi;
    ScalarField f;
};

struct TrajectoryLog {
    std::vector<TrajectoryRecord> records;
};

// Fixed-step run from state.t to t_end, sampling every `decimation` steps
// (plus the initial state and the final step).  The force generator is
// queried at the start time of each step.
inline TrajectoryLog run(PlantState state, const std::function<ForceInput(double)>& force_at,
                         const ViscoParams& p, double dt, double t_end,
                         std::size_t decimation = 1) {
    if (!(t_end > state.t))
        throw std::invalid_argument("plant run: t_end must exceed the initial time");
    if (decimation < 1)
        throw std::invalid_argument("plant run: decimation must be >= 1");
    const auto steps =
        static_cast<std::size_t>(std::ceil((t_end - state.t) / dt - 1e-12));
    TrajectoryLog log;
    log.records.push_back({state.t, state.phi, state.f_prev});
    for (std::size_t n = 0; n < steps; ++n) {
        const ForceInput force = force_at(state.t);
        state = step(state, force, p, dt);
        if ((n + 1) % decimation == 0 || n + 1 == steps)
            log.records.push_back({state.t, state.phi, state.f_prev});
    }
    return log;
}

} // namespace viscosim
