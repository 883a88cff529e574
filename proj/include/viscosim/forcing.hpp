#pragma once

// Force programs: a separable space/time description of the applied force
// density.  Time dependence is a sum of primitive terms (steps, bounded
// ramps, sinusoids) whose analytic rates feed the f_dot channel; space is a
// box patch given in fractions of each extent, either a raised-cosine bump
// (smooth, vanishing at the patch edge) or a flat indicator.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "viscosim/field.hpp"
#include "viscosim/plant.hpp"

namespace viscosim {

struct ForceTerm {
    enum class Kind { step, ramp, sine, exp_rise };
    Kind kind = Kind::step;
    double amplitude = 0.0; // step height / ramp rate / sine amplitude / rise plateau
    double t_on = 0.0;      // activation time
    double t_off = std::numeric_limits<double>::infinity(); // ramp holds, sine switches off
    double freq_hz = 0.0;   // sine frequency
    double phase = 0.0;     // sine phase [rad]
    double tau = 1.0;       // exp_rise time constant

    double value(double t) const {
        switch (kind) {
        case Kind::step:
            return t >= t_on ? amplitude : 0.0;
        case Kind::ramp:
            if (t < t_on)
                return 0.0;
            return amplitude * (std::min(t, t_off) - t_on);
        case Kind::sine:
            if (t < t_on || t >= t_off)
                return 0.0;
            return amplitude *
                   std::sin(2.0 * std::numbers::pi * freq_hz * (t - t_on) + phase);
        case Kind::exp_rise:
            return t >= t_on ? amplitude * (1.0 - std::exp(-(t - t_on) / tau)) : 0.0;
        }
        return 0.0;
    }

    double rate(double t) const {
        switch (kind) {
        case Kind::step:
            return 0.0; // flat away from the jump
        case Kind::ramp:
            return (t >= t_on && t < t_off) ? amplitude : 0.0;
        case Kind::sine: {
            if (t < t_on || t >= t_off)
                return 0.0;
            const double w = 2.0 * std::numbers::pi * freq_hz;
            return amplitude * w * std::cos(w * (t - t_on) + phase);
        }
        case Kind::exp_rise:
            return t >= t_on ? amplitude * std::exp(-(t - t_on) / tau) / tau : 0.0;
        }
        return 0.0;
    }
};

struct SpatialPatch {
    // patch box in fractions of (delta, ly, lz)
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;
    double z0 = 0.0, z1 = 1.0;
    bool smooth = true;

    static double axis_weight(double frac, double lo, double hi, bool smooth) {
        if (frac <= lo || frac >= hi)
            return 0.0;
        if (!smooth)
            return 1.0;
        const double s = (frac - lo) / (hi - lo);
        const double sn = std::sin(std::numbers::pi * s);
        return sn * sn;
    }

    double weight(double xf, double yf, double zf) const {
        return axis_weight(xf, x0, x1, smooth) * axis_weight(yf, y0, y1, smooth) *
               axis_weight(zf, z0, z1, smooth);
    }

    void validate() const {
        if (!(x0 < x1) || !(y0 < y1) || !(z0 < z1))
            throw std::invalid_argument("SpatialPatch: need lo < hi on every axis");
    }
};

struct ForceProgram {
    SpatialPatch patch;
    std::vector<ForceTerm> terms;

    double amplitude(double t) const {
        double a = 0.0;
        for (const auto& term : terms)
            a += term.value(t);
        return a;
    }

    double amplitude_rate(double t) const {
        double a = 0.0;
        for (const auto& term : terms)
            a += term.rate(t);
        return a;
    }

    // Patch weights sampled at the interior nodes (face plane stays zero).
    ScalarField profile(const GridSpec& g) const {
        patch.validate();
        ScalarField out(g);
        for (std::size_t i = 0; i < g.nx; ++i)
            for (std::size_t j = 0; j < g.ny; ++j)
                for (std::size_t k = 0; k < g.nz; ++k)
                    out.at(i, j, k) =
                        patch.weight(g.x(i) / g.delta, g.y(j) / g.ly, g.z(k) / g.lz);
        return out;
    }

    // Patch weights scaled so the discrete volume integral equals 1 (so a
    // program amplitude of F produces a resultant force of F).
    ScalarField unit_resultant_profile(const GridSpec& g) const {
        ScalarField p = profile(g);
        const double total = volume_integral(p);
        if (!(std::abs(total) > 0.0))
            throw std::invalid_argument("ForceProgram: patch does not cover any grid node");
        scale_in_place(p, 1.0 / total);
        return p;
    }

    ForceInput input_from_profile(const ScalarField& prof, double t) const {
        ForceInput in{prof, prof};
        scale_in_place(in.f, amplitude(t));
        scale_in_place(in.f_dot, amplitude_rate(t));
        return in;
    }
};

} // namespace viscosim
