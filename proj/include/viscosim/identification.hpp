#pragma once

// Online parameter identification for theta = (eps, a1, a2, lambda).
//
// Each measurement channel j tracks a probe point and carries
//   Psi_j  = [lap(phi), f, f_dot, phi] at the probe   (regressor input)
//   psi_j' = -L'*psi_j + Psi_j                        (filtered regressor)
//   phi_hat_j' = Psi_j . theta_hat + [L e]_j          (observer)
//   theta_hat' = +K * sum_j psi_j e_j                 (estimator)
// with e_j = phi_j - phi_hat_j and the coupled observer gain
//   [L e]_j = L' e_j + K psi_j . S,   S = sum_i psi_i e_i.
// The coupling matrix L = L'I + K psi psi^T makes the auxiliary error
// eta_j = e_j - psi_j . (theta - theta_hat) decay at exactly rate L' in
// every channel, which is what the convergence analysis rests on.  With a
// single channel this reduces to the familiar scalar gain L' + K |psi|^2.
//
// Excitation is monitored through the sliding-window Gram matrix
// M = integral of sum_j psi_j psi_j^T over the trailing tau seconds; its
// smallest eigenvalue is the persistency margin.  Recorded (Psi, phi)
// segments can be replayed as virtual channels that keep exciting the
// estimator after the live plant has settled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "viscosim/field.hpp"
#include "viscosim/linalg.hpp"
#include "viscosim/plant.hpp"

namespace viscosim {

struct ProbePoint {
    std::size_t ix = 0, iy = 0, iz = 0;
};

struct ChannelMeasurement {
    Vec4 Psi{};       // [lap(phi), f, f_dot, phi] at the probe
    double phi = 0.0; // measured deformation at the probe
};

struct Channel {
    ProbePoint probe{};
    Vec4 psi{};           // filtered regressor state
    double phi_hat = 0.0; // observer estimate
};

struct ReplaySegment {
    double dt = 0.0;
    std::vector<ChannelMeasurement> samples;
};

struct VirtualChannel {
    ReplaySegment segment;
    Channel ch;
    std::size_t cursor = 0;
};

struct EstimatorState {
    Vec4 theta_hat{};
    double K = 1.0;       // estimation gain
    double L_prime = 1.0; // observer leak rate
    std::vector<Channel> channels;
    std::vector<VirtualChannel> replay;
    std::size_t replay_capacity = 8;
    std::size_t evictions = 0; // count of replay segments dropped to make room
};

// psi <- psi + dt*(-L'*psi + Psi)
inline void regressor_step(Vec4& psi, const Vec4& Psi, double L_prime, double dt) {
    for (std::size_t i = 0; i < 4; ++i)
        psi[i] += dt * (-L_prime * psi[i] + Psi[i]);
}

// Single-channel observer update with its scalar gain L' + K|psi|^2.
inline void observer_step(Channel& ch, const Vec4& Psi, const Vec4& theta_hat, double K,
                          double L_prime, double phi_measured, double dt) {
    const double e = phi_measured - ch.phi_hat;
    const double gain = L_prime + K * dot(ch.psi, ch.psi);
    ch.phi_hat += dt * (dot(Psi, theta_hat) + gain * e);
}

inline ChannelMeasurement measure_channel(const ScalarField& phi, const ForceInput& force,
                                          const ProbePoint& p) {
    ChannelMeasurement m;
    m.Psi = {laplacian_at(phi, p.ix, p.iy, p.iz), force.f.at(p.ix, p.iy, p.iz),
             force.f_dot.at(p.ix, p.iy, p.iz), phi.at(p.ix, p.iy, p.iz)};
    m.phi = phi.at(p.ix, p.iy, p.iz);
    return m;
}

struct EstimatorStepInfo {
    double obs_err_sup = 0.0; // max_j |phi_j - phi_hat_j| before the update
};

// One coupled update of every channel (live first, then virtual) and of
// theta_hat.  All right-hand sides are evaluated at the pre-step state.
inline EstimatorStepInfo estimator_step(EstimatorState& st,
                                        const std::vector<ChannelMeasurement>& live, double dt) {
    if (live.size() != st.channels.size())
        throw std::invalid_argument("estimator_step: one measurement per live channel required");
    const std::size_t total = st.channels.size() + st.replay.size();
    if (total == 0)
        throw std::invalid_argument("estimator_step: at least one channel required");
    if (!(dt > 0.0))
        throw std::invalid_argument("estimator_step: dt must be positive");

    std::vector<const ChannelMeasurement*> meas(total);
    std::vector<Channel*> chans(total);
    for (std::size_t j = 0; j < st.channels.size(); ++j) {
        meas[j] = &live[j];
        chans[j] = &st.channels[j];
    }
    for (std::size_t v = 0; v < st.replay.size(); ++v) {
        VirtualChannel& vc = st.replay[v];
        meas[st.channels.size() + v] = &vc.segment.samples[vc.cursor];
        chans[st.channels.size() + v] = &vc.ch;
    }

    EstimatorStepInfo info;
    std::vector<double> err(total);
    Vec4 S{};
    for (std::size_t j = 0; j < total; ++j) {
        err[j] = meas[j]->phi - chans[j]->phi_hat;
        S = add(S, scaled(chans[j]->psi, err[j]));
        info.obs_err_sup = std::max(info.obs_err_sup, std::abs(err[j]));
    }

    const Vec4 theta_old = st.theta_hat;
    st.theta_hat = add(st.theta_hat, scaled(S, dt * st.K));

    for (std::size_t j = 0; j < total; ++j) {
        const double coupled = st.L_prime * err[j] + st.K * dot(chans[j]->psi, S);
        chans[j]->phi_hat += dt * (dot(meas[j]->Psi, theta_old) + coupled);
        regressor_step(chans[j]->psi, meas[j]->Psi, st.L_prime, dt);
    }

    // Advance replay cursors; on wrap, re-anchor phi_hat so the channel error
    // carries over as a pure contraction (the jump back to the segment start
    // is applied to estimate and measurement alike).
    for (VirtualChannel& vc : st.replay) {
        if (++vc.cursor >= vc.segment.samples.size()) {
            vc.cursor = 0;
            const ChannelMeasurement& first = vc.segment.samples.front();
            const ChannelMeasurement& last = vc.segment.samples.back();
            vc.ch.phi_hat += first.phi - (last.phi + dt * dot(last.Psi, st.theta_hat));
        }
    }
    return info;
}

// Append recorded segments as virtual channels, evicting the oldest when the
// buffer is at capacity.  Replayed samples must share the estimator step.
inline void replay_extend(EstimatorState& st, const std::vector<ReplaySegment>& segments,
                          double dt) {
    for (const ReplaySegment& seg : segments) {
        if (seg.samples.size() < 2)
            throw std::invalid_argument("replay_extend: segment needs at least two samples");
        if (std::abs(seg.dt - dt) > 1e-12 * std::max(1.0, std::abs(dt)))
            throw std::invalid_argument("replay_extend: segment sample step differs from dt");
        if (st.replay.size() >= st.replay_capacity) {
            st.replay.erase(st.replay.begin());
            ++st.evictions;
        }
        VirtualChannel vc;
        vc.segment = seg;
        vc.ch.phi_hat = seg.samples.front().phi; // start with zero observer error
        st.replay.push_back(std::move(vc));
    }
}

// Gram increment sum_j psi_j psi_j^T * dt over all channels.
inline Mat4 regressor_outer(const EstimatorState& st, double dt) {
    Mat4 m{};
    for (const Channel& ch : st.channels)
        add_outer(m, ch.psi, dt);
    for (const VirtualChannel& vc : st.replay)
        add_outer(m, vc.ch.psi, dt);
    return m;
}

// Sliding integral of the regressor Gram over the trailing tau seconds.
class PEWindow {
public:
    explicit PEWindow(double tau) : tau_(tau) {
        if (!(tau > 0.0))
            throw std::invalid_argument("PEWindow: tau must be positive");
    }

    void add(double t, const Mat4& increment) {
        if (entries_.empty() && pops_ == 0)
            first_t_ = t;
        entries_.emplace_back(t, increment);
        add_mat(accum_, increment);
        while (!entries_.empty() && entries_.front().first <= t - tau_) {
            add_mat(accum_, entries_.front().second, -1.0);
            entries_.pop_front();
            // Rebuild occasionally so the running sum cannot drift.
            if (++pops_ % 16384 == 0) {
                accum_ = Mat4{};
                for (const auto& [te, me] : entries_)
                    add_mat(accum_, me);
            }
        }
    }

    // True once samples cover a full trailing window, i.e. the first sample
    // ever added is at least tau old.  (The front of the deque cannot be used
    // here: add() prunes entries older than t - tau, so the deque alone cannot
    // distinguish "window full" from "just started".)
    bool spans(double t) const {
        return (pops_ > 0 || !entries_.empty()) && t - first_t_ + 1e-12 >= tau_;
    }

    const Mat4& gram() const {
        if (entries_.empty())
            throw std::runtime_error("PEWindow: window is empty");
        return accum_;
    }

    double tau() const noexcept { return tau_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    double tau_;
    std::deque<std::pair<double, Mat4>> entries_;
    Mat4 accum_{};
    double first_t_ = 0.0;
    std::size_t pops_ = 0;
};

// Persistency-of-excitation margin: smallest eigenvalue of the window Gram.
inline double pe_metric(const PEWindow& w) { return min_eigenvalue(w.gram()); }

namespace detail {
inline double halton(std::size_t i, std::size_t base) {
    double f = 1.0, r = 0.0;
    for (std::size_t n = i + 1; n > 0; n /= base) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(n % base);
    }
    return r;
}
} // namespace detail

// Deterministic low-discrepancy spread of probe points over the interior.
inline std::vector<ProbePoint> default_probes(const GridSpec& g, std::size_t count) {
    if (count < 1 || count > g.interior_count())
        throw std::invalid_argument("default_probes: count must be in [1, interior nodes]");
    std::vector<ProbePoint> out;
    std::size_t draw = 0;
    while (out.size() < count) {
        if (draw > 1000 * count)
            throw std::runtime_error("default_probes: could not place distinct probes");
        ProbePoint p{
            static_cast<std::size_t>(detail::halton(draw, 2) * static_cast<double>(g.nx)),
            static_cast<std::size_t>(detail::halton(draw, 3) * static_cast<double>(g.ny)),
            static_cast<std::size_t>(detail::halton(draw, 5) * static_cast<double>(g.nz))};
        ++draw;
        bool dup = false;
        for (const ProbePoint& q : out)
            dup = dup || (q.ix == p.ix && q.iy == p.iy && q.iz == p.iz);
        if (!dup)
            out.push_back(p);
    }
    return out;
}

} // namespace viscosim
