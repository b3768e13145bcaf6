#pragma once

// Numerical flow maps for the model equations.
//
// strang: half-step of the free multiplier e^{-i(dt/2)A}, exactly solved
// interaction substep, half-step of the multiplier. The interaction substep
// is exact for every model here: for nls/hartree it is a modulus-preserving
// pointwise phase rotation; for kg/skg the auxiliary real field phi is
// invariant under the substep, which reduces it to an explicit kick.
//
// rk4_interaction: classical four-stage Runge-Kutta applied to the
// interaction-picture equation dw/dt = v2(t, w), w = e^{itA} z.
//
// Both schemes reproduce the free flow exactly (up to rounding) when the
// interaction vanishes.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "model.hpp"

namespace hamflow {

struct blowup_error : std::runtime_error {
    double time;
    double z1_norm;
    blowup_error(double t, double n)
        : std::runtime_error("blowup threshold exceeded"), time(t), z1_norm(n) {}
};

struct TimeGrid {
    double start = 0.0;
    double end = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double s, double e, int n) : start(s), end(e), steps(n) {
        if (n < 1) throw std::invalid_argument("TimeGrid: need at least one step");
        if (s == e) throw std::invalid_argument("TimeGrid: empty interval");
        if (std::abs(dt()) > 0.1 + 1e-15)
            throw std::invalid_argument("TimeGrid: |dt| must be <= 0.1");
    }

    double dt() const { return (end - start) / double(steps); }
    double node(int j) const {
        return j == steps ? end : start + double(j) * dt();
    }
};

enum class Scheme { strang, rk4_interaction };

struct FlowMap {
    HamiltonianModel model;
    Scheme scheme = Scheme::strang;
    double blowup_threshold = 1e6; // on the Z1 norm

    NormWeights weights() const { return model.norm_weights(); }
};

namespace flow_detail {

// Exactly solved interaction substep over a step of length dt starting at
// absolute time t (the substep flows are autonomous; t is unused but kept
// for symmetry with the multiplier substep).
inline void interaction_substep(const HamiltonianModel& m, double dt, SpectralField& z) {
    switch (m.kind) {
        case ModelKind::nls: {
            auto w = to_physical(z, 0);
            for (auto& v : w) {
                const cd ph = std::exp(cd(0.0, -dt) * m.lambda * std::pow(std::norm(v), 0.5 * m.alpha));
                v *= ph;
            }
            from_physical(z, w, 0);
            break;
        }
        case ModelKind::hartree: {
            // |z(x)| is invariant, so the frozen convolution is the exact substep.
            auto w = to_physical(z, 0);
            SpectralField rho(m.grid, 1);
            {
                std::vector<cd> r(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) r[i] = cd(std::norm(w[i]), 0.0);
                from_physical(rho, r, 0);
            }
            for (std::size_t i = 0; i < m.grid.size(); ++i) rho.at(0, i) *= m.kernel_symbol[i];
            auto conv = to_physical(rho, 0);
            for (std::size_t i = 0; i < w.size(); ++i) {
                double u = conv[i].real();
                if (!m.potential_phys.empty()) u += m.potential_phys[i];
                w[i] *= std::polar(1.0, -dt * u);
            }
            from_physical(z, w, 0);
            break;
        }
        case ModelKind::kg: {
            // phi is invariant under the kick, so the kick is exact.
            auto ph = model_detail::phi_physical(m, z, 0);
            std::vector<cd> cub(ph.size());
            for (std::size_t i = 0; i < ph.size(); ++i) {
                const double p = ph[i].real();
                cub[i] = cd(m.coupling * p * p * p, 0.0);
            }
            SpectralField f(m.grid, 1);
            from_physical(f, cub, 0);
            for (std::size_t i = 0; i < m.grid.size(); ++i)
                z.at(0, i) += cd(0.0, -dt) * f.at(0, i) / std::sqrt(2.0 * m.omega(i));
            break;
        }
        case ModelKind::skg: {
            // phi is invariant and |u(x)| is invariant: phase u, kick alpha.
            auto ph = model_detail::phi_physical(m, z, 1);
            auto u = to_physical(z, 0);
            std::vector<cd> u2(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) u2[i] = cd(m.coupling * std::norm(u[i]), 0.0);
            SpectralField f(m.grid, 1);
            from_physical(f, u2, 0);
            for (std::size_t i = 0; i < u.size(); ++i)
                u[i] *= std::polar(1.0, -dt * m.coupling * ph[i].real());
            from_physical(z, u, 0);
            for (std::size_t i = 0; i < m.grid.size(); ++i)
                z.at(1, i) += cd(0.0, -dt) * f.at(0, i) / std::sqrt(2.0 * m.omega(i));
            break;
        }
    }
}

inline void strang_step(const HamiltonianModel& m, double dt, SpectralField& z) {
    apply_free_propagator(m, 0.5 * dt, z);
    interaction_substep(m, dt, z);
    apply_free_propagator(m, 0.5 * dt, z);
}

inline void rk4_interaction_step(const HamiltonianModel& m, double t, double dt, SpectralField& z) {
    const auto h = field_handle(m, Picture::interaction);
    SpectralField w = z;
    apply_free_propagator(m, -t, w); // w = e^{itA} z

    SpectralField k1 = vector_field(h, t, w);
    SpectralField s = w;
    axpy(cd(0.5 * dt, 0.0), k1, s);
    SpectralField k2 = vector_field(h, t + 0.5 * dt, s);
    s = w;
    axpy(cd(0.5 * dt, 0.0), k2, s);
    SpectralField k3 = vector_field(h, t + 0.5 * dt, s);
    s = w;
    axpy(cd(dt, 0.0), k3, s);
    SpectralField k4 = vector_field(h, t + dt, s);

    axpy(cd(dt / 6.0, 0.0), k1, w);
    axpy(cd(dt / 3.0, 0.0), k2, w);
    axpy(cd(dt / 3.0, 0.0), k3, w);
    axpy(cd(dt / 6.0, 0.0), k4, w);

    apply_free_propagator(m, t + dt, w); // back to the original picture
    z = w;
}

} // namespace flow_detail

// One step from absolute time t to t + dt (dt may be negative). Throws
// blowup_error when the Z1 norm of the result exceeds the threshold.
inline SpectralField advance(const FlowMap& f, double t, double dt, const SpectralField& z) {
    if (dt == 0.0) return z;
    SpectralField out = z;
    if (f.scheme == Scheme::strang)
        flow_detail::strang_step(f.model, dt, out);
    else
        flow_detail::rk4_interaction_step(f.model, t, dt, out);
    const double n1 = norm(out, NormKind::Z1, f.model.norm_weights());
    if (!(n1 <= f.blowup_threshold)) throw blowup_error(t + dt, n1);
    return out;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralField> states;
    std::optional<double> terminated_at;

    const SpectralField& initial() const { return states.front(); }
    const SpectralField& final() const { return states.back(); }
    std::size_t nodes() const { return times.size(); }
};

// Integrate from tg.start to tg.end storing every node. On blowup the
// trajectory is truncated and terminated_at records the step time.
inline Trajectory solve(const FlowMap& f, const TimeGrid& tg, const SpectralField& z0) {
    Trajectory tr;
    tr.times.reserve(std::size_t(tg.steps) + 1);
    tr.states.reserve(std::size_t(tg.steps) + 1);
    tr.times.push_back(tg.start);
    tr.states.push_back(z0);
    SpectralField z = z0;
    for (int j = 0; j < tg.steps; ++j) {
        const double t = tg.node(j);
        try {
            z = advance(f, t, tg.node(j + 1) - t, z);
        } catch (const blowup_error& e) {
            tr.terminated_at = e.time;
            return tr;
        }
        tr.times.push_back(tg.node(j + 1));
        tr.states.push_back(z);
    }
    return tr;
}

// Evolve from time s to time t with steps of size near dt_hint (sign chosen
// automatically, the count rounded so the grid lands on t exactly).
inline SpectralField evolve(const FlowMap& f, double s, double t, double dt_hint,
                            const SpectralField& z0) {
    if (s == t) return z0;
    const int n = std::max(1, int(std::lround(std::abs(t - s) / std::abs(dt_hint))));
    Trajectory tr = solve(f, TimeGrid(s, t, n), z0);
    if (tr.terminated_at) throw blowup_error(*tr.terminated_at, f.blowup_threshold);
    return tr.final();
}

// Max over nodes of || gamma(t) - gamma(s) - int_s^t v(tau, gamma(tau)) dtau ||
// with trapezoidal quadrature on the trajectory nodes; the norm is the dual
// norm for the original picture.
inline double duhamel_residual(const Trajectory& tr, const HamiltonianModel& m,
                               Picture picture = Picture::original) {
    if (tr.nodes() < 2) throw std::invalid_argument("duhamel_residual: need at least two nodes");
    const auto h = field_handle(m, picture);
    const NormWeights w = m.norm_weights();
    const NormKind nk = h.codomain() == Codomain::z0 ? NormKind::Z0 : NormKind::Z1dual;

    // the interaction picture lives on w(t) = e^{+itA} gamma(t)
    const auto picture_state = [&](std::size_t j) {
        SpectralField z = tr.states[j];
        if (picture == Picture::interaction) apply_free_propagator(m, -tr.times[j], z);
        return z;
    };

    const SpectralField first = picture_state(0);
    SpectralField integral(m.grid, m.components);
    SpectralField prev = vector_field(h, tr.times[0], first);
    double worst = 0.0;
    for (std::size_t j = 1; j < tr.nodes(); ++j) {
        const SpectralField state = picture_state(j);
        SpectralField cur = vector_field(h, tr.times[j], state);
        const double half = 0.5 * (tr.times[j] - tr.times[j - 1]);
        axpy(cd(half, 0.0), prev, integral);
        axpy(cd(half, 0.0), cur, integral);
        SpectralField defect = state - first - integral;
        worst = std::max(worst, norm(defect, nk, w));
        prev = std::move(cur);
    }
    return worst;
}

// || Phi(t,r) Phi(r,s) z - Phi(t,s) z ||_Z1 for one draw.
inline double group_law_defect(const FlowMap& f, double s, double r, double t, double dt_hint,
                               const SpectralField& z) {
    SpectralField two_leg = evolve(f, r, t, dt_hint, evolve(f, s, r, dt_hint, z));
    SpectralField direct = evolve(f, s, t, dt_hint, z);
    return norm(two_leg - direct, NormKind::Z1, f.model.norm_weights());
}

// Table of (eps, sup_t ||Phi(t,s)(z+eps u) - Phi(t,s) z||_Z1) over the grid.
inline std::vector<std::pair<double, double>> continuous_dependence_check(
    const FlowMap& f, const TimeGrid& tg, const SpectralField& z0, const SpectralField& dir,
    const std::vector<double>& eps_list) {
    const NormWeights w = f.model.norm_weights();
    Trajectory base = solve(f, tg, z0);
    std::vector<std::pair<double, double>> out;
    for (double eps : eps_list) {
        SpectralField zp = z0;
        axpy(cd(eps, 0.0), dir, zp);
        Trajectory pert = solve(f, tg, zp);
        const std::size_t n = std::min(base.nodes(), pert.nodes());
        double sup = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            sup = std::max(sup, norm(pert.states[j] - base.states[j], NormKind::Z1, w));
        out.emplace_back(eps, sup);
    }
    return out;
}

// Exact free evolution (interaction switched off): multiplier e^{-i(t-s)A}.
inline SpectralField free_flow(const HamiltonianModel& m, double s, double t, SpectralField z) {
    apply_free_propagator(m, t - s, z);
    return z;
}

// Analytic single-mode solution of nls: initial coefficient c at mode k
// evolves as c * exp(-i (a_k + lambda |c|^alpha L^{-alpha/2}) t) as long as
// lambda is real; used as a test oracle.
inline SpectralField nls_plane_wave(const HamiltonianModel& m, std::size_t flat, cd c, double t) {
    if (m.kind != ModelKind::nls) throw std::invalid_argument("nls_plane_wave: nls only");
    SpectralField z(m.grid, 1);
    const double amp2 = std::norm(c) / std::pow(m.grid.length, double(m.grid.dimension));
    const double rate = m.symbol[flat] + m.lambda.real() * std::pow(amp2, 0.5 * m.alpha);
    z.at(0, flat) = c * std::polar(1.0, -rate * t);
    return z;
}

} // namespace hamflow
