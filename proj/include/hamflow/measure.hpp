#pragma once

// Probability measures on the state space as weighted particle ensembles,
// samplers for initial laws, push-forward along a flow map, moments, and
// the two empirical distances used for curve comparison.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "flow.hpp"
#include "rng.hpp"

namespace hamflow {

struct EnsembleMeasure {
    std::vector<SpectralField> particles;
    std::vector<double> weights;
    double timestamp = 0.0;

    std::size_t size() const { return particles.size(); }

    void validate() const {
        if (particles.empty()) throw std::invalid_argument("EnsembleMeasure: empty");
        if (weights.size() != particles.size())
            throw std::invalid_argument("EnsembleMeasure: weight count mismatch");
        double s = 0.0, c = 0.0; // compensated sum, or n * eps bites at n ~ 1e4
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("EnsembleMeasure: negative weight");
            const double y = w - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("EnsembleMeasure: weights must sum to 1");
        for (const auto& p : particles) p.check_compatible(particles.front());
    }
};

struct MeasureCurve {
    std::vector<EnsembleMeasure> snapshots;

    void validate() const {
        if (snapshots.empty()) throw std::invalid_argument("MeasureCurve: empty");
        for (std::size_t j = 1; j < snapshots.size(); ++j)
            if (!(snapshots[j].timestamp > snapshots[j - 1].timestamp))
                throw std::invalid_argument("MeasureCurve: timestamps must increase");
    }

    std::vector<double> times() const {
        std::vector<double> t(snapshots.size());
        for (std::size_t j = 0; j < snapshots.size(); ++j) t[j] = snapshots[j].timestamp;
        return t;
    }
};

struct BallSpec {
    NormKind norm = NormKind::Z0;
    double radius = 1.0;
};

struct SamplerSpec {
    enum class Kind { gaussian_field, delta_mixture, soliton_cloud };

    Kind kind = Kind::gaussian_field;
    Grid grid;
    int components = 1;

    // gaussian_field: per-mode per-component standard deviation of each real part
    std::vector<double> sigma;
    // optional deterministic shift added to every gaussian draw
    std::optional<SpectralField> mean;

    // delta_mixture
    std::vector<SpectralField> atoms;
    std::vector<double> atom_probs;

    // soliton_cloud: sech bumps with random center and phase
    double soliton_amplitude = 1.0;
    double soliton_width = 0.5;

    std::optional<BallSpec> ball; // rejection-sample into a closed norm ball
    std::uint64_t seed = 0;
};

// sigma_k = amplitude * (1 + |k|^2)^{-decay}
inline std::vector<double> decay_sigma(const Grid& g, int components, double amplitude, double decay) {
    std::vector<double> s(g.size() * std::size_t(components));
    for (int c = 0; c < components; ++c)
        for (std::size_t i = 0; i < g.size(); ++i)
            s[std::size_t(c) * g.size() + i] = amplitude * std::pow(1.0 + g.ksq(i), -decay);
    return s;
}

namespace measure_detail {

inline SpectralField draw_one(const SamplerSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case SamplerSpec::Kind::gaussian_field: {
            SpectralField z(spec.grid, spec.components);
            if (spec.sigma.size() != z.coeffs.size())
                throw std::invalid_argument("sample: sigma size mismatch");
            for (std::size_t i = 0; i < z.coeffs.size(); ++i)
                z.coeffs[i] = spec.sigma[i] * cd(rng.normal(), rng.normal());
            if (spec.mean) z += *spec.mean;
            return z;
        }
        case SamplerSpec::Kind::delta_mixture: {
            if (spec.atoms.empty() || spec.atoms.size() != spec.atom_probs.size())
                throw std::invalid_argument("sample: bad delta mixture");
            double u = rng.uniform01(), acc = 0.0;
            std::size_t pick = spec.atoms.size() - 1;
            for (std::size_t i = 0; i < spec.atom_probs.size(); ++i) {
                acc += spec.atom_probs[i];
                if (u < acc) { pick = i; break; }
            }
            return spec.atoms[pick];
        }
        case SamplerSpec::Kind::soliton_cloud: {
            SpectralField z(spec.grid, spec.components);
            const Grid& g = spec.grid;
            std::array<double, 2> center{rng.uniform(0.0, g.length), rng.uniform(0.0, g.length)};
            const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            std::vector<cd> phys(g.size());
            const int K = g.modes;
            for (std::size_t n = 0; n < g.size(); ++n) {
                double r2 = 0.0;
                const int n0 = g.dimension == 1 ? int(n) : int(n / std::size_t(K));
                const int n1 = g.dimension == 1 ? 0 : int(n % std::size_t(K));
                const int nn[2] = {n0, n1};
                for (int d = 0; d < g.dimension; ++d) {
                    double dx = std::abs(g.node(nn[d]) - center[std::size_t(d)]);
                    dx = std::min(dx, g.length - dx); // torus distance
                    r2 += dx * dx;
                }
                const double r = std::sqrt(r2);
                phys[n] = std::polar(spec.soliton_amplitude / std::cosh(r / spec.soliton_width), phase);
            }
            from_physical(z, phys, 0);
            return z;
        }
    }
    throw std::logic_error("sample: unreachable");
}

} // namespace measure_detail

// Draw n equal-weight particles. Ball conditioning uses rejection sampling;
// a 1000-draw pilot must accept at least 1e-3 of its draws.
inline EnsembleMeasure sample(const SamplerSpec& spec, const NormWeights& w, std::size_t n,
                              double timestamp = 0.0) {
    if (n == 0) throw std::invalid_argument("sample: need at least one particle");
    Rng rng(spec.seed);
    auto inside = [&](const SpectralField& z) {
        if (!spec.ball) return true;
        return norm(z, spec.ball->norm, w) <= spec.ball->radius;
    };
    if (spec.ball) {
        Rng pilot_rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
        std::size_t ok = 0;
        for (int i = 0; i < 1000; ++i)
            if (inside(measure_detail::draw_one(spec, pilot_rng))) ++ok;
        if (ok < 1) // pilot acceptance below 1e-3
            throw std::runtime_error("sample: ball conditioning infeasible (pilot acceptance < 1e-3)");
    }
    EnsembleMeasure mu;
    mu.timestamp = timestamp;
    mu.particles.reserve(n);
    const std::size_t cap = spec.ball ? n * 100000 : n;
    std::size_t attempts = 0;
    while (mu.particles.size() < n) {
        if (attempts++ > cap) throw std::runtime_error("sample: rejection cap exceeded");
        SpectralField z = measure_detail::draw_one(spec, rng);
        if (inside(z)) mu.particles.push_back(std::move(z));
    }
    mu.weights.assign(n, 1.0 / double(n));
    mu.validate();
    return mu;
}

// Particle-wise transport by the flow from mu.timestamp to time t.
inline EnsembleMeasure pushforward(const EnsembleMeasure& mu, const FlowMap& f, double t,
                                   double dt_hint) {
    EnsembleMeasure out;
    out.timestamp = t;
    out.weights = mu.weights;
    out.particles.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        try {
            out.particles.push_back(evolve(f, mu.timestamp, t, dt_hint, mu.particles[i]));
        } catch (const blowup_error& e) {
            throw std::runtime_error("pushforward: particle " + std::to_string(i) +
                                     " exceeded the blowup threshold at t = " + std::to_string(e.time));
        }
    }
    return out;
}

// p-th moment of the chosen norm, p in {1, 2}.
inline double moment(const EnsembleMeasure& mu, int p, NormKind kind, const NormWeights& w) {
    if (p != 1 && p != 2) throw std::invalid_argument("moment: p must be 1 or 2");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double n = norm(mu.particles[i], kind, w);
        s += mu.weights[i] * (p == 1 ? n : n * n);
    }
    return s;
}

// max_phi | int phi dmu - int phi dnu | over a dictionary of scalar
// observables (time-independent evaluations).
inline double cyl_distance(const EnsembleMeasure& mu, const EnsembleMeasure& nu,
                           const std::vector<std::function<double(const SpectralField&)>>& dict) {
    if (dict.empty()) throw std::invalid_argument("cyl_distance: empty dictionary");
    double worst = 0.0;
    for (const auto& phi : dict) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) a += mu.weights[i] * phi(mu.particles[i]);
        for (std::size_t i = 0; i < nu.size(); ++i) b += nu.weights[i] * phi(nu.particles[i]);
        worst = std::max(worst, std::abs(a - b));
    }
    return worst;
}

// 1-D Wasserstein-1 between weighted samples: quantile-coupling formula on
// the merged sorted breakpoints.
inline double wasserstein1_1d(std::vector<std::pair<double, double>> a,
                              std::vector<std::pair<double, double>> b) {
    auto cmp = [](const auto& x, const auto& y) { return x.first < y.first; };
    std::sort(a.begin(), a.end(), cmp);
    std::sort(b.begin(), b.end(), cmp);
    double dist = 0.0;
    std::size_t i = 0, j = 0;
    double ra = a[0].second, rb = b[0].second; // remaining mass in current atoms
    while (true) {
        const double m = std::min(ra, rb);
        dist += m * std::abs(a[i].first - b[j].first);
        ra -= m;
        rb -= m;
        if (ra <= 1e-15) {
            if (++i >= a.size()) break;
            ra = a[i].second;
        }
        if (rb <= 1e-15) {
            if (++j >= b.size()) break;
            rb = b[j].second;
        }
    }
    return dist;
}

// Sliced distance: average over random unit directions u of the dual space
// of W1 between the pushforwards under z -> <u, z>_R. Directions are
// isotropic Gaussian draws normalized in the dual norm.
inline double sliced_w1(const EnsembleMeasure& mu, const EnsembleMeasure& nu, const NormWeights& w,
                        int directions, std::uint64_t seed) {
    if (directions < 1) throw std::invalid_argument("sliced_w1: need directions >= 1");
    Rng rng(seed);
    const Grid& g = w.grid;
    double acc = 0.0;
    for (int d = 0; d < directions; ++d) {
        SpectralField u(g, w.components);
        for (auto& c : u.coeffs) c = cd(rng.normal(), rng.normal());
        const double n = norm(u, NormKind::Z1dual, w);
        u *= cd(1.0 / n, 0.0);
        std::vector<std::pair<double, double>> pa(mu.size()), pb(nu.size());
        for (std::size_t i = 0; i < mu.size(); ++i)
            pa[i] = {inner_real(u, mu.particles[i], NormKind::Z1dual, w), mu.weights[i]};
        for (std::size_t i = 0; i < nu.size(); ++i)
            pb[i] = {inner_real(u, nu.particles[i], NormKind::Z1dual, w), nu.weights[i]};
        acc += wasserstein1_1d(std::move(pa), std::move(pb));
    }
    return acc / double(directions);
}

// Same slicing along caller-provided directions (normalized internally).
inline double sliced_w1_along(const EnsembleMeasure& mu, const EnsembleMeasure& nu,
                              const NormWeights& w, const std::vector<SpectralField>& dirs) {
    if (dirs.empty()) throw std::invalid_argument("sliced_w1_along: no directions");
    double acc = 0.0;
    for (SpectralField u : dirs) {
        u *= cd(1.0 / norm(u, NormKind::Z1dual, w), 0.0);
        std::vector<std::pair<double, double>> pa(mu.size()), pb(nu.size());
        for (std::size_t i = 0; i < mu.size(); ++i)
            pa[i] = {inner_real(u, mu.particles[i], NormKind::Z1dual, w), mu.weights[i]};
        for (std::size_t i = 0; i < nu.size(); ++i)
            pb[i] = {inner_real(u, nu.particles[i], NormKind::Z1dual, w), nu.weights[i]};
        acc += wasserstein1_1d(std::move(pa), std::move(pb));
    }
    return acc / double(dirs.size());
}

// max over dictionary entries and adjacent snapshot pairs of
// |int phi dmu_{t+dt} - int phi dmu_t| / dt; diverges under refinement when
// the curve has a genuine jump.
inline double weak_continuity_profile(
    const MeasureCurve& curve,
    const std::vector<std::function<double(const SpectralField&)>>& dict) {
    curve.validate();
    if (curve.snapshots.size() < 2)
        throw std::invalid_argument("weak_continuity_profile: need two snapshots");
    double worst = 0.0;
    for (const auto& phi : dict) {
        double prev = 0.0;
        for (std::size_t j = 0; j < curve.snapshots.size(); ++j) {
            const auto& mu = curve.snapshots[j];
            double v = 0.0;
            for (std::size_t i = 0; i < mu.size(); ++i) v += mu.weights[i] * phi(mu.particles[i]);
            if (j > 0) {
                const double dt = mu.timestamp - curve.snapshots[j - 1].timestamp;
                worst = std::max(worst, std::abs(v - prev) / dt);
            }
            prev = v;
        }
    }
    return worst;
}

} // namespace hamflow
