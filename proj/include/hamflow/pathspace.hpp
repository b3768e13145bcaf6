#pragma once

// Path-space representation: a weighted ensemble of discrete trajectories
// sharing one time grid, with marginal extraction and the concentration
// check that every carried path satisfies the integral (Duhamel) identity.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "liouville.hpp"

namespace hamflow {

struct PathEnsemble {
    TimeGrid grid;
    std::vector<Trajectory> entries;
    std::vector<double> weights;

    std::size_t size() const { return entries.size(); }

    void validate() const {
        if (entries.empty()) throw std::invalid_argument("PathEnsemble: empty");
        if (weights.size() != entries.size())
            throw std::invalid_argument("PathEnsemble: weight count mismatch");
        double s = 0.0, c = 0.0;
        for (double w : weights) {
            const double y = w - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("PathEnsemble: weights must sum to 1");
    }
};

// Solve one trajectory per particle of mu over the grid. A blowup inside the
// horizon is an error naming the particle.
inline PathEnsemble trace(const EnsembleMeasure& mu, const FlowMap& f, const TimeGrid& tg) {
    PathEnsemble pe;
    pe.grid = tg;
    pe.weights = mu.weights;
    pe.entries.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        Trajectory tr = solve(f, tg, mu.particles[i]);
        if (tr.terminated_at)
            throw std::runtime_error("trace: particle " + std::to_string(i) +
                                     " exceeded the blowup threshold at t = " +
                                     std::to_string(*tr.terminated_at));
        pe.entries.push_back(std::move(tr));
    }
    return pe;
}

// Time marginal at the grid node nearest to t (also reports the offset).
inline EnsembleMeasure marginal(const PathEnsemble& pe, double t, double* offset = nullptr) {
    pe.validate();
    const auto& times = pe.entries.front().times;
    std::size_t best = 0;
    double bestd = std::abs(times[0] - t);
    for (std::size_t j = 1; j < times.size(); ++j) {
        const double d = std::abs(times[j] - t);
        if (d < bestd) {
            bestd = d;
            best = j;
        }
    }
    if (offset) *offset = times[best] - t;
    EnsembleMeasure mu;
    mu.timestamp = times[best];
    mu.weights = pe.weights;
    mu.particles.reserve(pe.size());
    for (const auto& tr : pe.entries) mu.particles.push_back(tr.states[best]);
    return mu;
}

struct ConcentrationReport {
    std::vector<double> residuals; // per entry
    double worst = 0.0;
    std::size_t worst_index = 0;
};

// Duhamel residual of every carried path; flags the worst offender.
inline ConcentrationReport concentration_check(const PathEnsemble& pe, const HamiltonianModel& m,
                                               Picture picture = Picture::original) {
    pe.validate();
    ConcentrationReport rep;
    rep.residuals.reserve(pe.size());
    for (std::size_t i = 0; i < pe.size(); ++i) {
        const double r = duhamel_residual(pe.entries[i], m, picture);
        rep.residuals.push_back(r);
        if (r > rep.worst) {
            rep.worst = r;
            rep.worst_index = i;
        }
    }
    return rep;
}

// int sup_t ||gamma(t)||_Z1 d eta
inline double z1_sup_moment(const PathEnsemble& pe, const NormWeights& w) {
    pe.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < pe.size(); ++i) {
        double sup = 0.0;
        for (const auto& st : pe.entries[i].states) sup = std::max(sup, norm(st, NormKind::Z1, w));
        s += pe.weights[i] * sup;
    }
    return s;
}

} // namespace hamflow
