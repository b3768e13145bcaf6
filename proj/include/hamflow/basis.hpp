#pragma once

// Real orthonormal bases of the realified dual space and the induced weak
// norm  ||z||_w^2 = sum_n n^{-2} <z, e_n>_R^2,  where (e_n) enumerates the
// real and imaginary directions of each Fourier mode, scaled to unit dual
// norm, ordered by increasing |k| with lexicographic tie-break on the signed
// index tuple (components interleave last). The real pairing is
// <x,y>_R = Re <x,y>_{Z1'}.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "field.hpp"

namespace hamflow {

struct WeakNormBasis {
    struct Entry {
        int component;
        std::size_t flat;
        bool imag; // false: real direction, true: imaginary direction
    };

    NormWeights weights;
    std::vector<Entry> order; // 2 * components * grid.size() entries

    explicit WeakNormBasis(const NormWeights& w) : weights(w) {
        struct ModeKey {
            double ksq;
            std::array<int, 2> idx;
            int comp;
            std::size_t flat;
        };
        std::vector<ModeKey> keys;
        keys.reserve(w.grid.size() * std::size_t(w.components));
        for (int c = 0; c < w.components; ++c)
            for (std::size_t i = 0; i < w.grid.size(); ++i)
                keys.push_back({w.grid.ksq(i), w.grid.signed_indices(i), c, i});
        std::sort(keys.begin(), keys.end(), [](const ModeKey& a, const ModeKey& b) {
            if (a.ksq != b.ksq) return a.ksq < b.ksq;
            if (a.idx != b.idx) return a.idx < b.idx;
            return a.comp < b.comp;
        });
        order.reserve(keys.size() * 2);
        for (const auto& k : keys) {
            order.push_back({k.comp, k.flat, false});
            order.push_back({k.comp, k.flat, true});
        }
    }

    std::size_t size() const { return order.size(); }

    // n is 1-based
    SpectralField vector(std::size_t n) const {
        if (n < 1 || n > size()) throw std::out_of_range("WeakNormBasis: index out of range");
        const Entry& e = order[n - 1];
        SpectralField z(weights.grid, weights.components);
        const double s = std::sqrt(weights.at(e.component, e.flat) + 1.0);
        z.at(e.component, e.flat) = e.imag ? cd(0.0, s) : cd(s, 0.0);
        return z;
    }

    // <z, e_n>_R without materializing e_n
    double coordinate(const SpectralField& z, std::size_t n) const {
        weights.check_field(z);
        const Entry& e = order[n - 1];
        const cd v = z.at(e.component, e.flat);
        const double s = 1.0 / std::sqrt(weights.at(e.component, e.flat) + 1.0);
        return s * (e.imag ? v.imag() : v.real());
    }
};

inline double weak_norm(const SpectralField& z, const WeakNormBasis& b) {
    double s = 0.0;
    for (std::size_t n = 1; n <= b.size(); ++n) {
        const double c = b.coordinate(z, n);
        s += c * c / (double(n) * double(n));
    }
    return std::sqrt(s);
}

// Finite family of directions, orthonormal for the real dual pairing; spans
// the reduction space R^d. project : dual -> R^d, lift : R^d -> dual,
// hat = lift o project is the orthogonal projector.
struct ProjectionBasis {
    NormWeights weights;
    std::vector<SpectralField> vectors;

    ProjectionBasis(const NormWeights& w, std::vector<SpectralField> dirs)
        : weights(w), vectors(std::move(dirs)) {
        if (vectors.empty() || vectors.size() > 6)
            throw std::invalid_argument("ProjectionBasis: need 1..6 directions");
        for (const auto& v : vectors) weights.check_field(v);
        for (std::size_t i = 0; i < vectors.size(); ++i)
            for (std::size_t j = i; j < vectors.size(); ++j) {
                const double g = inner_real(vectors[i], vectors[j], NormKind::Z1dual, weights);
                const double want = i == j ? 1.0 : 0.0;
                if (std::abs(g - want) > 1e-12)
                    throw std::invalid_argument("ProjectionBasis: directions not orthonormal");
            }
    }

    int dim() const { return int(vectors.size()); }

    std::vector<double> project(const SpectralField& z) const {
        std::vector<double> y(vectors.size());
        for (std::size_t i = 0; i < vectors.size(); ++i)
            y[i] = inner_real(vectors[i], z, NormKind::Z1dual, weights);
        return y;
    }

    SpectralField lift(const std::vector<double>& y) const {
        if (y.size() != vectors.size()) throw std::invalid_argument("ProjectionBasis: lift size mismatch");
        SpectralField z(weights.grid, weights.components);
        for (std::size_t i = 0; i < vectors.size(); ++i) axpy(cd(y[i], 0.0), vectors[i], z);
        return z;
    }

    SpectralField hat(const SpectralField& z) const { return lift(project(z)); }
};

// Leading d weak-basis directions.
inline ProjectionBasis leading_projection(const WeakNormBasis& b, int d) {
    std::vector<SpectralField> dirs;
    dirs.reserve(std::size_t(d));
    for (int i = 1; i <= d; ++i) dirs.push_back(b.vector(std::size_t(i)));
    return ProjectionBasis(b.weights, std::move(dirs));
}

} // namespace hamflow
