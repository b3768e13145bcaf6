#pragma once

// Spectral fields on the truncated Fourier grid and the scale of norms built
// from a nonnegative per-mode symbol a_k:
//   ||z||_Z0^2   = sum |z_k|^2
//   ||z||_Z1^2   = sum (a_k + 1) |z_k|^2
//   ||z||_Z1'^2  = sum (a_k + 1)^{-1} |z_k|^2
// Coefficients carry the (L/K)^{dim/2} quadrature weight, so the coefficient
// Z0 norm coincides with the physical-space L^2 norm of the trigonometric
// interpolant.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fft.hpp"
#include "grid.hpp"

namespace hamflow {

using cd = std::complex<double>;

struct SpectralField {
    Grid grid;
    int components = 1;
    std::vector<cd> coeffs; // component-major, each block of grid.size()

    SpectralField() = default;
    SpectralField(const Grid& g, int comps)
        : grid(g), components(comps), coeffs(g.size() * std::size_t(comps), cd(0.0)) {
        if (comps < 1 || comps > 2) throw std::invalid_argument("SpectralField: components must be 1 or 2");
    }

    std::size_t block() const { return grid.size(); }
    cd& at(int comp, std::size_t flat) { return coeffs[std::size_t(comp) * block() + flat]; }
    const cd& at(int comp, std::size_t flat) const { return coeffs[std::size_t(comp) * block() + flat]; }

    SpectralField& operator+=(const SpectralField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
        return *this;
    }
    SpectralField& operator*=(cd s) {
        for (auto& c : coeffs) c *= s;
        return *this;
    }

    void check_compatible(const SpectralField& o) const {
        if (grid != o.grid || components != o.components)
            throw std::invalid_argument("SpectralField: grid/component mismatch");
    }
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(cd s, SpectralField a) { return a *= s; }

// y += s * x
inline void axpy(cd s, const SpectralField& x, SpectralField& y) {
    y.check_compatible(x);
    for (std::size_t i = 0; i < y.coeffs.size(); ++i) y.coeffs[i] += s * x.coeffs[i];
}

// Physical values of one component at the grid nodes (row-major).
inline std::vector<cd> to_physical(const SpectralField& z, int comp = 0) {
    std::vector<cd> v(z.coeffs.begin() + std::ptrdiff_t(comp) * std::ptrdiff_t(z.block()),
                      z.coeffs.begin() + std::ptrdiff_t(comp + 1) * std::ptrdiff_t(z.block()));
    dft_nd(v, z.grid.dimension, std::size_t(z.grid.modes), true);
    const double s = std::pow(z.grid.length, -0.5 * z.grid.dimension);
    for (auto& x : v) x *= s;
    return v;
}

// Overwrite one component from physical node values.
inline void from_physical(SpectralField& z, const std::vector<cd>& values, int comp = 0) {
    if (values.size() != z.block()) throw std::invalid_argument("from_physical: size mismatch");
    std::vector<cd> v = values;
    dft_nd(v, z.grid.dimension, std::size_t(z.grid.modes), false);
    const double s = std::pow(z.grid.length, 0.5 * z.grid.dimension) / double(z.block());
    for (std::size_t i = 0; i < v.size(); ++i) z.at(comp, i) = v[i] * s;
}

// Complex conjugation as a map of fields: (c z)_k = conj(z_{-k}).
inline SpectralField conj_field(const SpectralField& z) {
    SpectralField out(z.grid, z.components);
    for (int c = 0; c < z.components; ++c)
        for (std::size_t i = 0; i < z.block(); ++i)
            out.at(c, i) = std::conj(z.at(c, z.grid.reflect(i)));
    return out;
}

enum class NormKind { Z0, Z1, Z1dual };

struct NormWeights {
    Grid grid;
    int components = 1;
    std::vector<double> a; // per component per mode, >= 0

    NormWeights() = default;
    NormWeights(const Grid& g, int comps, std::vector<double> symbol)
        : grid(g), components(comps), a(std::move(symbol)) {
        if (a.size() != g.size() * std::size_t(comps))
            throw std::invalid_argument("NormWeights: symbol size mismatch");
        for (double w : a)
            if (!(w >= 0.0)) throw std::invalid_argument("NormWeights: symbol must be nonnegative");
    }

    double at(int comp, std::size_t flat) const { return a[std::size_t(comp) * grid.size() + flat]; }

    void check_field(const SpectralField& z) const {
        if (z.grid != grid || z.components != components)
            throw std::invalid_argument("NormWeights: field mismatch");
    }
};

inline double norm_sq(const SpectralField& z, NormKind kind, const NormWeights& w) {
    w.check_field(z);
    double s = 0.0;
    for (int c = 0; c < z.components; ++c)
        for (std::size_t i = 0; i < z.block(); ++i) {
            const double m = std::norm(z.at(c, i));
            switch (kind) {
                case NormKind::Z0: s += m; break;
                case NormKind::Z1: s += (w.at(c, i) + 1.0) * m; break;
                case NormKind::Z1dual: s += m / (w.at(c, i) + 1.0); break;
            }
        }
    return s;
}

inline double norm(const SpectralField& z, NormKind kind, const NormWeights& w) {
    return std::sqrt(norm_sq(z, kind, w));
}

inline double norm_z0(const SpectralField& z) {
    double s = 0.0;
    for (const auto& c : z.coeffs) s += std::norm(c);
    return std::sqrt(s);
}

// Sesquilinear inner product, conjugate-linear in the first argument.
inline cd inner(const SpectralField& x, const SpectralField& y, NormKind kind, const NormWeights& w) {
    w.check_field(x);
    x.check_compatible(y);
    cd s(0.0);
    for (int c = 0; c < x.components; ++c)
        for (std::size_t i = 0; i < x.block(); ++i) {
            cd t = std::conj(x.at(c, i)) * y.at(c, i);
            switch (kind) {
                case NormKind::Z0: s += t; break;
                case NormKind::Z1: s += (w.at(c, i) + 1.0) * t; break;
                case NormKind::Z1dual: s += t / (w.at(c, i) + 1.0); break;
            }
        }
    return s;
}

inline double inner_real(const SpectralField& x, const SpectralField& y, NormKind kind, const NormWeights& w) {
    return inner(x, y, kind, w).real();
}

} // namespace hamflow
