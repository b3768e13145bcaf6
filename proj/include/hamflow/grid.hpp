#pragma once

// Truncated Fourier grid on the periodic box [0, L)^dim.
// Modes per axis run over the signed integers j in [-K/2, K/2) stored in
// standard FFT order (0, 1, ..., K/2-1, -K/2, ..., -1).

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace hamflow {

struct Grid {
    int dimension = 1;   // 1 or 2
    int modes = 0;       // K per axis, even, >= 4
    double length = 0.0; // L > 0

    Grid() = default;
    Grid(int dim, int K, double L) : dimension(dim), modes(K), length(L) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dimension must be 1 or 2");
        if (K < 4 || K % 2 != 0) throw std::invalid_argument("Grid: modes must be even and >= 4");
        if (!(L > 0.0)) throw std::invalid_argument("Grid: length must be positive");
    }

    std::size_t size() const {
        std::size_t s = 1;
        for (int d = 0; d < dimension; ++d) s *= std::size_t(modes);
        return s;
    }

    // signed integer mode index for one axis position
    int signed_index(int j) const { return j < modes / 2 ? j : j - modes; }

    // per-axis signed indices of a flat (row-major) coefficient index
    std::array<int, 2> signed_indices(std::size_t flat) const {
        std::array<int, 2> out{0, 0};
        if (dimension == 1) {
            out[0] = signed_index(int(flat));
        } else {
            out[0] = signed_index(int(flat / std::size_t(modes)));
            out[1] = signed_index(int(flat % std::size_t(modes)));
        }
        return out;
    }

    // |k|^2 for a flat coefficient index, k_axis = 2 pi j_axis / L
    double ksq(std::size_t flat) const {
        const double w = 2.0 * 3.14159265358979323846 / length;
        auto idx = signed_indices(flat);
        double s = 0.0;
        for (int d = 0; d < dimension; ++d) s += double(idx[d]) * double(idx[d]);
        return s * w * w;
    }

    // flat index of the reflected mode -k
    std::size_t reflect(std::size_t flat) const {
        if (dimension == 1) {
            std::size_t j = flat;
            return j == 0 ? 0 : std::size_t(modes) - j;
        }
        std::size_t j0 = flat / std::size_t(modes), j1 = flat % std::size_t(modes);
        std::size_t r0 = j0 == 0 ? 0 : std::size_t(modes) - j0;
        std::size_t r1 = j1 == 0 ? 0 : std::size_t(modes) - j1;
        return r0 * std::size_t(modes) + r1;
    }

    // flat index from per-axis signed indices
    std::size_t flat_of_signed(int j0, int j1 = 0) const {
        auto wrap = [this](int j) {
            if (j < -modes / 2 || j >= modes / 2) throw std::out_of_range("Grid: mode index out of range");
            return std::size_t(j < 0 ? j + modes : j);
        };
        if (dimension == 1) return wrap(j0);
        return wrap(j0) * std::size_t(modes) + wrap(j1);
    }

    // physical grid node coordinate along an axis
    double node(int n) const { return length * double(n) / double(modes); }

    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < dimension; ++d) v *= length / double(modes);
        return v;
    }

    bool operator==(const Grid& o) const {
        return dimension == o.dimension && modes == o.modes && length == o.length;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

} // namespace hamflow
