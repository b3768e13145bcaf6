#pragma once

// Small self-contained DFT kernels. Radix-2 Cooley-Tukey for power-of-two
// lengths, naive O(n^2) fallback for other even lengths (tiny in practice).
// Transforms are unnormalized: forward uses e^{-2pi i kn/N}, inverse uses
// e^{+2pi i kn/N} and no 1/N factor; callers apply their own scaling.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hamflow {
namespace fft_detail {

using cd = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void transform_pow2(cd* a, std::size_t n, std::ptrdiff_t stride, bool inverse) {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i * stride], a[j * stride]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * pi / double(len) * (inverse ? 1.0 : -1.0);
        const cd wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cd u = a[(i + j) * stride];
                cd v = a[(i + j + len / 2) * stride] * w;
                a[(i + j) * stride] = u + v;
                a[(i + j + len / 2) * stride] = u - v;
                w *= wlen;
            }
        }
    }
}

inline void transform_naive(cd* a, std::size_t n, std::ptrdiff_t stride, bool inverse) {
    const double pi = 3.14159265358979323846;
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc(0.0);
        for (std::size_t m = 0; m < n; ++m) {
            double ang = 2.0 * pi * double(k * m % n) / double(n) * (inverse ? 1.0 : -1.0);
            acc += a[m * stride] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    for (std::size_t k = 0; k < n; ++k) a[k * stride] = out[k];
}

inline void transform(cd* a, std::size_t n, std::ptrdiff_t stride, bool inverse) {
    if (n < 1) throw std::invalid_argument("fft: empty length");
    if (is_pow2(n))
        transform_pow2(a, n, stride, inverse);
    else
        transform_naive(a, n, stride, inverse);
}

} // namespace fft_detail

// In-place multi-dimensional DFT on a row-major dim-dimensional array with
// `n` points per axis. data.size() must equal n^dim.
inline void dft_nd(std::vector<std::complex<double>>& data, int dim, std::size_t n, bool inverse) {
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= n;
    if (data.size() != total) throw std::invalid_argument("dft_nd: size mismatch");
    if (dim == 1) {
        fft_detail::transform(data.data(), n, 1, inverse);
        return;
    }
    if (dim == 2) {
        for (std::size_t r = 0; r < n; ++r)          // rows (contiguous)
            fft_detail::transform(data.data() + r * n, n, 1, inverse);
        for (std::size_t c = 0; c < n; ++c)          // columns (strided)
            fft_detail::transform(data.data() + c, n, std::ptrdiff_t(n), inverse);
        return;
    }
    throw std::invalid_argument("dft_nd: dimension must be 1 or 2");
}

} // namespace hamflow
