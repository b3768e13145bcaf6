#pragma once

// Cylindrical test functions phi(t, z) = chi(t) psi(pi^d z) with psi a
// polynomial times a radial bump exp(1/((|y|/R)^2 - 1)) supported in the
// open ball |y| < R, and chi a 1-D bump supported inside the horizon. The
// compact support in time makes trapezoidal quadrature of the transport
// integrand superconvergent, and every factor has an analytic gradient.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "basis.hpp"

namespace hamflow {

// exp(1/(s-1)) for s = (r/R)^2 < 1, else 0
inline double radial_bump(double r, double R) {
    const double s = (r / R) * (r / R);
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 / (s - 1.0));
}

// d/dr of the radial bump
inline double radial_bump_deriv(double r, double R) {
    const double s = (r / R) * (r / R);
    if (s >= 1.0) return 0.0;
    const double b = std::exp(1.0 / (s - 1.0));
    const double ds = 2.0 * r / (R * R);
    return -b * ds / ((s - 1.0) * (s - 1.0));
}

// Polynomial in y as a sum of monomial terms coeff * prod y_i^{p_i}.
struct Polynomial {
    struct Term {
        double coeff;
        std::vector<int> powers;
    };
    std::vector<Term> terms;

    double value(const std::vector<double>& y) const {
        double s = 0.0;
        for (const auto& t : terms) {
            double m = t.coeff;
            for (std::size_t i = 0; i < y.size(); ++i)
                for (int p = 0; p < t.powers[i]; ++p) m *= y[i];
            s += m;
        }
        return s;
    }

    std::vector<double> gradient(const std::vector<double>& y) const {
        std::vector<double> g(y.size(), 0.0);
        for (const auto& t : terms)
            for (std::size_t j = 0; j < y.size(); ++j) {
                if (t.powers[j] == 0) continue;
                double m = t.coeff * double(t.powers[j]);
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const int p = t.powers[i] - (i == j ? 1 : 0);
                    for (int q = 0; q < p; ++q) m *= y[i];
                }
                g[j] += m;
            }
        return g;
    }
};

// chi supported in (a, b): the 1-D bump rescaled to the interval.
struct TimeWindow {
    double a = 0.0, b = 1.0;

    TimeWindow() = default;
    TimeWindow(double lo, double hi) : a(lo), b(hi) {
        if (!(hi > lo)) throw std::invalid_argument("TimeWindow: empty interval");
    }

    double map(double t) const { return (2.0 * t - (a + b)) / (b - a); }

    double value(double t) const { return radial_bump(std::abs(map(t)), 1.0); }

    double deriv(double t) const {
        const double u = map(t);
        if (std::abs(u) >= 1.0) return 0.0;
        // d/dt bump(|u|) with du/dt = 2/(b-a); bump is even in u
        const double sgn = u >= 0.0 ? 1.0 : -1.0;
        return radial_bump_deriv(std::abs(u), 1.0) * sgn * 2.0 / (b - a);
    }
};

struct CylTestFunction {
    ProjectionBasis basis;
    Polynomial poly;
    double radius = 1.0;
    TimeWindow window;

    double spatial(const SpectralField& z) const {
        const auto y = basis.project(z);
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        return poly.value(y) * radial_bump(std::sqrt(r2), radius);
    }

    // gradient of psi at the projected point, as coordinates in R^d
    std::vector<double> spatial_gradient_coords(const std::vector<double>& y) const {
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        const double r = std::sqrt(r2);
        const double b = radial_bump(r, radius);
        std::vector<double> g = poly.gradient(y);
        const double p = poly.value(y);
        // grad of bump(|y|): b'(r) y / r (zero at the origin)
        const double db = radial_bump_deriv(r, radius);
        for (std::size_t i = 0; i < y.size(); ++i) {
            double gb = r > 0.0 ? db * y[i] / r : 0.0;
            g[i] = g[i] * b + p * gb;
        }
        return g;
    }

    double value(double t, const SpectralField& z) const { return window.value(t) * spatial(z); }

    double dt(double t, const SpectralField& z) const { return window.deriv(t) * spatial(z); }

    // grad phi(t, .) at z as a dual-space field: chi(t) pi^T grad psi(pi z)
    SpectralField gradient(double t, const SpectralField& z) const {
        auto g = spatial_gradient_coords(basis.project(z));
        const double c = window.value(t);
        for (auto& v : g) v *= c;
        return basis.lift(g);
    }

    // Re <v, grad phi>_{Z1'} computed through the projected coordinates
    double pair_field(double t, const SpectralField& z, const SpectralField& v) const {
        const double c = window.value(t);
        if (c == 0.0) return 0.0;
        auto g = spatial_gradient_coords(basis.project(z));
        auto pv = basis.project(v);
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * pv[i];
        return c * s;
    }
};

// Deterministic dictionary: first-degree odd monomials y_i and (optionally)
// the constant 1 and pair products y_i y_j, each times the radial bump.
inline std::vector<CylTestFunction> make_dictionary(const ProjectionBasis& basis, double radius,
                                                    const TimeWindow& window, bool odd_only) {
    const int d = basis.dim();
    std::vector<CylTestFunction> dict;
    auto push = [&](Polynomial p) { dict.push_back({basis, std::move(p), radius, window}); };
    for (int i = 0; i < d; ++i) {
        Polynomial p;
        std::vector<int> pw(std::size_t(d), 0);
        pw[std::size_t(i)] = 1;
        p.terms.push_back({1.0, pw});
        push(std::move(p));
    }
    for (int i = 0; i < d && odd_only; ++i) { // cubes keep the family odd
        Polynomial p;
        std::vector<int> pw(std::size_t(d), 0);
        pw[std::size_t(i)] = 3;
        p.terms.push_back({1.0, pw});
        push(std::move(p));
    }
    if (!odd_only) {
        Polynomial one;
        one.terms.push_back({1.0, std::vector<int>(std::size_t(d), 0)});
        push(std::move(one));
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                Polynomial p;
                std::vector<int> pw(std::size_t(d), 0);
                pw[std::size_t(i)] += 1;
                pw[std::size_t(j)] += 1;
                p.terms.push_back({1.0, pw});
                push(std::move(p));
            }
    }
    return dict;
}

// Finite-difference check of the analytic gradient along random dual
// directions; returns the worst deviation.
inline double gradient_identity_check(const CylTestFunction& phi, double t, const SpectralField& z,
                                      int directions, std::uint64_t seed, double eps = 1e-5) {
    Rng rng(seed);
    const NormWeights& w = phi.basis.weights;
    double worst = 0.0;
    const SpectralField grad = phi.gradient(t, z);
    for (int d = 0; d < directions; ++d) {
        SpectralField u(z.grid, z.components);
        for (auto& c : u.coeffs) c = cd(rng.normal(), rng.normal());
        u *= cd(1.0 / norm(u, NormKind::Z1dual, w), 0.0);
        SpectralField zp = z, zm = z;
        axpy(cd(eps, 0.0), u, zp);
        axpy(cd(-eps, 0.0), u, zm);
        const double fd = (phi.value(t, zp) - phi.value(t, zm)) / (2.0 * eps);
        const double an = inner_real(grad, u, NormKind::Z1dual, w);
        worst = std::max(worst, std::abs(fd - an));
    }
    return worst;
}

} // namespace hamflow
