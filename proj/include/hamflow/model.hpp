#pragma once

// The four model equations on the periodic box, each written as
//   i dz/dt = A z + dh_I/dzbar(z)                (original picture)
// with A the nonnegative Fourier multiplier a_k and h_I the interaction
// energy. The interaction-picture field is
//   v2(t, z) = -i e^{itA} dh_I/dzbar(e^{-itA} z).
//
// nls:      a_k = |k|^2,          h_I = (2 lambda/(alpha+2)) int |z|^{alpha+2}
// hartree:  a_k = |k|^2 + V_k,    h_I = 1/2 int int |z(x)|^2 W(x-y) |z(y)|^2
//           (V_k an optional Fourier-diagonal potential; a physical
//            potential can instead be folded into the interaction)
// kg:       a_k = omega(k),       h_I = (g/4) int phi^4,
//           omega(k) = sqrt(|k|^2 + m^2),
//           phi_k = (z_k + conj(z_{-k})) / sqrt(2 omega(k))
// skg:      two components (u, alpha); a = (|k|^2/(2M), omega(k)),
//           h_I = g int phi |u|^2 with phi built from alpha as for kg.

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "basis.hpp"
#include "field.hpp"

namespace hamflow {

enum class ModelKind { nls, hartree, kg, skg };
enum class Picture { original, interaction };
enum class Codomain { z1dual, z0 };

struct field_overflow_error : std::runtime_error {
    double z1_norm;
    field_overflow_error(const std::string& what, double n)
        : std::runtime_error(what), z1_norm(n) {}
};

struct HamiltonianModel {
    ModelKind kind = ModelKind::nls;
    Grid grid;
    int components = 1;

    double alpha = 2.0;      // nls exponent, >= 1
    cd lambda = cd(1.0, 0.0); // nls coupling
    double mass = 1.0;       // kg/skg field mass m > 0
    double big_mass = 1.0;   // skg particle mass M > 0
    double coupling = 1.0;   // kg/skg interaction scale

    std::vector<double> kernel_symbol;  // hartree: W_k, real, even, per mode
    std::vector<double> potential_diag; // hartree: Fourier-diagonal V_k (may be empty)
    std::vector<double> potential_phys; // hartree: physical V(x_n) folded into h_I (may be empty)

    std::vector<double> symbol; // a_k per component per mode

    NormWeights norm_weights() const { return NormWeights(grid, components, symbol); }

    // omega(k) for kg/skg
    double omega(std::size_t flat) const { return std::sqrt(grid.ksq(flat) + mass * mass); }
};

inline HamiltonianModel make_nls(const Grid& g, double alpha, cd lambda) {
    if (!(alpha >= 1.0)) throw std::invalid_argument("make_nls: alpha must be >= 1");
    HamiltonianModel m;
    m.kind = ModelKind::nls;
    m.grid = g;
    m.components = 1;
    m.alpha = alpha;
    m.lambda = lambda;
    m.symbol.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) m.symbol[i] = g.ksq(i);
    return m;
}

// Yukawa-type convolution symbol W_k = g / (|k|^2 + mu^2).
inline std::vector<double> yukawa_symbol(const Grid& g, double strength, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("yukawa_symbol: mu must be positive");
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = strength / (g.ksq(i) + mu * mu);
    return w;
}

inline HamiltonianModel make_hartree(const Grid& g, std::vector<double> kernel,
                                     std::vector<double> potential_diag = {},
                                     std::vector<double> potential_phys = {}) {
    if (kernel.size() != g.size()) throw std::invalid_argument("make_hartree: kernel size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(kernel[i] - kernel[g.reflect(i)]) > 1e-12)
            throw std::invalid_argument("make_hartree: kernel symbol must be even");
    if (!potential_diag.empty() && potential_diag.size() != g.size())
        throw std::invalid_argument("make_hartree: potential_diag size mismatch");
    if (!potential_phys.empty() && potential_phys.size() != g.size())
        throw std::invalid_argument("make_hartree: potential_phys size mismatch");
    HamiltonianModel m;
    m.kind = ModelKind::hartree;
    m.grid = g;
    m.components = 1;
    m.kernel_symbol = std::move(kernel);
    m.potential_diag = std::move(potential_diag);
    m.potential_phys = std::move(potential_phys);
    m.symbol.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        m.symbol[i] = g.ksq(i) + (m.potential_diag.empty() ? 0.0 : m.potential_diag[i]);
        if (!(m.symbol[i] >= 0.0))
            throw std::invalid_argument("make_hartree: diagonal potential makes the symbol negative");
    }
    return m;
}

inline HamiltonianModel make_kg(const Grid& g, double mass, double coupling) {
    if (!(mass > 0.0)) throw std::invalid_argument("make_kg: mass must be positive");
    HamiltonianModel m;
    m.kind = ModelKind::kg;
    m.grid = g;
    m.components = 1;
    m.mass = mass;
    m.coupling = coupling;
    m.symbol.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) m.symbol[i] = m.omega(i);
    return m;
}

inline HamiltonianModel make_skg(const Grid& g, double mass, double big_mass, double coupling) {
    if (!(mass > 0.0) || !(big_mass > 0.0))
        throw std::invalid_argument("make_skg: masses must be positive");
    HamiltonianModel m;
    m.kind = ModelKind::skg;
    m.grid = g;
    m.components = 2;
    m.mass = mass;
    m.big_mass = big_mass;
    m.coupling = coupling;
    m.symbol.resize(2 * g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        m.symbol[i] = g.ksq(i) / (2.0 * big_mass); // u component
        m.symbol[g.size() + i] = m.omega(i);       // alpha component
    }
    return m;
}

namespace model_detail {

// Real scalar field phi built from a complex component by
// phi_k = (z_k + conj(z_{-k})) / sqrt(2 omega_k); returns physical values.
inline std::vector<cd> phi_physical(const HamiltonianModel& m, const SpectralField& z, int comp) {
    SpectralField ph(m.grid, 1);
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        const double w = std::sqrt(2.0 * m.omega(i));
        ph.at(0, i) = (z.at(comp, i) + std::conj(z.at(comp, m.grid.reflect(i)))) / w;
    }
    return to_physical(ph, 0);
}

// Quadrature of a physical-space function: sum f(x_n) * cell volume.
inline double quad(const std::vector<cd>& values, const Grid& g, double (*f)(const cd&)) {
    double s = 0.0;
    for (const auto& v : values) s += f(v);
    return s * g.cell_volume();
}

// Interaction gradient dh_I/dzbar as a spectral field.
inline SpectralField interaction_gradient(const HamiltonianModel& m, const SpectralField& z) {
    SpectralField g(m.grid, m.components);
    switch (m.kind) {
        case ModelKind::nls: {
            auto w = to_physical(z, 0);
            for (auto& v : w) {
                const double a2 = std::norm(v);
                v *= m.lambda * std::pow(a2, 0.5 * m.alpha);
            }
            from_physical(g, w, 0);
            break;
        }
        case ModelKind::hartree: {
            auto w = to_physical(z, 0);
            SpectralField rho(m.grid, 1);
            {
                std::vector<cd> r(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) r[i] = cd(std::norm(w[i]), 0.0);
                from_physical(rho, r, 0);
            }
            for (std::size_t i = 0; i < m.grid.size(); ++i) rho.at(0, i) *= m.kernel_symbol[i];
            auto conv = to_physical(rho, 0); // (W * |z|^2)(x), real up to rounding
            for (std::size_t i = 0; i < w.size(); ++i) {
                double u = conv[i].real();
                if (!m.potential_phys.empty()) u += m.potential_phys[i];
                w[i] *= u;
            }
            from_physical(g, w, 0);
            break;
        }
        case ModelKind::kg: {
            auto ph = phi_physical(m, z, 0);
            std::vector<cd> cub(ph.size());
            for (std::size_t i = 0; i < ph.size(); ++i) {
                const double p = ph[i].real();
                cub[i] = cd(m.coupling * p * p * p, 0.0);
            }
            SpectralField f(m.grid, 1);
            from_physical(f, cub, 0);
            for (std::size_t i = 0; i < m.grid.size(); ++i)
                g.at(0, i) = f.at(0, i) / std::sqrt(2.0 * m.omega(i));
            break;
        }
        case ModelKind::skg: {
            auto ph = phi_physical(m, z, 1);
            auto u = to_physical(z, 0);
            std::vector<cd> pu(u.size()), u2(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) {
                pu[i] = m.coupling * ph[i].real() * u[i];
                u2[i] = cd(m.coupling * std::norm(u[i]), 0.0);
            }
            SpectralField fu(m.grid, 1), fa(m.grid, 1);
            from_physical(fu, pu, 0);
            from_physical(fa, u2, 0);
            for (std::size_t i = 0; i < m.grid.size(); ++i) {
                g.at(0, i) = fu.at(0, i);
                g.at(1, i) = fa.at(0, i) / std::sqrt(2.0 * m.omega(i));
            }
            break;
        }
    }
    return g;
}

} // namespace model_detail

// Interaction energy h_I(z).
inline double interaction_energy(const HamiltonianModel& m, const SpectralField& z) {
    switch (m.kind) {
        case ModelKind::nls: {
            auto w = to_physical(z, 0);
            double s = 0.0;
            for (const auto& v : w) s += std::pow(std::norm(v), 0.5 * (m.alpha + 2.0));
            s *= m.grid.cell_volume();
            return (2.0 * m.lambda.real() / (m.alpha + 2.0)) * s;
        }
        case ModelKind::hartree: {
            auto w = to_physical(z, 0);
            SpectralField rho(m.grid, 1);
            {
                std::vector<cd> r(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) r[i] = cd(std::norm(w[i]), 0.0);
                from_physical(rho, r, 0);
            }
            SpectralField conv = rho;
            for (std::size_t i = 0; i < m.grid.size(); ++i) conv.at(0, i) *= m.kernel_symbol[i];
            auto cphys = to_physical(conv, 0);
            double pair = 0.0, pot = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double r = std::norm(w[i]);
                pair += r * cphys[i].real();
                if (!m.potential_phys.empty()) pot += m.potential_phys[i] * r;
            }
            return (0.5 * pair + pot) * m.grid.cell_volume();
        }
        case ModelKind::kg: {
            auto ph = model_detail::phi_physical(m, z, 0);
            double s = 0.0;
            for (const auto& v : ph) {
                const double p = v.real();
                s += p * p * p * p;
            }
            return 0.25 * m.coupling * s * m.grid.cell_volume();
        }
        case ModelKind::skg: {
            auto ph = model_detail::phi_physical(m, z, 1);
            auto u = to_physical(z, 0);
            double s = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) s += ph[i].real() * std::norm(u[i]);
            return m.coupling * s * m.grid.cell_volume();
        }
    }
    throw std::logic_error("interaction_energy: unreachable");
}

// Total energy h(z) = <z, A z> + h_I(z).
inline double energy(const HamiltonianModel& m, const SpectralField& z) {
    if (z.grid != m.grid || z.components != m.components)
        throw std::invalid_argument("energy: field mismatch");
    double quad = 0.0;
    for (int c = 0; c < m.components; ++c)
        for (std::size_t i = 0; i < m.grid.size(); ++i)
            quad += m.symbol[std::size_t(c) * m.grid.size() + i] * std::norm(z.at(c, i));
    return quad + interaction_energy(m, z);
}

// Handle fixing the picture in which the field is evaluated.
struct VectorFieldHandle {
    const HamiltonianModel* model = nullptr;
    Picture picture = Picture::original;

    Codomain codomain() const {
        if (picture == Picture::interaction &&
            (model->kind == ModelKind::hartree || model->kind == ModelKind::skg))
            return Codomain::z0;
        return Codomain::z1dual;
    }
};

inline VectorFieldHandle field_handle(const HamiltonianModel& m, Picture p) {
    return VectorFieldHandle{&m, p};
}

// Apply e^{-i t A} (multiplier per mode).
inline void apply_free_propagator(const HamiltonianModel& m, double t, SpectralField& z) {
    for (int c = 0; c < m.components; ++c)
        for (std::size_t i = 0; i < m.grid.size(); ++i) {
            const double a = m.symbol[std::size_t(c) * m.grid.size() + i];
            z.at(c, i) *= std::polar(1.0, -t * a);
        }
}

inline SpectralField vector_field(const VectorFieldHandle& h, double t, const SpectralField& z) {
    const HamiltonianModel& m = *h.model;
    if (z.grid != m.grid || z.components != m.components)
        throw std::invalid_argument("vector_field: field mismatch");
    SpectralField out(m.grid, m.components);
    if (h.picture == Picture::original) {
        SpectralField g = model_detail::interaction_gradient(m, z);
        for (int c = 0; c < m.components; ++c)
            for (std::size_t i = 0; i < m.grid.size(); ++i) {
                const double a = m.symbol[std::size_t(c) * m.grid.size() + i];
                out.at(c, i) = cd(0.0, -1.0) * (a * z.at(c, i) + g.at(c, i));
            }
    } else {
        SpectralField w = z;
        apply_free_propagator(m, t, w);
        SpectralField g = model_detail::interaction_gradient(m, w);
        apply_free_propagator(m, -t, g); // e^{+itA}
        for (std::size_t i = 0; i < g.coeffs.size(); ++i) out.coeffs[i] = cd(0.0, -1.0) * g.coeffs[i];
    }
    for (const auto& c : out.coeffs)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw field_overflow_error("vector_field: non-finite output",
                                       norm(z, NormKind::Z1, m.norm_weights()));
    return out;
}

// Central finite differences of the energy along u and iu against the real
// and imaginary parts of <u, v>_Z0 with v the original-picture field.
// Returns the worst absolute deviation.
inline double directional_derivative_check(const HamiltonianModel& m, const SpectralField& z,
                                           const SpectralField& u, double step) {
    if (!(step >= 1e-6 && step <= 1e-3))
        throw std::invalid_argument("directional_derivative_check: step outside [1e-6, 1e-3]");
    const SpectralField v = vector_field(field_handle(m, Picture::original), 0.0, z);
    const NormWeights w = m.norm_weights();
    const cd uv = inner(u, v, NormKind::Z0, w);

    SpectralField iu = u;
    iu *= cd(0.0, 1.0);
    auto fd = [&](const SpectralField& dir) {
        SpectralField zp = z, zm = z;
        axpy(cd(step, 0.0), dir, zp);
        axpy(cd(-step, 0.0), dir, zm);
        return (energy(m, zp) - energy(m, zm)) / (2.0 * step);
    };
    const double dev_re = std::abs(uv.real() - 0.5 * fd(iu));
    const double dev_im = std::abs(uv.imag() + 0.5 * fd(u));
    return std::max(dev_re, dev_im);
}

// Interaction-picture Lipschitz witness
//   ||v(t,x) - v(t,y)||_Z0 / ((||x||_Z1^2 + ||y||_Z1^2) ||x - y||_Z0).
inline double lipschitz_witness(const HamiltonianModel& m, double t, const SpectralField& x,
                                const SpectralField& y) {
    if (m.kind != ModelKind::hartree && m.kind != ModelKind::skg)
        throw std::invalid_argument("lipschitz_witness: supported for hartree and skg only");
    SpectralField d = x - y;
    const double dz0 = norm_z0(d);
    if (dz0 == 0.0) throw std::invalid_argument("lipschitz_witness: x and y coincide");
    const NormWeights w = m.norm_weights();
    const auto h = field_handle(m, Picture::interaction);
    SpectralField dv = vector_field(h, t, x) - vector_field(h, t, y);
    const double nx = norm_sq(x, NormKind::Z1, w);
    const double ny = norm_sq(y, NormKind::Z1, w);
    return norm_z0(dv) / ((nx + ny) * dz0);
}

} // namespace hamflow
