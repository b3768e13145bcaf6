#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "hamflow/model.hpp"
#include "test_util.hpp"

using namespace hamflow;
using testutil::max_coeff_distance;
using testutil::naive_physical;
using testutil::random_field;

namespace {

const double TAU = 2.0 * 3.14159265358979323846;

// Kernel in physical space, W(x) = L^{-d} sum_k W_k e^{i k x}, by direct sum.
double kernel_physical(const Grid& g, const std::vector<double>& wk, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += wk[i] * std::cos(double(g.signed_indices(i)[0]) * TAU / g.length * x);
    return s / g.length;
}

} // namespace

TEST_CASE("nls single-mode energy has the closed form a|c|^2 + 2 Re(lambda)/(alpha+2) |c|^{alpha+2} L^{1-(alpha+2)/2}") {
    const double L = 5.0;
    Grid g(1, 8, L);
    const cd c(0.7, -0.4);
    for (double alpha : {1.0, 2.0, 4.0}) {
        HamiltonianModel m = make_nls(g, alpha, cd(1.3, 0.2));
        SpectralField z(g, 1);
        z.at(0, g.flat_of_signed(2)) = c;
        const double a = g.ksq(g.flat_of_signed(2));
        const double want = a * std::norm(c) +
                            (2.0 * 1.3 / (alpha + 2.0)) * std::pow(std::abs(c), alpha + 2.0) *
                                std::pow(L, 1.0 - 0.5 * (alpha + 2.0));
        REQUIRE(energy(m, z) == Catch::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("hartree energy: hand value on the constant mode and naive double-sum oracle") {
    const double L = 4.0;
    Grid g(1, 8, L);
    auto wk = yukawa_symbol(g, 2.0, 1.5);
    HamiltonianModel m = make_hartree(g, wk);

    SECTION("constant field: h_I = W_0 |c|^4 / (2 L)") {
        SpectralField z(g, 1);
        const cd c(1.1, 0.3);
        z.at(0, g.flat_of_signed(0)) = c;
        const double want = 0.5 * wk[g.flat_of_signed(0)] * std::norm(c) * std::norm(c) / L;
        REQUIRE(interaction_energy(m, z) == Catch::Approx(want).epsilon(1e-12));
    }

    SECTION("random field vs O(K^2) double sum") {
        SpectralField z = random_field(g, 1, 0.6, 0.7, 101);
        const auto phys = naive_physical(z, 0);
        double pair = 0.0;
        for (std::size_t a = 0; a < g.size(); ++a)
            for (std::size_t b = 0; b < g.size(); ++b)
                pair += std::norm(phys[a]) *
                        kernel_physical(g, wk, g.node(int(a)) - g.node(int(b))) * std::norm(phys[b]);
        const double want = 0.5 * pair * g.cell_volume() * g.cell_volume();
        REQUIRE(interaction_energy(m, z) == Catch::Approx(want).epsilon(1e-10));
    }

    SECTION("physical potential term adds cellvol * sum V rho") {
        std::vector<double> vphys(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) vphys[i] = std::sin(TAU * g.node(int(i)) / L);
        HamiltonianModel mp = make_hartree(g, wk, {}, vphys);
        SpectralField z = random_field(g, 1, 0.6, 0.7, 102);
        const auto phys = naive_physical(z, 0);
        double pot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) pot += vphys[i] * std::norm(phys[i]);
        pot *= g.cell_volume();
        REQUIRE(interaction_energy(mp, z) - interaction_energy(m, z) ==
                Catch::Approx(pot).margin(1e-11));
    }
}

TEST_CASE("kg energy: hand value on the zero mode and quartic scaling") {
    const double L = 3.0, mass = 1.7, gc = 0.9;
    Grid g(1, 8, L);
    HamiltonianModel m = make_kg(g, mass, gc);

    SpectralField z(g, 1);
    const cd c(0.8, 0.25);
    z.at(0, g.flat_of_signed(0)) = c;
    // phi_0 = 2 Re(c)/sqrt(2 m); constant phi gives (g/4) L phi(x)^4
    const double phic = 2.0 * c.real() / std::sqrt(2.0 * mass);
    const double want = 0.25 * gc * std::pow(phic / std::sqrt(L), 4.0) * L;
    REQUIRE(interaction_energy(m, z) == Catch::Approx(want).epsilon(1e-12));
    REQUIRE(energy(m, z) == Catch::Approx(mass * std::norm(c) + want).epsilon(1e-12));

    // quartic homogeneity in the amplitude
    SpectralField z2 = z;
    z2 *= cd(2.0, 0.0);
    REQUIRE(interaction_energy(m, z2) == Catch::Approx(16.0 * want).epsilon(1e-12));
}

TEST_CASE("skg energy: hand value on the zero mode") {
    const double L = 2.0, mass = 1.3, M = 0.8, gc = 1.1;
    Grid g(1, 8, L);
    HamiltonianModel m = make_skg(g, mass, M, gc);

    SpectralField z(g, 2);
    const cd cu(0.9, -0.2), ca(0.4, 0.7);
    z.at(0, g.flat_of_signed(0)) = cu;
    z.at(1, g.flat_of_signed(0)) = ca;
    const double phic = 2.0 * ca.real() / std::sqrt(2.0 * mass); // spectral phi_0
    const double want = gc * phic * std::norm(cu) / std::sqrt(L);
    REQUIRE(interaction_energy(m, z) == Catch::Approx(want).epsilon(1e-12));
    // quadratic part: |k|^2/(2M) vanishes at k=0, omega_0 = mass on alpha
    REQUIRE(energy(m, z) == Catch::Approx(mass * std::norm(ca) + want).epsilon(1e-12));
}

TEST_CASE("phi is a real field") {
    Grid g(1, 16, TAU);
    HamiltonianModel m = make_kg(g, 1.0, 1.0);
    SpectralField z = random_field(g, 1, 0.5, 0.6, 55);
    for (const auto& v : model_detail::phi_physical(m, z, 0))
        REQUIRE(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("nls and hartree fields are gauge equivariant") {
    Grid g(1, 16, TAU);
    std::vector<HamiltonianModel> models;
    models.push_back(make_nls(g, 2.0, cd(0.8, 0.0)));
    models.push_back(make_hartree(g, yukawa_symbol(g, 1.0, 1.0)));
    const cd phase = std::polar(1.0, 1.234);
    for (const auto& m : models) {
        SpectralField z = random_field(g, 1, 0.4, 0.8, 66);
        for (Picture p : {Picture::original, Picture::interaction}) {
            const auto h = field_handle(m, p);
            SpectralField vz = vector_field(h, 0.3, z);
            SpectralField zp = phase * z;
            SpectralField vzp = vector_field(h, 0.3, zp);
            REQUIRE(max_coeff_distance(vzp, phase * vz) < 1e-12);
        }
    }
}

TEST_CASE("interaction picture conjugates the original field by the free group") {
    Grid g(1, 8, TAU);
    std::vector<HamiltonianModel> models;
    models.push_back(make_nls(g, 2.0, cd(1.0, 0.0)));
    models.push_back(make_hartree(g, yukawa_symbol(g, 1.0, 2.0)));
    models.push_back(make_kg(g, 1.2, 0.7));
    models.push_back(make_skg(g, 1.0, 1.5, 0.9));

    const double t = 0.37;
    for (const auto& m : models) {
        SpectralField z = random_field(g, m.components, 0.4, 0.9, 91);
        // y = e^{itA} z solves y' = v2(t, y); v2(t, y) = e^{itA}(v1(z) + iAz)
        SpectralField y = z;
        apply_free_propagator(m, -t, y);
        SpectralField lhs = vector_field(field_handle(m, Picture::interaction), t, y);

        SpectralField rhs = vector_field(field_handle(m, Picture::original), 0.0, z);
        for (int c = 0; c < m.components; ++c)
            for (std::size_t i = 0; i < g.size(); ++i)
                rhs.at(c, i) += cd(0.0, 1.0) * m.symbol[std::size_t(c) * g.size() + i] * z.at(c, i);
        apply_free_propagator(m, -t, rhs);

        REQUIRE(max_coeff_distance(lhs, rhs) < 1e-10);
    }
}

TEST_CASE("energy differentials match the symplectic pairing with the field") {
    Grid g(1, 8, TAU);
    std::vector<HamiltonianModel> models;
    models.push_back(make_nls(g, 2.0, cd(1.0, 0.0)));
    models.push_back(make_nls(g, 3.0, cd(-0.5, 0.0)));
    models.push_back(make_hartree(g, yukawa_symbol(g, 1.5, 1.0)));
    models.push_back(make_kg(g, 1.0, 1.0));
    models.push_back(make_skg(g, 1.1, 0.9, 1.3));

    for (const auto& m : models) {
        for (int trial = 0; trial < 5; ++trial) {
            SpectralField z = random_field(g, m.components, 0.3, 0.8, 300 + trial);
            SpectralField u = random_field(g, m.components, 0.3, 0.8, 400 + trial);
            REQUIRE(directional_derivative_check(m, z, u, 1e-4) < 1e-6);
        }
    }

    HamiltonianModel m = models.front();
    SpectralField z = random_field(g, 1, 0.3, 0.8, 1);
    REQUIRE_THROWS_AS(directional_derivative_check(m, z, z, 1e-7), std::invalid_argument);
    REQUIRE_THROWS_AS(directional_derivative_check(m, z, z, 1e-2), std::invalid_argument);
}

TEST_CASE("lipschitz witness: hand value, support, and validation") {
    const double L = 4.0, strength = 2.0, mu = 1.5;
    Grid g(1, 8, L);
    HamiltonianModel hart = make_hartree(g, yukawa_symbol(g, strength, mu));

    // x a constant field, y = 0: witness reduces to W_0 / L for any t and c
    SpectralField x(g, 1), y(g, 1);
    x.at(0, g.flat_of_signed(0)) = cd(0.6, -1.1);
    const double want = strength / (mu * mu) / L;
    REQUIRE(lipschitz_witness(hart, 0.0, x, y) == Catch::Approx(want).epsilon(1e-12));
    REQUIRE(lipschitz_witness(hart, 0.8, x, y) == Catch::Approx(want).epsilon(1e-12));

    HamiltonianModel skg = make_skg(g, 1.0, 1.0, 1.0);
    SpectralField a = random_field(g, 2, 0.4, 0.8, 21);
    SpectralField b = random_field(g, 2, 0.4, 0.8, 22);
    REQUIRE(lipschitz_witness(skg, 0.1, a, b) > 0.0);

    REQUIRE_THROWS_AS(lipschitz_witness(hart, 0.0, x, x), std::invalid_argument);
    HamiltonianModel nls = make_nls(g, 2.0, cd(1.0, 0.0));
    SpectralField x1 = random_field(g, 1, 0.4, 0.8, 23);
    REQUIRE_THROWS_AS(lipschitz_witness(nls, 0.0, x1, y), std::invalid_argument);
}

TEST_CASE("yukawa symbol values and validation") {
    Grid g(1, 8, TAU); // unit wavenumber spacing
    auto w = yukawa_symbol(g, 3.0, 2.0);
    REQUIRE(w[g.flat_of_signed(0)] == Catch::Approx(3.0 / 4.0));
    REQUIRE(w[g.flat_of_signed(1)] == Catch::Approx(3.0 / 5.0));
    REQUIRE(w[g.flat_of_signed(-1)] == Catch::Approx(3.0 / 5.0));
    REQUIRE_THROWS_AS(yukawa_symbol(g, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("model constructors validate their inputs") {
    Grid g(1, 8, TAU);
    REQUIRE_THROWS_AS(make_nls(g, 0.5, cd(1.0, 0.0)), std::invalid_argument);
    REQUIRE_THROWS_AS(make_kg(g, 0.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_skg(g, 1.0, -1.0, 1.0), std::invalid_argument);

    std::vector<double> odd(g.size(), 0.0);
    odd[g.flat_of_signed(1)] = 1.0;
    odd[g.flat_of_signed(-1)] = -1.0;
    REQUIRE_THROWS_AS(make_hartree(g, odd), std::invalid_argument);

    std::vector<double> sink(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) sink[i] = -(g.ksq(i) + 1.0);
    REQUIRE_THROWS_AS(make_hartree(g, yukawa_symbol(g, 1.0, 1.0), sink), std::invalid_argument);

    HamiltonianModel m = make_nls(g, 2.0, cd(1.0, 0.0));
    Grid g2(1, 16, TAU);
    SpectralField wrong(g2, 1);
    REQUIRE_THROWS_AS(energy(m, wrong), std::invalid_argument);
    REQUIRE_THROWS_AS(vector_field(field_handle(m, Picture::original), 0.0, wrong),
                      std::invalid_argument);
}

TEST_CASE("overflowing fields raise field_overflow_error") {
    Grid g(1, 8, TAU);
    HamiltonianModel m = make_nls(g, 2.0, cd(1.0, 0.0));
    SpectralField z(g, 1);
    z.at(0, g.flat_of_signed(0)) = cd(1e200, 0.0);
    REQUIRE_THROWS_AS(vector_field(field_handle(m, Picture::original), 0.0, z),
                      field_overflow_error);
}

TEST_CASE("codomain marks interaction-picture hartree and skg as Z0") {
    Grid g(1, 8, TAU);
    HamiltonianModel hart = make_hartree(g, yukawa_symbol(g, 1.0, 1.0));
    HamiltonianModel nls = make_nls(g, 2.0, cd(1.0, 0.0));
    HamiltonianModel skg = make_skg(g, 1.0, 1.0, 1.0);
    REQUIRE(field_handle(hart, Picture::interaction).codomain() == Codomain::z0);
    REQUIRE(field_handle(skg, Picture::interaction).codomain() == Codomain::z0);
    REQUIRE(field_handle(hart, Picture::original).codomain() == Codomain::z1dual);
    REQUIRE(field_handle(nls, Picture::interaction).codomain() == Codomain::z1dual);
}

TEST_CASE("skg symbol layout: u carries |k|^2/(2M), alpha carries omega") {
    Grid g(1, 8, TAU);
    HamiltonianModel m = make_skg(g, 1.5, 2.0, 1.0);
    const std::size_t f1 = g.flat_of_signed(2);
    REQUIRE(m.symbol[f1] == Catch::Approx(4.0 / 4.0));
    REQUIRE(m.symbol[g.size() + f1] == Catch::Approx(std::sqrt(4.0 + 2.25)));
}
