#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "hamflow/measure.hpp"
#include "test_util.hpp"

using namespace hamflow;
using testutil::random_field;

namespace {

const double TAU = 2.0 * 3.14159265358979323846;

NormWeights laplace_weights(const Grid& g) {
    std::vector<double> a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) a[i] = g.ksq(i);
    return NormWeights(g, 1, a);
}

SamplerSpec gaussian_spec(const Grid& g, double amplitude, double decay, std::uint64_t seed) {
    SamplerSpec s;
    s.kind = SamplerSpec::Kind::gaussian_field;
    s.grid = g;
    s.components = 1;
    s.sigma = decay_sigma(g, 1, amplitude, decay);
    s.seed = seed;
    return s;
}

} // namespace

TEST_CASE("gaussian ensembles reproduce the exact second moment") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    SamplerSpec spec = gaussian_spec(g, 0.5, 1.0, 2024);

    double exact = 0.0; // E||z||_Z1^2 = sum (a+1) E|z_k|^2, E|z_k|^2 = 2 sigma_k^2
    for (std::size_t i = 0; i < g.size(); ++i)
        exact += (w.at(0, i) + 1.0) * 2.0 * spec.sigma[i] * spec.sigma[i];

    EnsembleMeasure mu = sample(spec, w, 20000);
    REQUIRE(moment(mu, 2, NormKind::Z1, w) == Catch::Approx(exact).epsilon(0.05));
}

TEST_CASE("gaussian mean shift moves the empirical mean coefficient") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    const std::size_t flat = g.flat_of_signed(-1);
    SamplerSpec spec = gaussian_spec(g, 0.2, 1.0, 7);
    SpectralField mean(g, 1);
    mean.at(0, flat) = cd(1.5, -0.5);
    spec.mean = mean;

    EnsembleMeasure mu = sample(spec, w, 8000);
    cd acc(0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) acc += mu.weights[i] * mu.particles[i].at(0, flat);
    REQUIRE(std::abs(acc - cd(1.5, -0.5)) < 0.02);
}

TEST_CASE("ball conditioning keeps every draw inside and rejects infeasible balls") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    SamplerSpec spec = gaussian_spec(g, 0.3, 1.0, 11);
    spec.ball = BallSpec{NormKind::Z1, 1.2};

    EnsembleMeasure mu = sample(spec, w, 500);
    for (const auto& z : mu.particles) REQUIRE(norm(z, NormKind::Z1, w) <= 1.2);

    spec.ball = BallSpec{NormKind::Z1, 1e-8};
    REQUIRE_THROWS_AS(sample(spec, w, 10), std::runtime_error);
}

TEST_CASE("pushforward transports each particle by the flow") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    HamiltonianModel m = make_nls(g, 2.0, cd(1.0, 0.0));
    FlowMap f{m, Scheme::strang, 1e6};

    EnsembleMeasure mu;
    mu.timestamp = 0.1;
    mu.particles.push_back(random_field(g, 1, 0.4, 1.0, 5));
    mu.particles.push_back(random_field(g, 1, 0.4, 1.0, 6));
    mu.weights = {0.25, 0.75};
    mu.validate();

    EnsembleMeasure nu = pushforward(mu, f, 0.4, 1e-2);
    REQUIRE(nu.timestamp == 0.4);
    REQUIRE(nu.weights == mu.weights);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        SpectralField want = evolve(f, 0.1, 0.4, 1e-2, mu.particles[i]);
        REQUIRE(testutil::max_coeff_distance(nu.particles[i], want) == 0.0);
    }

    // blowup is reported with the particle index
    FlowMap tight{m, Scheme::strang, 1e-9};
    REQUIRE_THROWS_WITH(pushforward(mu, tight, 0.4, 1e-2),
                        Catch::Matchers::ContainsSubstring("particle 0"));
}

TEST_CASE("wasserstein1_1d quantile coupling on hand examples") {
    using atoms = std::vector<std::pair<double, double>>;
    REQUIRE(wasserstein1_1d(atoms{{0.0, 1.0}}, atoms{{3.0, 1.0}}) == Catch::Approx(3.0));
    REQUIRE(wasserstein1_1d(atoms{{0.0, 0.5}, {1.0, 0.5}}, atoms{{0.5, 1.0}}) ==
            Catch::Approx(0.5));
    REQUIRE(wasserstein1_1d(atoms{{0.0, 0.25}, {2.0, 0.75}}, atoms{{0.0, 0.75}, {2.0, 0.25}}) ==
            Catch::Approx(1.0));
    // unsorted input is sorted internally
    REQUIRE(wasserstein1_1d(atoms{{2.0, 0.75}, {0.0, 0.25}}, atoms{{0.0, 0.75}, {2.0, 0.25}}) ==
            Catch::Approx(1.0));
}

TEST_CASE("sliced distance along a fixed direction sees an exact translation") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    SpectralField u = random_field(g, 1, 0.5, 0.8, 31);
    const double delta = 0.37;

    EnsembleMeasure mu, nu;
    mu.particles.push_back(SpectralField(g, 1));
    mu.weights = {1.0};
    SpectralField shifted = u;
    shifted *= cd(delta, 0.0);
    nu.particles.push_back(shifted);
    nu.weights = {1.0};

    const double got = sliced_w1_along(mu, nu, w, {u});
    REQUIRE(got == Catch::Approx(delta * norm(u, NormKind::Z1dual, w)).epsilon(1e-12));

    REQUIRE_THROWS_AS(sliced_w1_along(mu, nu, w, {}), std::invalid_argument);
    REQUIRE(sliced_w1(mu, mu, w, 4, 99) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("weak continuity profile is the exact difference quotient on a singleton") {
    Grid g(1, 8, TAU);
    const std::size_t flat = g.flat_of_signed(1);
    auto phi = [flat](const SpectralField& z) { return z.at(0, flat).real(); };

    auto singleton = [&](double coeff, double t) {
        EnsembleMeasure mu;
        SpectralField z(g, 1);
        z.at(0, flat) = cd(coeff, 0.0);
        mu.particles.push_back(z);
        mu.weights = {1.0};
        mu.timestamp = t;
        return mu;
    };

    MeasureCurve smooth;
    smooth.snapshots = {singleton(1.0, 0.0), singleton(1.001, 0.1)};
    MeasureCurve jump;
    jump.snapshots = {singleton(1.0, 0.0), singleton(5.0, 0.1)};

    const double ps = weak_continuity_profile(smooth, {phi});
    const double pj = weak_continuity_profile(jump, {phi});
    REQUIRE(ps == Catch::Approx(0.001 / 0.1).epsilon(1e-9));
    REQUIRE(pj == Catch::Approx(4.0 / 0.1).epsilon(1e-12));
    REQUIRE(pj > 100.0 * ps);
}

TEST_CASE("moments with manual weights have closed forms") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    SpectralField z1(g, 1), z2(g, 1);
    z1.at(0, g.flat_of_signed(0)) = cd(2.0, 0.0);  // Z0 norm 2
    z2.at(0, g.flat_of_signed(1)) = cd(0.0, 3.0);  // Z0 norm 3, Z1 norm 3 sqrt(2)

    EnsembleMeasure mu;
    mu.particles = {z1, z2};
    mu.weights = {0.3, 0.7};
    mu.validate();

    REQUIRE(moment(mu, 1, NormKind::Z0, w) == Catch::Approx(0.3 * 2.0 + 0.7 * 3.0));
    REQUIRE(moment(mu, 2, NormKind::Z0, w) == Catch::Approx(0.3 * 4.0 + 0.7 * 9.0));
    REQUIRE(moment(mu, 2, NormKind::Z1, w) == Catch::Approx(0.3 * 4.0 + 0.7 * 18.0));
    REQUIRE_THROWS_AS(moment(mu, 3, NormKind::Z0, w), std::invalid_argument);
}

TEST_CASE("sampling is deterministic in the seed and prefix-stable in n") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    SamplerSpec spec = gaussian_spec(g, 0.4, 1.0, 1234);

    EnsembleMeasure a = sample(spec, w, 100);
    EnsembleMeasure b = sample(spec, w, 100);
    EnsembleMeasure c = sample(spec, w, 50);
    for (std::size_t i = 0; i < 100; ++i)
        REQUIRE(testutil::max_coeff_distance(a.particles[i], b.particles[i]) == 0.0);
    for (std::size_t i = 0; i < 50; ++i)
        REQUIRE(testutil::max_coeff_distance(a.particles[i], c.particles[i]) == 0.0);

    spec.seed = 1235;
    EnsembleMeasure d = sample(spec, w, 100);
    REQUIRE(testutil::max_coeff_distance(a.particles[0], d.particles[0]) > 0.0);
}

TEST_CASE("delta mixture picks atoms with the right frequencies") {
    Grid g(1, 8, TAU);
    NormWeights w = laplace_weights(g);
    SpectralField a(g, 1), b(g, 1);
    a.at(0, g.flat_of_signed(0)) = cd(1.0, 0.0);
    b.at(0, g.flat_of_signed(0)) = cd(-1.0, 0.0);

    SamplerSpec spec;
    spec.kind = SamplerSpec::Kind::delta_mixture;
    spec.grid = g;
    spec.atoms = {a, b};
    spec.atom_probs = {0.3, 0.7};
    spec.seed = 42;

    EnsembleMeasure mu = sample(spec, w, 2000);
    std::size_t nb = 0;
    for (const auto& z : mu.particles) {
        const double re = z.at(0, g.flat_of_signed(0)).real();
        REQUIRE((re == 1.0 || re == -1.0));
        if (re == -1.0) ++nb;
    }
    REQUIRE(double(nb) / 2000.0 == Catch::Approx(0.7).margin(0.04));
}

TEST_CASE("soliton cloud peaks near the sampled amplitude") {
    Grid g(1, 32, TAU);
    NormWeights w(g, 1, std::vector<double>(g.size(), 0.0));
    SamplerSpec spec;
    spec.kind = SamplerSpec::Kind::soliton_cloud;
    spec.grid = g;
    spec.soliton_amplitude = 0.8;
    spec.soliton_width = 0.5;
    spec.seed = 3;

    EnsembleMeasure mu = sample(spec, w, 20);
    for (const auto& z : mu.particles) {
        double peak = 0.0;
        for (const auto& v : to_physical(z, 0)) peak = std::max(peak, std::abs(v));
        REQUIRE(peak > 0.75);
        REQUIRE(peak < 0.8 + 1e-9);
    }
}

TEST_CASE("cyl_distance evaluates the dictionary gap and validates") {
    Grid g(1, 8, TAU);
    SpectralField a(g, 1), b(g, 1);
    a.at(0, g.flat_of_signed(1)) = cd(0.4, 0.0);
    b.at(0, g.flat_of_signed(1)) = cd(-0.1, 0.0);
    EnsembleMeasure mu, nu;
    mu.particles = {a};
    mu.weights = {1.0};
    nu.particles = {b};
    nu.weights = {1.0};

    auto phi = [&g](const SpectralField& z) { return z.at(0, g.flat_of_signed(1)).real(); };
    REQUIRE(cyl_distance(mu, nu, {phi}) == Catch::Approx(0.5));
    REQUIRE_THROWS_AS(cyl_distance(mu, nu, {}), std::invalid_argument);
}

TEST_CASE("ensemble and curve validation") {
    Grid g(1, 8, TAU);
    EnsembleMeasure mu;
    mu.particles.push_back(SpectralField(g, 1));
    mu.weights = {0.5}; // does not sum to 1
    REQUIRE_THROWS_AS(mu.validate(), std::invalid_argument);

    mu.weights = {1.0, 0.0}; // size mismatch
    REQUIRE_THROWS_AS(mu.validate(), std::invalid_argument);

    mu.particles.push_back(SpectralField(g, 1));
    mu.weights = {1.5, -0.5}; // negative weight
    REQUIRE_THROWS_AS(mu.validate(), std::invalid_argument);

    MeasureCurve curve;
    curve.snapshots.resize(2);
    for (auto& s : curve.snapshots) {
        s.particles.push_back(SpectralField(g, 1));
        s.weights = {1.0};
    }
    curve.snapshots[0].timestamp = 0.5;
    curve.snapshots[1].timestamp = 0.5; // not strictly increasing
    REQUIRE_THROWS_AS(curve.validate(), std::invalid_argument);

    REQUIRE_THROWS_AS(sample(gaussian_spec(g, 0.1, 1.0, 1), laplace_weights(g), 0),
                      std::invalid_argument);
}
