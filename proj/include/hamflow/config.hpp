#pragma once

// Experiment configuration: a structured JSON document with a canonical
// serialization (sorted keys, two-space indent) so that parse/serialize
// round-trips are byte-identical and reports can carry a stable hash.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "liouville.hpp"
#include "measure.hpp"

namespace hamflow {

using json = nlohmann::json;

struct LadderRung {
    std::size_t n = 1000;
    double dt = 1e-2;
    double dx = 0.5;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;

    // grid
    int dimension = 1;
    int modes = 64;
    double length = 6.283185307179586;

    // model
    std::string model_kind = "nls"; // nls | hartree | kg | skg
    double alpha = 2.0;
    double lambda_re = 1.0, lambda_im = 0.0;
    double mass = 1.0;
    double big_mass = 1.0;
    double coupling = 1.0;
    std::string kernel = "yukawa"; // hartree: yukawa | none
    double kernel_strength = 1.0;
    double kernel_mu = 1.0;

    // sampler
    std::string sampler_kind = "gaussian_field"; // gaussian_field | delta_mixture | soliton_cloud
    double amplitude = 0.1;
    double decay = 1.0;
    std::size_t particles = 1000;
    std::string ball_norm; // "", "Z0", "Z1"
    double ball_radius = 1.0;
    double soliton_amplitude = 1.0;
    double soliton_width = 0.5;
    std::vector<int> mean_mode; // signed per-axis mode index of a plane-wave shift
    double mean_re = 0.0, mean_im = 0.0;
    // Each entry [k_0, (k_1,) sigma] puts weight sigma on that first-component
    // mode and zeros every other coefficient; overrides the decay profile.
    std::vector<std::vector<double>> sigma_modes;

    // flow
    std::string scheme = "strang"; // strang | rk4_interaction
    double t0 = 0.0, t1 = 1.0;
    double dt = 1e-3;
    int snapshot_stride = 10;
    double blowup_threshold = 1e6;

    // projection / tests
    int projection_dim = 2;
    std::vector<int> projection_indices; // 1-based weak-basis indices; empty: leading
    double test_radius = 4.0;
    double time_margin = 0.05;
    bool odd_tests = true;

    // disintegration / grid solver
    double bandwidth = 0.0; // 0: default rule
    int k_neighbors = 8;
    double box_halfwidth = 4.0;
    int cells = 16;
    double cfl = 0.9;
    int snapshots = 5; // time segments between velocity tables

    // hypothesis bounds and misc assertions
    double theta_c0 = 1.0;
    double bound_velocity = 0.0;   // 0: not asserted
    double bound_z1_moment = 0.0;  // 0: not asserted
    double bound_theta = 0.0;      // 0: not asserted
    double bound_ener_ratio = 0.0; // 0: not asserted
    double bound_lipschitz = 0.0;  // 0: not asserted

    std::vector<LadderRung> ladder;

    std::string output_dir = "out";
};

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["grid"] = {{"dimension", c.dimension}, {"modes", c.modes}, {"length", c.length}};
    j["model"] = {{"kind", c.model_kind},
                  {"alpha", c.alpha},
                  {"lambda", {c.lambda_re, c.lambda_im}},
                  {"mass", c.mass},
                  {"big_mass", c.big_mass},
                  {"coupling", c.coupling},
                  {"kernel", c.kernel},
                  {"kernel_strength", c.kernel_strength},
                  {"kernel_mu", c.kernel_mu}};
    j["sampler"] = {{"kind", c.sampler_kind},
                    {"amplitude", c.amplitude},
                    {"decay", c.decay},
                    {"particles", c.particles},
                    {"ball_norm", c.ball_norm},
                    {"ball_radius", c.ball_radius},
                    {"soliton_amplitude", c.soliton_amplitude},
                    {"soliton_width", c.soliton_width},
                    {"mean_mode", c.mean_mode},
                    {"mean_re", c.mean_re},
                    {"mean_im", c.mean_im},
                    {"sigma_modes", c.sigma_modes}};
    j["flow"] = {{"scheme", c.scheme},
                 {"t0", c.t0},
                 {"t1", c.t1},
                 {"dt", c.dt},
                 {"snapshot_stride", c.snapshot_stride},
                 {"blowup_threshold", c.blowup_threshold}};
    j["reduction"] = {{"projection_dim", c.projection_dim},
                      {"projection_indices", c.projection_indices},
                      {"test_radius", c.test_radius},
                      {"time_margin", c.time_margin},
                      {"odd_tests", c.odd_tests},
                      {"bandwidth", c.bandwidth},
                      {"k_neighbors", c.k_neighbors},
                      {"box_halfwidth", c.box_halfwidth},
                      {"cells", c.cells},
                      {"cfl", c.cfl},
                      {"snapshots", c.snapshots}};
    j["bounds"] = {{"theta_c0", c.theta_c0},
                   {"velocity", c.bound_velocity},
                   {"z1_moment", c.bound_z1_moment},
                   {"theta", c.bound_theta},
                   {"ener_ratio", c.bound_ener_ratio},
                   {"lipschitz", c.bound_lipschitz}};
    json lad = json::array();
    for (const auto& r : c.ladder) lad.push_back({{"n", r.n}, {"dt", r.dt}, {"dx", r.dx}});
    j["ladder"] = lad;
    j["output_dir"] = c.output_dir;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.dimension = g.value("dimension", c.dimension);
        c.modes = g.value("modes", c.modes);
        c.length = g.value("length", c.length);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        c.model_kind = m.value("kind", c.model_kind);
        c.alpha = m.value("alpha", c.alpha);
        if (m.contains("lambda")) {
            c.lambda_re = m.at("lambda").at(0).get<double>();
            c.lambda_im = m.at("lambda").at(1).get<double>();
        }
        c.mass = m.value("mass", c.mass);
        c.big_mass = m.value("big_mass", c.big_mass);
        c.coupling = m.value("coupling", c.coupling);
        c.kernel = m.value("kernel", c.kernel);
        c.kernel_strength = m.value("kernel_strength", c.kernel_strength);
        c.kernel_mu = m.value("kernel_mu", c.kernel_mu);
    }
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        c.sampler_kind = s.value("kind", c.sampler_kind);
        c.amplitude = s.value("amplitude", c.amplitude);
        c.decay = s.value("decay", c.decay);
        c.particles = s.value("particles", c.particles);
        c.ball_norm = s.value("ball_norm", c.ball_norm);
        c.ball_radius = s.value("ball_radius", c.ball_radius);
        c.soliton_amplitude = s.value("soliton_amplitude", c.soliton_amplitude);
        c.soliton_width = s.value("soliton_width", c.soliton_width);
        if (s.contains("mean_mode")) c.mean_mode = s.at("mean_mode").get<std::vector<int>>();
        c.mean_re = s.value("mean_re", c.mean_re);
        c.mean_im = s.value("mean_im", c.mean_im);
        if (s.contains("sigma_modes"))
            c.sigma_modes = s.at("sigma_modes").get<std::vector<std::vector<double>>>();
    }
    if (j.contains("flow")) {
        const auto& f = j.at("flow");
        c.scheme = f.value("scheme", c.scheme);
        c.t0 = f.value("t0", c.t0);
        c.t1 = f.value("t1", c.t1);
        c.dt = f.value("dt", c.dt);
        c.snapshot_stride = f.value("snapshot_stride", c.snapshot_stride);
        c.blowup_threshold = f.value("blowup_threshold", c.blowup_threshold);
    }
    if (j.contains("reduction")) {
        const auto& r = j.at("reduction");
        c.projection_dim = r.value("projection_dim", c.projection_dim);
        if (r.contains("projection_indices"))
            c.projection_indices = r.at("projection_indices").get<std::vector<int>>();
        c.test_radius = r.value("test_radius", c.test_radius);
        c.time_margin = r.value("time_margin", c.time_margin);
        c.odd_tests = r.value("odd_tests", c.odd_tests);
        c.bandwidth = r.value("bandwidth", c.bandwidth);
        c.k_neighbors = r.value("k_neighbors", c.k_neighbors);
        c.box_halfwidth = r.value("box_halfwidth", c.box_halfwidth);
        c.cells = r.value("cells", c.cells);
        c.cfl = r.value("cfl", c.cfl);
        c.snapshots = r.value("snapshots", c.snapshots);
    }
    if (j.contains("bounds")) {
        const auto& b = j.at("bounds");
        c.theta_c0 = b.value("theta_c0", c.theta_c0);
        c.bound_velocity = b.value("velocity", c.bound_velocity);
        c.bound_z1_moment = b.value("z1_moment", c.bound_z1_moment);
        c.bound_theta = b.value("theta", c.bound_theta);
        c.bound_ener_ratio = b.value("ener_ratio", c.bound_ener_ratio);
        c.bound_lipschitz = b.value("lipschitz", c.bound_lipschitz);
    }
    if (j.contains("ladder"))
        for (const auto& r : j.at("ladder"))
            c.ladder.push_back({r.at("n").get<std::size_t>(), r.at("dt").get<double>(),
                                r.at("dx").get<double>()});
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

// Canonical text form: nlohmann keeps object keys sorted; two-space indent
// and a trailing newline pinned here.
inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig parse_config(const std::string& text) {
    return config_from_json(json::parse(text));
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

// FNV-1a over the canonical serialization.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string s = serialize_config(c);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return std::string(buf);
}

// Construct the model / weights / sampler / flow described by a config.
inline Grid config_grid(const ExperimentConfig& c) { return Grid(c.dimension, c.modes, c.length); }

inline HamiltonianModel config_model(const ExperimentConfig& c) {
    const Grid g = config_grid(c);
    if (c.model_kind == "nls") return make_nls(g, c.alpha, cd(c.lambda_re, c.lambda_im));
    if (c.model_kind == "hartree") {
        std::vector<double> w = c.kernel == "none" ? std::vector<double>(g.size(), 0.0)
                                                   : yukawa_symbol(g, c.kernel_strength, c.kernel_mu);
        return make_hartree(g, std::move(w));
    }
    if (c.model_kind == "kg") return make_kg(g, c.mass, c.coupling);
    if (c.model_kind == "skg") return make_skg(g, c.mass, c.big_mass, c.coupling);
    throw std::invalid_argument("config: unknown model kind " + c.model_kind);
}

// Plane-wave mean shift of the gaussian sampler: a single mode on the
// first component with the configured complex amplitude.
inline std::optional<SpectralField> config_mean_field(const ExperimentConfig& c, const Grid& g,
                                                      int components) {
    if (c.mean_mode.empty()) return std::nullopt;
    if (int(c.mean_mode.size()) != g.dimension)
        throw std::invalid_argument("config: mean_mode needs one index per axis");
    SpectralField z(g, components);
    const std::size_t flat = g.dimension == 1 ? g.flat_of_signed(c.mean_mode[0])
                                              : g.flat_of_signed(c.mean_mode[0], c.mean_mode[1]);
    z.at(0, flat) = cd(c.mean_re, c.mean_im);
    return z;
}

inline SamplerSpec config_sampler(const ExperimentConfig& c, const HamiltonianModel& m) {
    SamplerSpec s;
    s.grid = m.grid;
    s.components = m.components;
    s.seed = c.seed;
    if (c.sampler_kind == "gaussian_field") {
        s.kind = SamplerSpec::Kind::gaussian_field;
        if (c.sigma_modes.empty()) {
            s.sigma = decay_sigma(m.grid, m.components, c.amplitude, c.decay);
        } else {
            s.sigma.assign(m.grid.size() * std::size_t(m.components), 0.0);
            for (const auto& e : c.sigma_modes) {
                if (int(e.size()) != m.grid.dimension + 1)
                    throw std::invalid_argument(
                        "config: sigma_modes entry needs one index per axis plus sigma");
                const std::size_t flat =
                    m.grid.dimension == 1
                        ? m.grid.flat_of_signed(int(e[0]))
                        : m.grid.flat_of_signed(int(e[0]), int(e[1]));
                s.sigma[flat] = e.back();
            }
        }
        s.mean = config_mean_field(c, m.grid, m.components);
    } else if (c.sampler_kind == "soliton_cloud") {
        s.kind = SamplerSpec::Kind::soliton_cloud;
        s.soliton_amplitude = c.soliton_amplitude;
        s.soliton_width = c.soliton_width;
    } else {
        throw std::invalid_argument("config: sampler kind " + c.sampler_kind +
                                    " needs explicit atoms");
    }
    if (!c.ball_norm.empty()) {
        BallSpec b;
        if (c.ball_norm == "Z0") b.norm = NormKind::Z0;
        else if (c.ball_norm == "Z1") b.norm = NormKind::Z1;
        else throw std::invalid_argument("config: ball norm must be Z0 or Z1");
        b.radius = c.ball_radius;
        s.ball = b;
    }
    return s;
}

inline FlowMap config_flow(const ExperimentConfig& c, const HamiltonianModel& m) {
    FlowMap f;
    f.model = m;
    if (c.scheme == "strang") f.scheme = Scheme::strang;
    else if (c.scheme == "rk4_interaction") f.scheme = Scheme::rk4_interaction;
    else throw std::invalid_argument("config: unknown scheme " + c.scheme);
    f.blowup_threshold = c.blowup_threshold;
    return f;
}

} // namespace hamflow
