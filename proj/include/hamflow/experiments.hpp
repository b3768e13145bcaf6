#pragma once

// Composite experiments driven by an ExperimentConfig: the hypothesis
// battery (norm and velocity moments of a sampled curve, with optional
// bounds), the streamed weak-residual ladder, and the two-route
// cross-validation of projected transport (particle pushforward vs a
// grid continuity solve with a regressed velocity field).
//
// All runs are deterministic functions of the config; reports are plain
// JSON with no environment or clock dependence.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "config.hpp"
#include "testfn.hpp"

namespace hamflow {

// Least-squares slope of log y against log x.
inline double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need two matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: needs positive data");
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-30) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / den;
}

// Sliced 1-Wasserstein distance between weighted point clouds in R^d:
// average over random unit directions of the 1-d transport distance of
// the projected atoms.
inline double sliced_w1_points(const std::vector<std::vector<double>>& pa,
                               const std::vector<double>& wa,
                               const std::vector<std::vector<double>>& pb,
                               const std::vector<double>& wb, int dim, int directions,
                               std::uint64_t seed) {
    if (pa.size() != wa.size() || pb.size() != wb.size())
        throw std::invalid_argument("sliced_w1_points: weight count mismatch");
    if (directions < 1) throw std::invalid_argument("sliced_w1_points: need a direction");
    Rng rng(seed);
    double acc = 0.0;
    for (int q = 0; q < directions; ++q) {
        std::vector<double> u(std::size_t(dim), 0.0);
        double nn = 0.0;
        do {
            nn = 0.0;
            for (auto& c : u) {
                c = rng.normal();
                nn += c * c;
            }
        } while (nn < 1e-30);
        nn = std::sqrt(nn);
        for (auto& c : u) c /= nn;
        auto slice = [&](const std::vector<std::vector<double>>& p, const std::vector<double>& w) {
            std::vector<std::pair<double, double>> atoms;
            atoms.reserve(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (w[i] <= 0.0) continue;
                double s = 0.0;
                for (int ax = 0; ax < dim; ++ax) s += u[std::size_t(ax)] * p[i][std::size_t(ax)];
                atoms.emplace_back(s, w[i]);
            }
            return atoms;
        };
        acc += wasserstein1_1d(slice(pa, wa), slice(pb, wb));
    }
    return acc / double(directions);
}

// Projection frame described by a config: explicit weak-basis indices when
// given, else the leading block.
inline ProjectionBasis config_projection(const ExperimentConfig& c, const WeakNormBasis& b) {
    if (c.projection_indices.empty()) return leading_projection(b, c.projection_dim);
    std::vector<SpectralField> dirs;
    dirs.reserve(c.projection_indices.size());
    for (int idx : c.projection_indices) {
        if (idx < 1) throw std::invalid_argument("config: projection indices are 1-based");
        dirs.push_back(b.vector(std::size_t(idx)));
    }
    return ProjectionBasis(b.weights, std::move(dirs));
}

inline std::string report_text(const json& j) { return j.dump(2) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("write_text_file: cannot open " + path);
    os << text;
}

namespace exp_detail {

inline std::vector<double> timegrid_nodes(const TimeGrid& tg) {
    std::vector<double> t(std::size_t(tg.steps) + 1);
    for (int j = 0; j <= tg.steps; ++j) t[std::size_t(j)] = tg.node(j);
    return t;
}

inline TimeGrid config_timegrid(const ExperimentConfig& c) {
    const int steps = std::max(1, int(std::llround((c.t1 - c.t0) / c.dt)));
    return TimeGrid(c.t0, c.t1, steps);
}

struct Check {
    double value = 0.0;
    double bound = 0.0;
    bool pass = true;
};

inline void add_check(json& checks, bool& all_pass, const std::string& name, double value,
                      double bound) {
    const bool ok = value <= bound;
    checks[name] = {{"value", value}, {"bound", bound}, {"pass", ok}};
    all_pass = all_pass && ok;
}

} // namespace exp_detail

struct HypothesesResult {
    json report;
    bool all_pass = true;
};

// March a sampled cloud through the flow and accumulate the moment and
// velocity statistics the transport theory runs on: concentration of the
// support, Z1 second moment, the energy-type moment z1^2 (1 + z0), time
// integrals of the field norms in both pictures, the superlinear theta
// moment and a two-point Lipschitz ratio battery.
inline HypothesesResult run_hypotheses(const ExperimentConfig& cfg) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const FlowMap flow = config_flow(cfg, model);
    const SamplerSpec spec = config_sampler(cfg, model);
    const TimeGrid tg = exp_detail::config_timegrid(cfg);
    if (!(cfg.theta_c0 > 0.0)) throw std::invalid_argument("run_hypotheses: theta_c0 must be positive");

    const bool two_pictures =
        model.kind == ModelKind::hartree || model.kind == ModelKind::skg;
    const VectorFieldHandle h1 = field_handle(model, Picture::original);
    const VectorFieldHandle h2 = field_handle(model, two_pictures ? Picture::interaction
                                                                  : Picture::original);

    EnsembleMeasure mu = sample(spec, w, cfg.particles, cfg.t0);

    std::vector<double> snap_times, sup_z1, sup_ball, m2_z1, ener;
    quad_detail::Trapezoid vel_orig, vel_int, theta_acc;
    double lip_max = 0.0;
    Rng pair_rng(cfg.seed ^ 0x5bd1e995u);

    auto snapshot = [&](double t) {
        double mx = 0.0, mxb = 0.0, m2 = 0.0, en = 0.0, f1 = 0.0, f2 = 0.0, th = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const SpectralField& z = mu.particles[i];
            const double wi = mu.weights[i];
            const double n1 = norm(z, NormKind::Z1, w);
            mx = std::max(mx, n1);
            m2 += wi * n1 * n1;
            en += wi * n1 * n1 * (1.0 + norm(z, NormKind::Z0, w));
            if (spec.ball) mxb = std::max(mxb, norm(z, spec.ball->norm, w));
            const double nv1 = norm(vector_field(h1, t, z), NormKind::Z1dual, w);
            f1 += wi * nv1;
            if (two_pictures) {
                const double nv2 = norm(vector_field(h2, t, z), NormKind::Z0, w);
                f2 += wi * nv2;
                th += wi * theta_fn(nv2 / cfg.theta_c0);
            } else {
                th += wi * theta_fn(nv1 / cfg.theta_c0);
            }
        }
        snap_times.push_back(t);
        sup_z1.push_back(mx);
        if (spec.ball) sup_ball.push_back(mxb);
        m2_z1.push_back(m2);
        ener.push_back(en);
        vel_orig.push(t, f1);
        if (two_pictures) vel_int.push(t, f2);
        theta_acc.push(t, th);
        if (two_pictures && mu.size() >= 2) {
            for (int q = 0; q < 16; ++q) {
                const std::size_t a = pair_rng.integer(mu.size());
                std::size_t b = pair_rng.integer(mu.size() - 1);
                if (b >= a) ++b;
                SpectralField diff = mu.particles[a];
                diff -= mu.particles[b];
                if (norm(diff, NormKind::Z0, w) < 1e-14) continue;
                lip_max = std::max(lip_max,
                                   lipschitz_witness(model, t, mu.particles[a], mu.particles[b]));
            }
        }
    };

    const int stride = std::max(1, cfg.snapshot_stride);
    snapshot(tg.node(0));
    for (int j = 1; j <= tg.steps; ++j) {
        const double tp = tg.node(j - 1);
        const double dt = tg.node(j) - tp;
        for (auto& z : mu.particles) z = advance(flow, tp, dt, z);
        mu.timestamp = tg.node(j);
        if (j % stride == 0 || j == tg.steps) snapshot(tg.node(j));
    }

    json report;
    report["schema"] = "report-v1";
    report["config"] = to_json(cfg);
    report["config_hash"] = config_hash(cfg);
    report["times"] = snap_times;
    report["sup_z1"] = sup_z1;
    if (spec.ball) report["sup_ball_norm"] = sup_ball;
    report["moment2_z1"] = m2_z1;
    report["ener_moment"] = ener;
    report["velocity_original"] = vel_orig.sum;
    if (two_pictures) report["velocity_interaction"] = vel_int.sum;
    report["theta_moment"] = theta_acc.sum;
    if (two_pictures) report["lipschitz_max"] = lip_max;

    bool all_pass = true;
    json checks = json::object();
    if (spec.ball)
        exp_detail::add_check(checks, all_pass, "concentration",
                              *std::max_element(sup_ball.begin(), sup_ball.end()),
                              spec.ball->radius * (1.0 + 1e-3));
    if (cfg.bound_z1_moment > 0.0)
        exp_detail::add_check(checks, all_pass, "z1_moment",
                              *std::max_element(m2_z1.begin(), m2_z1.end()), cfg.bound_z1_moment);
    if (cfg.bound_velocity > 0.0) {
        exp_detail::add_check(checks, all_pass, "velocity_original", vel_orig.sum,
                              cfg.bound_velocity);
        if (two_pictures)
            exp_detail::add_check(checks, all_pass, "velocity_interaction", vel_int.sum,
                                  cfg.bound_velocity);
    }
    if (cfg.bound_theta > 0.0)
        exp_detail::add_check(checks, all_pass, "theta", theta_acc.sum, cfg.bound_theta);
    if (cfg.bound_ener_ratio > 0.0)
        exp_detail::add_check(checks, all_pass, "ener_ratio",
                              *std::max_element(ener.begin(), ener.end()) / ener.front(),
                              cfg.bound_ener_ratio);
    if (cfg.bound_lipschitz > 0.0 && two_pictures)
        exp_detail::add_check(checks, all_pass, "lipschitz", lip_max, cfg.bound_lipschitz);
    report["checks"] = checks;
    report["all_pass"] = all_pass;
    return {report, all_pass};
}

// One streamed weak-residual evaluation: sample n particles, march them
// node by node and feed the running ensemble to the residual quadrature.
// Returns the per-test residuals with their rms magnitudes.
inline ResidualStats residual_run(const ExperimentConfig& cfg, std::uint64_t seed,
                                  std::size_t n, double dt) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const FlowMap flow = config_flow(cfg, model);
    SamplerSpec spec = config_sampler(cfg, model);
    spec.seed = seed;

    const WeakNormBasis wnb(w);
    const ProjectionBasis basis = config_projection(cfg, wnb);
    const TimeWindow window(cfg.t0 + cfg.time_margin, cfg.t1 - cfg.time_margin);
    const auto dict = make_dictionary(basis, cfg.test_radius, window, cfg.odd_tests);

    const int steps = std::max(1, int(std::llround((cfg.t1 - cfg.t0) / dt)));
    const TimeGrid tg(cfg.t0, cfg.t1, steps);
    const std::vector<double> times = exp_detail::timegrid_nodes(tg);

    EnsembleMeasure mu = sample(spec, w, n, cfg.t0);
    std::size_t next = 0;
    auto ensemble_at = [&](std::size_t j) -> const EnsembleMeasure& {
        if (j != next) throw std::logic_error("residual_run: nodes must stream in order");
        if (j > 0) {
            const double tp = times[j - 1];
            const double step = times[j] - tp;
            for (auto& z : mu.particles) z = advance(flow, tp, step, z);
            mu.timestamp = times[j];
        }
        ++next;
        return mu;
    };
    return liouville_residual_stats(times, ensemble_at,
                                    field_handle(model, Picture::original), dict);
}

struct ResidualLadderResult {
    json report;
    bool all_pass = true;
    double slope = 0.0;
};

// Residual ladder. The test dictionary is odd and the sampled law is
// symmetric under z -> -z, so every residual has zero mean and the
// realized size is a sampling fluctuation. Two readings per rung: the
// realized |residual| at the declared (n, dt) feeds a first-rung-
// calibrated C (n^{-1/2} + dt^2) envelope, while the rms magnitude,
// rerun at the smallest declared step to pin the quadrature error,
// feeds the slope fit. A single realization is half-normal noise around
// the n^{-1/2} scale (a three-point fit on it is a coin flip); the rms
// reading tracks the same scale with ~(2n)^{-1/2} relative noise.
inline ResidualLadderResult run_residual_ladder(const ExperimentConfig& cfg, int seeds = 2,
                                                double slope_lo = -0.65, double slope_hi = -0.35,
                                                double envelope_factor = 3.0) {
    if (cfg.ladder.size() < 2)
        throw std::invalid_argument("run_residual_ladder: need at least two rungs");
    if (seeds < 1) throw std::invalid_argument("run_residual_ladder: need a seed");

    double dt_min = cfg.ladder[0].dt;
    for (const auto& rung : cfg.ladder) dt_min = std::min(dt_min, rung.dt);

    struct Reading {
        double realized = 0.0;
        double rms = 0.0;
    };
    auto mean_residual = [&](std::size_t n, double dt, json& per_seed) {
        Reading acc;
        for (int s = 0; s < seeds; ++s) {
            const ResidualStats res = residual_run(cfg, cfg.seed + std::uint64_t(s), n, dt);
            double mx = 0.0, rx = 0.0;
            for (double r : res.total) mx = std::max(mx, std::abs(r));
            for (double r : res.rms) rx = std::max(rx, r);
            per_seed.push_back(mx);
            acc.realized += mx;
            acc.rms += rx;
        }
        acc.realized /= double(seeds);
        acc.rms /= double(seeds);
        return acc;
    };

    ResidualLadderResult out;
    json rungs = json::array();
    std::vector<double> ns, means, fixed_rms;
    for (const auto& rung : cfg.ladder) {
        json per_seed = json::array();
        const Reading declared = mean_residual(rung.n, rung.dt, per_seed);
        json fixed_per_seed = json::array();
        const Reading fixed = rung.dt == dt_min
                                  ? declared
                                  : mean_residual(rung.n, dt_min, fixed_per_seed);
        ns.push_back(double(rung.n));
        means.push_back(declared.realized);
        fixed_rms.push_back(fixed.rms);
        rungs.push_back({{"n", rung.n},
                         {"dt", rung.dt},
                         {"residual_max", declared.realized},
                         {"residual_per_seed", per_seed},
                         {"residual_rms", declared.rms},
                         {"residual_fixed_dt", fixed.realized},
                         {"residual_rms_fixed_dt", fixed.rms}});
    }

    out.slope = fit_loglog_slope(ns, fixed_rms);
    const double c0 = envelope_factor * means[0] /
                      (1.0 / std::sqrt(ns[0]) + cfg.ladder[0].dt * cfg.ladder[0].dt);
    bool envelope_ok = true;
    for (std::size_t r = 0; r < means.size(); ++r) {
        const double cap = c0 * (1.0 / std::sqrt(ns[r]) + cfg.ladder[r].dt * cfg.ladder[r].dt);
        envelope_ok = envelope_ok && means[r] <= cap;
        rungs[r]["envelope"] = cap;
    }
    const bool slope_ok = out.slope >= slope_lo && out.slope <= slope_hi;
    out.all_pass = envelope_ok && slope_ok;

    out.report["schema"] = "report-v1";
    out.report["config"] = to_json(cfg);
    out.report["config_hash"] = config_hash(cfg);
    out.report["seeds"] = seeds;
    out.report["slope_dt"] = dt_min;
    out.report["rungs"] = rungs;
    out.report["slope"] = out.slope;
    out.report["slope_window"] = {slope_lo, slope_hi};
    out.report["envelope_factor"] = envelope_factor;
    out.report["envelope_pass"] = envelope_ok;
    out.report["slope_pass"] = slope_ok;
    out.report["all_pass"] = out.all_pass;
    return out;
}

struct UniquenessResult {
    json report;
    std::string table_csv;
    bool all_pass = true;
    double slope = 0.0;
};

namespace exp_detail {

// Draw one admissible sample, applying the same ball rejection as the
// bulk sampler so prefixes agree across cloud sizes.
inline SpectralField draw_admissible(const SamplerSpec& spec, const NormWeights& w, Rng& rng,
                                     std::size_t& attempts, std::size_t cap) {
    for (;;) {
        if (attempts++ > cap) throw std::runtime_error("uniqueness: rejection cap exceeded");
        SpectralField z = measure_detail::draw_one(spec, rng);
        if (!spec.ball || norm(z, spec.ball->norm, w) <= spec.ball->radius) return z;
    }
}

} // namespace exp_detail

// Two-route transport of the projected law, one ladder rung at a time.
// Route A pushes the sampled cloud through the full flow and deposits its
// projection on a histogram grid at a fixed set of snapshot times. Route B
// regresses the projected velocity field on the cell centers at those same
// times and advances route A's initial histogram with a donor-cell
// continuity solve, interpolating the velocity tables linearly in time.
// Agreement must tighten linearly in the cell width as the ladder refines
// the cloud, the step and the grid together.
inline UniquenessResult run_uniqueness(const ExperimentConfig& cfg, double slope_lo = 0.7,
                                       double slope_hi = 1.3) {
    if (cfg.ladder.size() < 2)
        throw std::invalid_argument("run_uniqueness: need at least two rungs");
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const FlowMap flow = config_flow(cfg, model);
    const WeakNormBasis wnb(w);
    const ProjectionBasis basis = config_projection(cfg, wnb);
    const int d = basis.dim();
    if (d > 3)
        throw std::invalid_argument("run_uniqueness: needs projection dimension <= 3");
    const VectorFieldHandle hv = field_handle(model, Picture::original);

    const int segments = std::max(1, cfg.snapshots);
    std::vector<double> times(std::size_t(segments) + 1);
    for (int s = 0; s <= segments; ++s)
        times[std::size_t(s)] = cfg.t0 + (cfg.t1 - cfg.t0) * double(s) / double(segments);

    UniquenessResult out;
    json rungs = json::array();
    std::vector<double> dxs, terminals;
    std::string csv = "rung,n,dt,dx,cells,bandwidth,l1_terminal,sliced_w1_terminal\n";

    for (std::size_t r = 0; r < cfg.ladder.size(); ++r) {
        const LadderRung& rung = cfg.ladder[r];
        const double H = cfg.box_halfwidth;
        const int m = std::max(2, int(std::llround(2.0 * H / rung.dx)));
        const double dx = 2.0 * H / double(m);
        GridGeometry geom(d, {-H, -H, -H}, {H, H, H},
                          {m, d > 1 ? m : 1, d > 2 ? m : 1});
        const std::size_t ncells = geom.ncells();

        SamplerSpec spec = config_sampler(cfg, model);

        // bandwidth: fixed override, else the plug-in rule sized on a
        // prefix of the cloud at the initial time
        double h = cfg.bandwidth;
        if (!(h > 0.0)) {
            const std::size_t pilot = std::min<std::size_t>(2000, rung.n);
            Rng prng(spec.seed);
            std::size_t attempts = 0;
            std::vector<double> mean(std::size_t(d), 0.0), m2(std::size_t(d), 0.0);
            for (std::size_t i = 0; i < pilot; ++i) {
                const SpectralField z =
                    exp_detail::draw_admissible(spec, w, prng, attempts, pilot * 100000);
                const auto y = basis.project(z);
                for (int ax = 0; ax < d; ++ax) {
                    const double delta = y[std::size_t(ax)] - mean[std::size_t(ax)];
                    mean[std::size_t(ax)] += delta / double(i + 1);
                    m2[std::size_t(ax)] += delta * (y[std::size_t(ax)] - mean[std::size_t(ax)]);
                }
            }
            double sbar = 0.0;
            for (int ax = 0; ax < d; ++ax)
                sbar += std::sqrt(m2[std::size_t(ax)] / double(pilot > 1 ? pilot - 1 : 1));
            sbar /= double(d);
            h = sbar * std::pow(double(rung.n), -1.0 / double(d + 4));
            if (!(h > 0.0)) throw std::runtime_error("run_uniqueness: degenerate pilot spread");
        }

        // per-snapshot accumulators: histogram mass, kernel-weighted
        // velocity numerators and denominators on the cell centers
        std::vector<std::vector<double>> massA(times.size(), std::vector<double>(ncells, 0.0));
        std::vector<std::vector<double>> num(times.size(),
                                             std::vector<double>(ncells * std::size_t(d), 0.0));
        std::vector<std::vector<double>> den(times.size(), std::vector<double>(ncells, 0.0));

        std::vector<std::array<int, 3>> cell_idx(ncells);
        for (std::size_t f = 0; f < ncells; ++f) cell_idx[f] = geom.unflat(f);
        std::vector<std::vector<double>> axis_kernel(std::size_t(d), std::vector<double>{});

        Rng rng(spec.seed);
        std::size_t attempts = 0;
        const std::size_t cap = spec.ball ? rung.n * 100000 : rung.n + 1;
        const double wi = 1.0 / double(rung.n);
        for (std::size_t i = 0; i < rung.n; ++i) {
            SpectralField z = exp_detail::draw_admissible(spec, w, rng, attempts, cap);
            for (std::size_t s = 0; s < times.size(); ++s) {
                const double t = times[s];
                const auto y = basis.project(z);
                const auto v = basis.project(vector_field(hv, t, z));
                massA[s][geom.flat(geom.locate(y))] += wi;
                for (int ax = 0; ax < d; ++ax) {
                    auto& k = axis_kernel[std::size_t(ax)];
                    k.resize(std::size_t(geom.cells[std::size_t(ax)]));
                    for (int c = 0; c < geom.cells[std::size_t(ax)]; ++c) {
                        const double cc = geom.lo[std::size_t(ax)] + (double(c) + 0.5) * geom.dx(ax);
                        const double u = (y[std::size_t(ax)] - cc) / h;
                        k[std::size_t(c)] = std::exp(-0.5 * u * u);
                    }
                }
                for (std::size_t f = 0; f < ncells; ++f) {
                    double kw = wi;
                    for (int ax = 0; ax < d; ++ax)
                        kw *= axis_kernel[std::size_t(ax)][std::size_t(cell_idx[f][std::size_t(ax)])];
                    den[s][f] += kw;
                    for (int ax = 0; ax < d; ++ax)
                        num[s][f * std::size_t(d) + std::size_t(ax)] += kw * v[std::size_t(ax)];
                }
                if (s + 1 < times.size()) {
                    const double tn = times[s + 1];
                    const int steps = std::max(1, int(std::llround((tn - t) / rung.dt)));
                    for (int j = 0; j < steps; ++j) {
                        const double ta = t + (tn - t) * double(j) / double(steps);
                        const double tb = j + 1 == steps ? tn : t + (tn - t) * double(j + 1) / double(steps);
                        z = advance(flow, ta, tb - ta, z);
                    }
                }
            }
        }

        // velocity tables; cells the kernel cannot reach keep zero velocity
        std::vector<std::vector<double>> table(times.size(),
                                               std::vector<double>(ncells * std::size_t(d), 0.0));
        std::size_t dead_cells = 0;
        for (std::size_t s = 0; s < times.size(); ++s)
            for (std::size_t f = 0; f < ncells; ++f) {
                if (den[s][f] > 1e-300) {
                    for (int ax = 0; ax < d; ++ax)
                        table[s][f * std::size_t(d) + std::size_t(ax)] =
                            num[s][f * std::size_t(d) + std::size_t(ax)] / den[s][f];
                } else {
                    ++dead_cells;
                }
            }

        auto vfun = [&](double t, const std::vector<double>& y) {
            const double seg = (cfg.t1 - cfg.t0) / double(segments);
            int s = int(std::floor((t - cfg.t0) / seg));
            s = std::max(0, std::min(segments - 1, s));
            const double th = (t - times[std::size_t(s)]) / seg;
            const std::size_t f = geom.flat(geom.locate(y));
            std::vector<double> v(std::size_t(d), 0.0);
            for (int ax = 0; ax < d; ++ax) {
                const double a = table[std::size_t(s)][f * std::size_t(d) + std::size_t(ax)];
                const double b = table[std::size_t(s) + 1][f * std::size_t(d) + std::size_t(ax)];
                v[std::size_t(ax)] = (1.0 - th) * a + th * b;
            }
            return v;
        };

        GridDensity rhoB{geom, massA[0]};
        std::vector<double> l1(times.size(), 0.0);
        for (int s = 0; s < segments; ++s) {
            grid_continuity_solve(rhoB, times[std::size_t(s)], times[std::size_t(s) + 1], vfun,
                                  cfg.cfl);
            GridDensity rhoA{geom, massA[std::size_t(s) + 1]};
            l1[std::size_t(s) + 1] = l1_distance(rhoA, rhoB);
        }

        std::vector<std::vector<double>> centers(ncells);
        for (std::size_t f = 0; f < ncells; ++f) centers[f] = geom.center(f);
        const double sw1 = sliced_w1_points(centers, massA.back(), centers, rhoB.mass, d, 16,
                                            cfg.seed ^ 0x2545f4914f6cdd1dull);

        dxs.push_back(dx);
        terminals.push_back(l1.back());
        rungs.push_back({{"n", rung.n},
                         {"dt", rung.dt},
                         {"dx", dx},
                         {"cells", m},
                         {"bandwidth", h},
                         {"dead_cells", dead_cells},
                         {"l1", l1},
                         {"l1_terminal", l1.back()},
                         {"sliced_w1_terminal", sw1},
                         {"mass_b", rhoB.total()}});
        char line[256];
        std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g,%d,%.17g,%.17g,%.17g\n", r + 1,
                      rung.n, rung.dt, dx, m, h, l1.back(), sw1);
        csv += line;
    }

    out.slope = fit_loglog_slope(dxs, terminals);
    const bool slope_ok = out.slope >= slope_lo && out.slope <= slope_hi;
    out.all_pass = slope_ok;
    out.table_csv = csv;
    out.report["schema"] = "report-v1";
    out.report["config"] = to_json(cfg);
    out.report["config_hash"] = config_hash(cfg);
    out.report["snapshot_times"] = times;
    out.report["rungs"] = rungs;
    out.report["slope"] = out.slope;
    out.report["slope_window"] = {slope_lo, slope_hi};
    out.report["all_pass"] = out.all_pass;
    return out;
}

} // namespace hamflow
