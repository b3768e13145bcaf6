// hamflow command line. Every subcommand loads one config file (JSON; any
// missing key falls back to its default), applies flag overrides, writes a
// JSON report plus CSV / gnuplot .dat tables into the configured output
// directory, and exits 0 iff every assertion configured for that run passed.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hamflow/experiments.hpp"
#include "hamflow/io.hpp"

using namespace hamflow;

namespace {

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return cfg.output_dir + "/" + name;
}

std::string dat_table(const std::string& header, const std::vector<std::vector<double>>& rows) {
    std::string s = "# " + header + "\n";
    char buf[64];
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", r[i]);
            s += buf;
            s += (i + 1 == r.size()) ? '\n' : ' ';
        }
    }
    return s;
}

struct CurveBundle {
    MeasureCurve curve;
    HamiltonianModel model;
};

// A thin snapshot curve for the velocity / theta estimators: the configured
// ensemble pushed to six equally spaced nodes across the horizon.
CurveBundle thin_curve(const ExperimentConfig& cfg, std::size_t n) {
    CurveBundle out;
    out.model = config_model(cfg);
    const NormWeights w = out.model.norm_weights();
    const FlowMap flow = config_flow(cfg, out.model);
    SamplerSpec spec = config_sampler(cfg, out.model);
    EnsembleMeasure mu = sample(spec, w, n, cfg.t0);
    out.curve.snapshots.push_back(mu);
    for (int leg = 1; leg <= 5; ++leg) {
        const double t = cfg.t0 + (cfg.t1 - cfg.t0) * leg / 5.0;
        mu = pushforward(mu, flow, t, cfg.dt);
        out.curve.snapshots.push_back(mu);
    }
    return out;
}

json base_report(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = "report-v1";
    j["config"] = to_json(cfg);
    j["config_hash"] = config_hash(cfg);
    return j;
}

void require_declared_ladder(const ExperimentConfig& cfg) {
    if (cfg.ladder.size() < 3)
        throw std::invalid_argument("config must declare a ladder with at least 3 rungs");
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& cfg) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const FlowMap flow = config_flow(cfg, model);
    SamplerSpec spec = config_sampler(cfg, model);
    const SpectralField z0 = sample(spec, w, 1, cfg.t0).particles[0];

    const int steps = std::max(1, int(std::llround((cfg.t1 - cfg.t0) / cfg.dt)));
    const TimeGrid tg(cfg.t0, cfg.t1, steps);
    const Trajectory tr = solve(flow, tg, z0);

    const double mass0 = norm_sq(tr.states.front(), NormKind::Z0, w);
    const double ener0 = energy(model, tr.states.front());
    double mass_drift = 0.0, ener_drift = 0.0;
    std::vector<std::vector<double>> rows;
    const std::size_t stride = std::max<std::size_t>(1, std::size_t(cfg.snapshot_stride));
    for (std::size_t j = 0; j < tr.states.size(); ++j) {
        const double mass = norm_sq(tr.states[j], NormKind::Z0, w);
        const double ener = energy(model, tr.states[j]);
        mass_drift = std::max(mass_drift, std::abs(mass - mass0) / mass0);
        ener_drift = std::max(ener_drift, std::abs(ener - ener0) / std::abs(ener0));
        if (j % stride == 0 || j + 1 == tr.states.size())
            rows.push_back({tr.times[j], mass, ener});
    }

    json rep = base_report(cfg);
    rep["steps"] = steps;
    rep["mass_drift"] = mass_drift;
    rep["energy_drift"] = ener_drift;
    rep["duhamel_residual"] = duhamel_residual(tr, model);
    rep["completed"] = !tr.terminated_at.has_value();
    if (tr.terminated_at) rep["terminated_at"] = *tr.terminated_at;

    // archive the node states as a single-entry path file
    PathEnsemble pe;
    pe.grid = tg;
    pe.entries.push_back(tr);
    pe.weights.assign(1, 1.0);
    if (!tr.terminated_at) write_paths(out_path(cfg, "simulate_trajectory.hpa"), pe);

    write_text_file(out_path(cfg, "simulate_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "simulate_conservation.dat"),
                    dat_table("t mass energy", rows));
    std::printf("simulate: %d steps, mass drift %.3e, energy drift %.3e\n", steps, mass_drift,
                ener_drift);
    return tr.terminated_at ? 1 : 0;
}

// ------------------------------------------------------------------- sample

int cmd_sample(const ExperimentConfig& cfg) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    SamplerSpec spec = config_sampler(cfg, model);
    const EnsembleMeasure mu = sample(spec, w, cfg.particles, cfg.t0);

    double mean_z0 = 0.0, mean_z1 = 0.0, max_z1 = 0.0, m2_z1 = 0.0;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double n0 = norm(mu.particles[i], NormKind::Z0, w);
        const double n1 = norm(mu.particles[i], NormKind::Z1, w);
        mean_z0 += mu.weights[i] * n0;
        mean_z1 += mu.weights[i] * n1;
        m2_z1 += mu.weights[i] * n1 * n1;
        max_z1 = std::max(max_z1, n1);
        rows.push_back({double(i), n0, n1});
    }

    bool ok = true;
    json rep = base_report(cfg);
    rep["particles"] = mu.size();
    rep["mean_z0"] = mean_z0;
    rep["mean_z1"] = mean_z1;
    rep["max_z1"] = max_z1;
    rep["moment2_z1"] = m2_z1;
    if (!cfg.ball_norm.empty()) {
        const NormKind kind = cfg.ball_norm == "Z0" ? NormKind::Z0 : NormKind::Z1;
        double worst = 0.0;
        for (const auto& z : mu.particles) worst = std::max(worst, norm(z, kind, w));
        ok = worst <= cfg.ball_radius;
        rep["ball_sup"] = worst;
        rep["ball_pass"] = ok;
    }

    write_ensemble(out_path(cfg, "sample_ensemble.hes"), mu);
    write_text_file(out_path(cfg, "sample_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "sample_norms.dat"), dat_table("index z0 z1", rows));
    std::printf("sample: %zu particles, mean Z1 norm %.6g\n", mu.size(), mean_z1);
    return ok ? 0 : 1;
}

// -------------------------------------------------------------- pushforward

int cmd_pushforward(const ExperimentConfig& cfg, const std::string& input, double target) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const FlowMap flow = config_flow(cfg, model);

    const std::string in = input.empty() ? out_path(cfg, "sample_ensemble.hes") : input;
    const EnsembleMeasure mu = read_ensemble(in);
    const EnsembleMeasure nu = pushforward(mu, flow, target, cfg.dt);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < nu.size(); ++i)
        rows.push_back({double(i), norm(mu.particles[i], NormKind::Z1, w),
                        norm(nu.particles[i], NormKind::Z1, w)});

    json rep = base_report(cfg);
    rep["input"] = in;
    rep["from"] = mu.timestamp;
    rep["to"] = nu.timestamp;
    rep["particles"] = nu.size();

    write_ensemble(out_path(cfg, "pushforward_ensemble.hes"), nu);
    write_text_file(out_path(cfg, "pushforward_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "pushforward_norms.dat"),
                    dat_table("index z1_before z1_after", rows));
    std::printf("pushforward: %zu particles, %.6g -> %.6g\n", nu.size(), mu.timestamp,
                nu.timestamp);
    return 0;
}

// ----------------------------------------------------------------- residual

int cmd_residual(const ExperimentConfig& cfg) {
    require_declared_ladder(cfg);
    const ResidualLadderResult res = run_residual_ladder(cfg);

    json rep = res.report;
    { // velocity and theta estimates along a thin curve of the first rung
        CurveBundle cb = thin_curve(cfg, std::min<std::size_t>(cfg.ladder[0].n, 2000));
        const VectorFieldHandle orig = field_handle(cb.model, Picture::original);
        rep["velocity_original"] = velocity_estimate(cb.curve, orig, NormKind::Z1dual);
        rep["theta_moment"] = theta_moment(cb.curve, orig, cfg.theta_c0);
        if (cb.model.kind == ModelKind::hartree || cb.model.kind == ModelKind::skg) {
            const VectorFieldHandle inter = field_handle(cb.model, Picture::interaction);
            rep["velocity_interaction"] = velocity_estimate(cb.curve, inter, NormKind::Z0);
        }
    }

    std::string csv = "rung,n,dt,residual_max,residual_fixed_dt,residual_rms_fixed_dt,envelope\n";
    std::vector<std::vector<double>> rows;
    char line[256];
    int k = 0;
    for (const auto& r : res.report["rungs"]) {
        std::snprintf(line, sizeof line, "%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", k,
                      r["n"].get<std::size_t>(), r["dt"].get<double>(),
                      r["residual_max"].get<double>(), r["residual_fixed_dt"].get<double>(),
                      r["residual_rms_fixed_dt"].get<double>(), r["envelope"].get<double>());
        csv += line;
        rows.push_back({double(r["n"].get<std::size_t>()), r["residual_fixed_dt"].get<double>(),
                        r["residual_rms_fixed_dt"].get<double>(), r["envelope"].get<double>()});
        ++k;
    }

    write_text_file(out_path(cfg, "residual_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "residual_ladder.csv"), csv);
    write_text_file(out_path(cfg, "residual_ladder.dat"),
                    dat_table("n residual_fixed_dt residual_rms_fixed_dt envelope", rows));
    std::printf("residual: slope %.3f (window [%.2f, %.2f]), %s\n", res.slope,
                res.report["slope_window"][0].get<double>(),
                res.report["slope_window"][1].get<double>(), res.all_pass ? "pass" : "FAIL");
    return res.all_pass ? 0 : 1;
}

// ------------------------------------------------------------------ project

int cmd_project(const ExperimentConfig& cfg, const std::string& input) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const WeakNormBasis wnb(w);
    const ProjectionBasis basis = config_projection(cfg, wnb);

    EnsembleMeasure mu;
    if (input.empty()) {
        SamplerSpec spec = config_sampler(cfg, model);
        mu = sample(spec, w, cfg.particles, cfg.t0);
    } else {
        mu = read_ensemble(input);
    }
    const VectorFieldHandle handle = field_handle(model, Picture::original);
    const ProjectedSnapshot snap = project_ensemble(mu, basis, &handle);

    DisintegrationEstimate est;
    est.bandwidth = cfg.bandwidth;
    est.k_neighbors = cfg.k_neighbors;
    const FieldEstimate fe = estimate_field_on_points(snap, basis.dim(), est, snap.points);

    const int d = basis.dim();
    std::string csv;
    for (int ax = 0; ax < d; ++ax) csv += "y" + std::to_string(ax + 1) + ",";
    for (int ax = 0; ax < d; ++ax) csv += "v" + std::to_string(ax + 1) + ",";
    for (int ax = 0; ax < d; ++ax)
        csv += "est" + std::to_string(ax + 1) + (ax + 1 == d ? "\n" : ",");
    std::vector<std::vector<double>> rows;
    char num[64];
    std::size_t extrapolated = 0;
    for (std::size_t i = 0; i < snap.points.size(); ++i) {
        std::vector<double> row;
        for (int ax = 0; ax < d; ++ax) row.push_back(snap.points[i][std::size_t(ax)]);
        for (int ax = 0; ax < d; ++ax) row.push_back(snap.velocities[i][std::size_t(ax)]);
        for (int ax = 0; ax < d; ++ax) row.push_back(fe.values[i][std::size_t(ax)]);
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(num, sizeof num, "%.17g", row[c]);
            csv += num;
            csv += (c + 1 == row.size()) ? '\n' : ',';
        }
        rows.push_back(std::move(row));
        if (fe.extrapolated[i]) ++extrapolated;
    }

    json rep = base_report(cfg);
    rep["dim"] = d;
    rep["particles"] = mu.size();
    rep["bandwidth"] = fe.bandwidth;
    rep["extrapolated"] = extrapolated;

    write_text_file(out_path(cfg, "project_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "project_points.csv"), csv);
    write_text_file(out_path(cfg, "project_points.dat"),
                    dat_table("y... v... est...", rows));
    std::printf("project: %zu points in d=%d, bandwidth %.6g, %zu extrapolated\n", mu.size(), d,
                fe.bandwidth, extrapolated);
    return 0;
}

// -------------------------------------------------------------------- theta

int cmd_theta(const ExperimentConfig& cfg) {
    CurveBundle cb = thin_curve(cfg, cfg.particles);
    const NormWeights w = cb.model.norm_weights();
    const VectorFieldHandle orig = field_handle(cb.model, Picture::original);

    json rep = base_report(cfg);
    rep["theta_c0"] = cfg.theta_c0;
    const double theta = theta_moment(cb.curve, orig, cfg.theta_c0);
    const double vel = velocity_estimate(cb.curve, orig, NormKind::Z1dual);
    rep["theta_moment"] = theta;
    rep["velocity_original"] = vel;
    if (cb.model.kind == ModelKind::hartree || cb.model.kind == ModelKind::skg)
        rep["velocity_interaction"] = velocity_estimate(
            cb.curve, field_handle(cb.model, Picture::interaction), NormKind::Z0);

    std::vector<std::vector<double>> rows;
    for (const auto& mu : cb.curve.snapshots) {
        double f = 0.0, th = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double nv =
                norm(vector_field(orig, mu.timestamp, mu.particles[i]), NormKind::Z1dual, w);
            f += mu.weights[i] * nv;
            th += mu.weights[i] * theta_fn(nv / cfg.theta_c0);
        }
        rows.push_back({mu.timestamp, f, th});
    }

    bool ok = true;
    if (cfg.bound_theta > 0.0) {
        ok = theta <= cfg.bound_theta;
        rep["theta_pass"] = ok;
    }
    if (cfg.bound_velocity > 0.0) {
        const bool vok = vel <= cfg.bound_velocity;
        rep["velocity_pass"] = vok;
        ok = ok && vok;
    }

    write_text_file(out_path(cfg, "theta_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "theta_moments.dat"),
                    dat_table("t mean_velocity theta_integrand", rows));
    std::printf("theta: moment %.6g, velocity integral %.6g\n", theta, vel);
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- pathspace

int cmd_pathspace(const ExperimentConfig& cfg) {
    const HamiltonianModel model = config_model(cfg);
    const NormWeights w = model.norm_weights();
    const FlowMap flow = config_flow(cfg, model);
    SamplerSpec spec = config_sampler(cfg, model);

    const std::size_t n = std::min<std::size_t>(cfg.particles, 200);
    const EnsembleMeasure mu = sample(spec, w, n, cfg.t0);
    const int steps = std::max(1, int(std::llround((cfg.t1 - cfg.t0) / cfg.dt)));
    const TimeGrid tg(cfg.t0, cfg.t1, steps);
    const PathEnsemble pe = trace(mu, flow, tg);

    const double tstar = tg.node(std::max(1, steps / 2));
    double offset = 0.0;
    const EnsembleMeasure marg = marginal(pe, tstar, &offset);
    const EnsembleMeasure push = pushforward(mu, flow, tstar, tg.node(1) - tg.node(0));
    double dist = std::abs(offset);
    for (std::size_t i = 0; i < marg.size(); ++i) {
        SpectralField diff = marg.particles[i] - push.particles[i];
        dist = std::max(dist, norm(diff, NormKind::Z1, w));
    }

    const ConcentrationReport conc = concentration_check(pe, model);
    const double supm = z1_sup_moment(pe, w);

    json rep = base_report(cfg);
    rep["paths"] = n;
    rep["nodes"] = steps + 1;
    rep["marginal_distance"] = dist;
    rep["concentration_worst"] = conc.worst;
    rep["concentration_worst_index"] = conc.worst_index;
    rep["sup_moment"] = supm;
    bool ok = dist <= 1e-10;
    rep["marginal_pass"] = ok;
    if (!cfg.ball_norm.empty() && cfg.ball_norm == "Z1") {
        const bool bok = supm <= cfg.ball_radius * (1.0 + 1e-3);
        rep["sup_moment_pass"] = bok;
        ok = ok && bok;
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < conc.residuals.size(); ++i)
        rows.push_back({double(i), conc.residuals[i]});

    if (steps <= 128) write_paths(out_path(cfg, "pathspace_paths.hpa"), pe);
    write_text_file(out_path(cfg, "pathspace_report.json"), report_text(rep));
    write_text_file(out_path(cfg, "pathspace_residuals.dat"),
                    dat_table("entry duhamel_residual", rows));
    std::printf("pathspace: %zu paths, marginal distance %.3e, worst residual %.3e\n", n, dist,
                conc.worst);
    return ok ? 0 : 1;
}

// --------------------------------------------------------------- uniqueness

int cmd_uniqueness(const ExperimentConfig& cfg) {
    require_declared_ladder(cfg);
    const UniquenessResult res = run_uniqueness(cfg);

    std::vector<std::vector<double>> rows;
    for (const auto& r : res.report["rungs"])
        rows.push_back({r["dx"].get<double>(), r["l1_terminal"].get<double>(),
                        r["sliced_w1_terminal"].get<double>()});

    write_text_file(out_path(cfg, "uniqueness_report.json"), report_text(res.report));
    write_text_file(out_path(cfg, "uniqueness_table.csv"), res.table_csv);
    write_text_file(out_path(cfg, "uniqueness_rates.dat"),
                    dat_table("dx l1_terminal sliced_w1_terminal", rows));
    std::printf("uniqueness: slope %.3f (window [%.2f, %.2f]), %s\n", res.slope,
                res.report["slope_window"][0].get<double>(),
                res.report["slope_window"][1].get<double>(), res.all_pass ? "pass" : "FAIL");
    return res.all_pass ? 0 : 1;
}

// --------------------------------------------------------------- hypotheses

int cmd_hypotheses(const ExperimentConfig& cfg) {
    const HypothesesResult res = run_hypotheses(cfg);

    std::string csv = "check,value,bound,pass\n";
    char line[160];
    for (const auto& [name, chk] : res.report["checks"].items()) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%d\n", name.c_str(),
                      chk["value"].get<double>(), chk["bound"].get<double>(),
                      chk["pass"].get<bool>() ? 1 : 0);
        csv += line;
    }

    std::vector<std::vector<double>> rows;
    const auto& times = res.report["times"];
    for (std::size_t j = 0; j < times.size(); ++j) {
        std::vector<double> row = {times[j].get<double>(),
                                   res.report["sup_z1"][j].get<double>(),
                                   res.report["moment2_z1"][j].get<double>(),
                                   res.report["ener_moment"][j].get<double>()};
        rows.push_back(std::move(row));
    }

    write_text_file(out_path(cfg, "hypotheses_report.json"), report_text(res.report));
    write_text_file(out_path(cfg, "hypotheses_checks.csv"), csv);
    write_text_file(out_path(cfg, "hypotheses_moments.dat"),
                    dat_table("t sup_z1 moment2_z1 ener_moment", rows));
    std::printf("hypotheses: %zu checks, %s\n", res.report["checks"].size(),
                res.all_pass ? "all pass" : "FAIL");
    return res.all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hamflow: measure transport laboratory for Hamiltonian PDE flows"};
    app.require_subcommand(1);

    std::string config_path, output_override, input_path;
    std::uint64_t seed_override = 0;
    bool have_seed = false;

    app.add_option("--config,-c", config_path, "config file (JSON)");
    app.add_option("--output,-o", output_override, "output directory override");
    app.add_option_function<std::uint64_t>(
           "--seed,-s", [&](std::uint64_t s) { seed_override = s; have_seed = true; },
           "seed override");

    auto* sim = app.add_subcommand("simulate", "integrate one field and report conservation");
    std::string model_override, scheme_override;
    double dt_override = 0.0, t0_override = 0.0, t1_override = 0.0;
    bool have_t0 = false, have_t1 = false;
    sim->add_option("--model", model_override, "model kind: nls | hartree | kg | skg");
    sim->add_option("--scheme", scheme_override, "scheme: strang | rk4_interaction");
    sim->add_option("--dt", dt_override, "time step");
    sim->add_option_function<double>("--t0", [&](double v) { t0_override = v; have_t0 = true; },
                                     "start time");
    sim->add_option_function<double>("--t1", [&](double v) { t1_override = v; have_t1 = true; },
                                     "end time");

    auto* smp = app.add_subcommand("sample", "draw the configured ensemble and write it");
    auto* pfw = app.add_subcommand("pushforward", "transport a stored ensemble to a target time");
    double target_time = 1.0;
    pfw->add_option("--input,-i", input_path, "ensemble file (default: out/sample_ensemble.hes)");
    pfw->add_option("--t", target_time, "target time")->required();

    auto* rsd = app.add_subcommand("residual", "weak transport residual across the ladder");
    auto* prj = app.add_subcommand("project", "project an ensemble and estimate the reduced field");
    prj->add_option("--input,-i", input_path, "ensemble file (default: fresh sample)");
    auto* tht = app.add_subcommand("theta", "velocity and equi-integrability moments");
    auto* pth = app.add_subcommand("pathspace", "trace paths; marginal and concentration checks");
    auto* unq = app.add_subcommand("uniqueness", "grid continuity vs push-forward cross-validation");
    auto* hyp = app.add_subcommand("hypotheses", "hypothesis battery against configured bounds");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (have_seed) cfg.seed = seed_override;
        if (!output_override.empty()) cfg.output_dir = output_override;
        if (sim->parsed()) {
            if (!model_override.empty()) cfg.model_kind = model_override;
            if (!scheme_override.empty()) cfg.scheme = scheme_override;
            if (dt_override > 0.0) cfg.dt = dt_override;
            if (have_t0) cfg.t0 = t0_override;
            if (have_t1) cfg.t1 = t1_override;
            return cmd_simulate(cfg);
        }
        if (smp->parsed()) return cmd_sample(cfg);
        if (pfw->parsed()) return cmd_pushforward(cfg, input_path, target_time);
        if (rsd->parsed()) return cmd_residual(cfg);
        if (prj->parsed()) return cmd_project(cfg, input_path);
        if (tht->parsed()) return cmd_theta(cfg);
        if (pth->parsed()) return cmd_pathspace(cfg);
        if (unq->parsed()) return cmd_uniqueness(cfg);
        if (hyp->parsed()) return cmd_hypotheses(cfg);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
