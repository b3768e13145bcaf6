#pragma once

// Weak transport (Liouville) residuals, velocity moments, projective
// reduction of measure curves, kernel-regression estimation of the
// conditional (disintegrated) velocity field, and a first-order upwind
// finite-volume solver for the projected continuity equation.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "measure.hpp"
#include "testfn.hpp"

namespace hamflow {

namespace quad_detail {

// Kahan-compensated trapezoid accumulator over a sequence of nodes.
struct Trapezoid {
    double sum = 0.0, comp = 0.0;
    double prev_t = 0.0, prev_f = 0.0;
    bool started = false;

    void push(double t, double f) {
        if (started) {
            const double term = 0.5 * (t - prev_t) * (f + prev_f);
            const double y = term - comp;
            const double s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        prev_t = t;
        prev_f = f;
        started = true;
    }
};

} // namespace quad_detail

// Per-test residual of the weak transport identity together with its rms
// magnitude. The identity telescopes particle by particle, so the residual
// is the weighted mean of n iid per-particle defects r_i; `total` is that
// (signed) mean and `rms` = sqrt(sum_i (w_i r_i)^2) its dispersion scale.
// For a zero-mean defect law the realized |total| is half-normal noise
// around `rms`, which is why scaling studies fit the latter.
struct ResidualStats {
    std::vector<double> total;
    std::vector<double> rms;
};

// Residual of the weak transport identity for one ensemble curve provider:
// for each test phi, trapezoid over the provided nodes of
//   sum_i w_i [ d_t phi(t, z_i) + Re < v(t, z_i), grad phi(t, z_i) >_{Z1'} ].
// `ensemble_at(j)` must yield the ensemble at times[j]; providers may stream.
inline ResidualStats liouville_residual_stats(
    const std::vector<double>& times,
    const std::function<const EnsembleMeasure&(std::size_t)>& ensemble_at,
    const VectorFieldHandle& field, const std::vector<CylTestFunction>& tests) {
    if (times.size() < 2) throw std::invalid_argument("liouville_residual: need two nodes");
    if (tests.empty()) throw std::invalid_argument("liouville_residual: no tests");
    for (const auto& phi : tests)
        if (phi.window.a < times.front() || phi.window.b > times.back())
            throw std::invalid_argument("liouville_residual: test window outside the horizon");
    std::vector<quad_detail::Trapezoid> acc(tests.size());
    std::vector<std::vector<quad_detail::Trapezoid>> per_particle(tests.size());
    std::vector<double> weights;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const EnsembleMeasure& mu = ensemble_at(j);
        if (j == 0) {
            weights = mu.weights;
            for (auto& col : per_particle) col.resize(mu.size());
        } else if (mu.size() != weights.size()) {
            throw std::invalid_argument("liouville_residual: ensemble size changed mid-stream");
        }
        const double t = times[j];
        std::vector<double> f(tests.size(), 0.0);
        bool any_active = false;
        for (const auto& phi : tests)
            if (phi.window.value(t) != 0.0 || phi.window.deriv(t) != 0.0) any_active = true;
        if (any_active) {
            for (std::size_t i = 0; i < mu.size(); ++i) {
                const SpectralField v = vector_field(field, t, mu.particles[i]);
                for (std::size_t q = 0; q < tests.size(); ++q) {
                    const auto& phi = tests[q];
                    const double gi =
                        phi.dt(t, mu.particles[i]) + phi.pair_field(t, mu.particles[i], v);
                    f[q] += mu.weights[i] * gi;
                    per_particle[q][i].push(t, gi);
                }
            }
        } else {
            for (std::size_t q = 0; q < tests.size(); ++q)
                for (std::size_t i = 0; i < weights.size(); ++i) per_particle[q][i].push(t, 0.0);
        }
        for (std::size_t q = 0; q < tests.size(); ++q) acc[q].push(t, f[q]);
    }
    ResidualStats out;
    out.total.resize(tests.size());
    out.rms.resize(tests.size());
    for (std::size_t q = 0; q < tests.size(); ++q) {
        out.total[q] = acc[q].sum;
        double ss = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double ri = weights[i] * per_particle[q][i].sum;
            ss += ri * ri;
        }
        out.rms[q] = std::sqrt(ss);
    }
    return out;
}

inline std::vector<double> liouville_residual_stream(
    const std::vector<double>& times,
    const std::function<const EnsembleMeasure&(std::size_t)>& ensemble_at,
    const VectorFieldHandle& field, const std::vector<CylTestFunction>& tests) {
    return liouville_residual_stats(times, ensemble_at, field, tests).total;
}

inline std::vector<double> liouville_residual(const MeasureCurve& curve,
                                              const VectorFieldHandle& field,
                                              const std::vector<CylTestFunction>& tests) {
    curve.validate();
    return liouville_residual_stream(
        curve.times(), [&](std::size_t j) -> const EnsembleMeasure& { return curve.snapshots[j]; },
        field, tests);
}

// Trapezoid over the curve of the mean field norm: int_I int ||v||_X dmu_t dt.
inline double velocity_estimate(const MeasureCurve& curve, const VectorFieldHandle& field,
                                NormKind kind) {
    curve.validate();
    const NormWeights w = field.model->norm_weights();
    quad_detail::Trapezoid acc;
    for (const auto& mu : curve.snapshots) {
        double f = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            f += mu.weights[i] * norm(vector_field(field, mu.timestamp, mu.particles[i]), kind, w);
        acc.push(mu.timestamp, f);
    }
    return acc.sum;
}

// theta(r) = r log(1 + r): superlinear integrand for the equi-integrability
// moment int_I int theta(||v|| / c0) dmu_t dt.
inline double theta_fn(double r) { return r * std::log1p(r); }

inline double theta_moment(const MeasureCurve& curve, const VectorFieldHandle& field, double c0) {
    if (!(c0 > 0.0)) throw std::invalid_argument("theta_moment: c0 must be positive");
    curve.validate();
    const NormWeights w = field.model->norm_weights();
    const NormKind kind = field.codomain() == Codomain::z0 ? NormKind::Z0 : NormKind::Z1dual;
    quad_detail::Trapezoid acc;
    for (const auto& mu : curve.snapshots) {
        double f = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            f += mu.weights[i] *
                 theta_fn(norm(vector_field(field, mu.timestamp, mu.particles[i]), kind, w) / c0);
        acc.push(mu.timestamp, f);
    }
    return acc.sum;
}

// A snapshot of the projected curve: the point cloud pi^d z_i, the projected
// velocities pi^d v(t, z_i) and the weights.
struct ProjectedSnapshot {
    double timestamp = 0.0;
    std::vector<std::vector<double>> points;
    std::vector<std::vector<double>> velocities;
    std::vector<double> weights;
};

struct ProjectedCurve {
    int dim = 0;
    std::vector<ProjectedSnapshot> snapshots;
};

inline ProjectedSnapshot project_ensemble(const EnsembleMeasure& mu, const ProjectionBasis& basis,
                                          const VectorFieldHandle* field) {
    ProjectedSnapshot s;
    s.timestamp = mu.timestamp;
    s.weights = mu.weights;
    s.points.reserve(mu.size());
    if (field) s.velocities.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        s.points.push_back(basis.project(mu.particles[i]));
        if (field)
            s.velocities.push_back(
                basis.project(vector_field(*field, mu.timestamp, mu.particles[i])));
    }
    return s;
}

inline ProjectedCurve project_curve(const MeasureCurve& curve, const ProjectionBasis& basis,
                                    const VectorFieldHandle* field = nullptr) {
    curve.validate();
    if (basis.dim() > 6) throw std::invalid_argument("project_curve: dimension too large");
    ProjectedCurve pc;
    pc.dim = basis.dim();
    pc.snapshots.reserve(curve.snapshots.size());
    for (const auto& mu : curve.snapshots) pc.snapshots.push_back(project_ensemble(mu, basis, field));
    return pc;
}

// Conditional velocity estimator on R^d: Nadaraya-Watson with a Gaussian
// kernel and bandwidth h = sigma_hat n^{-1/(d+4)} by default, falling back
// to a k-nearest-neighbour average where the kernel mass underflows.
struct DisintegrationEstimate {
    enum class Regression { nadaraya_watson, knn };

    Regression kind = Regression::nadaraya_watson;
    double bandwidth = 0.0; // 0: use the default rule
    int k_neighbors = 8;
};

namespace disint_detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double default_bandwidth(const ProjectedSnapshot& s, int dim) {
    // weighted mean per-axis standard deviation
    double sig = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
        double m = 0.0, v = 0.0;
        for (std::size_t i = 0; i < s.points.size(); ++i) m += s.weights[i] * s.points[i][std::size_t(ax)];
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            const double d = s.points[i][std::size_t(ax)] - m;
            v += s.weights[i] * d * d;
        }
        sig += std::sqrt(v);
    }
    sig /= double(dim);
    return sig * std::pow(double(s.points.size()), -1.0 / (double(dim) + 4.0));
}

} // namespace disint_detail

struct FieldEstimate {
    std::vector<std::vector<double>> values;
    std::vector<bool> extrapolated; // query farther than 3h from every sample
    double bandwidth = 0.0;
};

inline FieldEstimate estimate_field_on_points(const ProjectedSnapshot& snap, int dim,
                                              const DisintegrationEstimate& est,
                                              const std::vector<std::vector<double>>& queries) {
    if (snap.points.size() < 50)
        throw std::invalid_argument("estimate_projected_field: need at least 50 samples");
    if (snap.velocities.size() != snap.points.size())
        throw std::invalid_argument("estimate_projected_field: snapshot carries no velocities");
    const double h = est.bandwidth > 0.0 ? est.bandwidth : disint_detail::default_bandwidth(snap, dim);
    FieldEstimate out;
    out.bandwidth = h;
    out.values.reserve(queries.size());
    out.extrapolated.reserve(queries.size());

    const int k = std::min<int>(est.k_neighbors, int(snap.points.size()));
    for (const auto& q : queries) {
        std::vector<double> val(std::size_t(dim), 0.0);
        double nearest = std::numeric_limits<double>::infinity();
        bool knn_path = est.kind == DisintegrationEstimate::Regression::knn;
        if (!knn_path) {
            double wsum = 0.0;
            for (std::size_t i = 0; i < snap.points.size(); ++i) {
                const double d2 = disint_detail::sq_dist(q, snap.points[i]);
                nearest = std::min(nearest, d2);
                const double kk = snap.weights[i] * std::exp(-0.5 * d2 / (h * h));
                wsum += kk;
                for (int ax = 0; ax < dim; ++ax) val[std::size_t(ax)] += kk * snap.velocities[i][std::size_t(ax)];
            }
            if (wsum > 1e-300) {
                for (auto& v : val) v /= wsum;
            } else {
                knn_path = true; // kernel mass underflow
                std::fill(val.begin(), val.end(), 0.0);
            }
        }
        if (knn_path) {
            std::vector<std::pair<double, std::size_t>> d2(snap.points.size());
            for (std::size_t i = 0; i < snap.points.size(); ++i)
                d2[i] = {disint_detail::sq_dist(q, snap.points[i]), i};
            std::partial_sort(d2.begin(), d2.begin() + k, d2.end());
            nearest = std::min(nearest, d2.front().first);
            double wsum = 0.0;
            for (int j = 0; j < k; ++j) {
                const std::size_t i = d2[std::size_t(j)].second;
                wsum += snap.weights[i];
                for (int ax = 0; ax < dim; ++ax)
                    val[std::size_t(ax)] += snap.weights[i] * snap.velocities[i][std::size_t(ax)];
            }
            for (auto& v : val) v /= wsum;
        }
        out.extrapolated.push_back(std::sqrt(nearest) > 3.0 * h);
        out.values.push_back(std::move(val));
    }
    return out;
}

// Estimate the conditional field of `field` under mu at the query points.
inline FieldEstimate estimate_projected_field(const DisintegrationEstimate& est,
                                              const EnsembleMeasure& mu,
                                              const ProjectionBasis& basis,
                                              const VectorFieldHandle& field,
                                              const std::vector<std::vector<double>>& queries) {
    ProjectedSnapshot snap = project_ensemble(mu, basis, &field);
    return estimate_field_on_points(snap, basis.dim(), est, queries);
}

// Finite-dimensional test function on R^d (polynomial times radial bump,
// with a time window): the projected-side analogue of CylTestFunction.
struct GridTestFunction {
    Polynomial poly;
    double radius = 1.0;
    TimeWindow window;
    std::vector<double> center; // bump center (empty: origin)

    std::vector<double> shifted(const std::vector<double>& y) const {
        if (center.empty()) return y;
        std::vector<double> s(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) s[i] = y[i] - center[i];
        return s;
    }

    double spatial(const std::vector<double>& y0) const {
        const auto y = shifted(y0);
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        return poly.value(y) * radial_bump(std::sqrt(r2), radius);
    }

    std::vector<double> spatial_gradient(const std::vector<double>& y0) const {
        const auto y = shifted(y0);
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        const double r = std::sqrt(r2);
        const double b = radial_bump(r, radius);
        const double db = radial_bump_deriv(r, radius);
        std::vector<double> g = poly.gradient(y);
        const double p = poly.value(y);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double gb = r > 0.0 ? db * y[i] / r : 0.0;
            g[i] = g[i] * b + p * gb;
        }
        return g;
    }
};

// Residual of the projected continuity equation along the projected sample
// curve, with the velocity given by the regression estimator evaluated at
// the sample points themselves.
inline std::vector<double> projected_continuity_residual(const ProjectedCurve& pc,
                                                         const DisintegrationEstimate& est,
                                                         const std::vector<GridTestFunction>& tests) {
    if (pc.snapshots.size() < 2)
        throw std::invalid_argument("projected_continuity_residual: need two snapshots");
    std::vector<quad_detail::Trapezoid> acc(tests.size());
    for (const auto& snap : pc.snapshots) {
        FieldEstimate fe = estimate_field_on_points(snap, pc.dim, est, snap.points);
        for (std::size_t q = 0; q < tests.size(); ++q) {
            const auto& phi = tests[q];
            double f = 0.0;
            const double c = phi.window.value(snap.timestamp);
            const double dc = phi.window.deriv(snap.timestamp);
            if (c != 0.0 || dc != 0.0) {
                for (std::size_t i = 0; i < snap.points.size(); ++i) {
                    const auto& y = snap.points[i];
                    double adv = 0.0;
                    const auto g = phi.spatial_gradient(y);
                    for (int ax = 0; ax < pc.dim; ++ax)
                        adv += g[std::size_t(ax)] * fe.values[i][std::size_t(ax)];
                    f += snap.weights[i] * (dc * phi.spatial(y) + c * adv);
                }
            }
            acc[q].push(snap.timestamp, f);
        }
    }
    std::vector<double> out(tests.size());
    for (std::size_t q = 0; q < tests.size(); ++q) out[q] = acc[q].sum;
    return out;
}

// Axis-aligned box grid in R^d, d <= 3, cell masses summing to one.
struct GridGeometry {
    int dim = 1;
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};
    std::array<int, 3> cells{1, 1, 1};

    GridGeometry() = default;
    GridGeometry(int d, std::array<double, 3> l, std::array<double, 3> h, std::array<int, 3> c)
        : dim(d), lo(l), hi(h), cells(c) {
        if (d < 1 || d > 3) throw std::invalid_argument("GridGeometry: dim must be 1..3");
        for (int ax = 0; ax < d; ++ax) {
            if (!(hi[std::size_t(ax)] > lo[std::size_t(ax)]))
                throw std::invalid_argument("GridGeometry: empty box");
            if (cells[std::size_t(ax)] < 2) throw std::invalid_argument("GridGeometry: need >= 2 cells");
        }
    }

    double dx(int ax) const { return (hi[std::size_t(ax)] - lo[std::size_t(ax)]) / double(cells[std::size_t(ax)]); }

    std::size_t ncells() const {
        std::size_t n = 1;
        for (int ax = 0; ax < dim; ++ax) n *= std::size_t(cells[std::size_t(ax)]);
        return n;
    }

    std::size_t flat(const std::array<int, 3>& c) const {
        std::size_t f = 0;
        for (int ax = 0; ax < dim; ++ax) f = f * std::size_t(cells[std::size_t(ax)]) + std::size_t(c[std::size_t(ax)]);
        return f;
    }

    std::array<int, 3> unflat(std::size_t f) const {
        std::array<int, 3> c{0, 0, 0};
        for (int ax = dim - 1; ax >= 0; --ax) {
            c[std::size_t(ax)] = int(f % std::size_t(cells[std::size_t(ax)]));
            f /= std::size_t(cells[std::size_t(ax)]);
        }
        return c;
    }

    std::vector<double> center(std::size_t f) const {
        const auto c = unflat(f);
        std::vector<double> x(std::size_t(dim), 0.0);
        for (int ax = 0; ax < dim; ++ax)
            x[std::size_t(ax)] = lo[std::size_t(ax)] + (double(c[std::size_t(ax)]) + 0.5) * dx(ax);
        return x;
    }

    // cell index of a point, clamped into the box
    std::array<int, 3> locate(const std::vector<double>& y) const {
        std::array<int, 3> c{0, 0, 0};
        for (int ax = 0; ax < dim; ++ax) {
            int i = int(std::floor((y[std::size_t(ax)] - lo[std::size_t(ax)]) / dx(ax)));
            i = std::max(0, std::min(cells[std::size_t(ax)] - 1, i));
            c[std::size_t(ax)] = i;
        }
        return c;
    }
};

struct GridDensity {
    GridGeometry geom;
    std::vector<double> mass; // per cell, sums to 1

    double total() const {
        double s = 0.0;
        for (double m : mass) s += m;
        return s;
    }
};

// Histogram deposit of a weighted point cloud (nearest cell, clamped).
inline GridDensity deposit(const std::vector<std::vector<double>>& points,
                           const std::vector<double>& weights, const GridGeometry& geom) {
    GridDensity d;
    d.geom = geom;
    d.mass.assign(geom.ncells(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) d.mass[geom.flat(geom.locate(points[i]))] += weights[i];
    return d;
}

inline double l1_distance(const GridDensity& a, const GridDensity& b) {
    if (a.mass.size() != b.mass.size()) throw std::invalid_argument("l1_distance: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
    return s;
}

// First-order donor-cell upwind step of the continuity equation in mass
// form with closed (zero-flux) boundaries; v gives the velocity at a cell
// center. Exact mass conservation by construction.
inline void upwind_step(GridDensity& rho, double dt,
                        const std::function<std::vector<double>(const std::vector<double>&)>& v) {
    const GridGeometry& g = rho.geom;
    std::vector<std::vector<double>> vel(g.ncells());
    for (std::size_t f = 0; f < g.ncells(); ++f) vel[f] = v(g.center(f));
    std::vector<double> next = rho.mass;
    for (std::size_t f = 0; f < g.ncells(); ++f) {
        const auto c = g.unflat(f);
        for (int ax = 0; ax < g.dim; ++ax) {
            if (c[std::size_t(ax)] + 1 >= g.cells[std::size_t(ax)]) continue; // faces paired from the left cell
            auto cr = c;
            cr[std::size_t(ax)] += 1;
            const std::size_t fr = g.flat(cr);
            const double vface = 0.5 * (vel[f][std::size_t(ax)] + vel[fr][std::size_t(ax)]);
            const double cfl = vface * dt / g.dx(ax);
            // donor cell: mass leaves the upwind side
            const double transfer = cfl >= 0.0 ? cfl * rho.mass[f] : cfl * rho.mass[fr];
            next[f] -= transfer;
            next[fr] += transfer;
        }
    }
    rho.mass = std::move(next);
}

// Evolve the grid density from t0 to t1 with CFL-limited sub-stepping
// (sum over axes of |v| dt / dx <= cfl). Throws when the sub-step count
// needed to satisfy the CFL bound exceeds the cap.
inline void grid_continuity_solve(GridDensity& rho, double t0, double t1,
                                  const std::function<std::vector<double>(double, const std::vector<double>&)>& v,
                                  double cfl = 0.9, int substep_cap = 100000) {
    if (!(cfl > 0.0 && cfl <= 0.9)) throw std::invalid_argument("grid_continuity_solve: cfl must be in (0, 0.9]");
    const GridGeometry& g = rho.geom;
    double t = t0;
    int used = 0;
    while (t < t1 - 1e-14) {
        // bound the step by the current velocity scale
        double rate = 0.0;
        for (std::size_t f = 0; f < g.ncells(); ++f) {
            const auto vv = v(t, g.center(f));
            double r = 0.0;
            for (int ax = 0; ax < g.dim; ++ax) r += std::abs(vv[std::size_t(ax)]) / g.dx(ax);
            rate = std::max(rate, r);
        }
        double dt = rate > 0.0 ? cfl / rate : (t1 - t);
        dt = std::min(dt, t1 - t);
        if (++used > substep_cap)
            throw std::runtime_error("grid_continuity_solve: sub-step cap exceeded (CFL too restrictive)");
        const double tmid = t + 0.5 * dt;
        upwind_step(rho, dt, [&](const std::vector<double>& y) { return v(tmid, y); });
        t += dt;
    }
}

// int ||v_hat^d|| dmu^d dt along the projected curve (velocity regressed at
// the sample points), for comparison against int ||v||_{Z1'} dmu dt.
inline double projected_velocity_estimate(const ProjectedCurve& pc, const DisintegrationEstimate& est) {
    quad_detail::Trapezoid acc;
    for (const auto& snap : pc.snapshots) {
        FieldEstimate fe = estimate_field_on_points(snap, pc.dim, est, snap.points);
        double f = 0.0;
        for (std::size_t i = 0; i < snap.points.size(); ++i) {
            double n2 = 0.0;
            for (int ax = 0; ax < pc.dim; ++ax) n2 += fe.values[i][std::size_t(ax)] * fe.values[i][std::size_t(ax)];
            f += snap.weights[i] * std::sqrt(n2);
        }
        acc.push(snap.timestamp, f);
    }
    return acc.sum;
}

} // namespace hamflow
