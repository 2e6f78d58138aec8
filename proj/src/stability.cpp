#include "spdelab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/tikhonov/cauchy.hpp"
#include "spdelab/tikhonov/terminal.hpp"

namespace spde {

namespace {

constexpr double pi = std::numbers::pi;

Vec sample_or(const Grid& grid, const Field& f, double fallback) {
    return f ? sample(grid, f) : Vec::Constant(grid.size(), fallback);
}

Vec sample_or_empty(const Grid& grid, const Field& f) { return f ? sample(grid, f) : Vec(); }

Tensor scalar_tensor(const Grid& grid, const Field& f) {
    Tensor b = Tensor::scalar(grid, 1.0);
    if (f) {
        b.b11 = sample(grid, f);
        if (grid.dim == 2) b.b22 = b.b11;
    }
    return b;
}

// k-th sine mode of the box, with the lowest mode in x2 for 2D grids.
Vec sine_mode(const Grid& grid, int k) {
    return sample(grid, [&](const Point& x) {
        double v = std::sin(k * pi * x[0] / grid.length[0]);
        if (grid.dim == 2) v *= std::sin(pi * x[1] / grid.length[1]);
        return v;
    });
}

Vec random_modes(const Grid& grid, int modes, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vec v = Vec::Zero(grid.size());
    for (int k = 1; k <= modes; ++k) v += normal(rng) / k * sine_mode(grid, k);
    return v;
}

int time_index(const TimeGrid& time, double t) {
    const int k = static_cast<int>(std::lround(t / time.dt()));
    return std::clamp(k, 0, time.steps);
}

double path_mean(const std::vector<double>& xs) { return tree_sum(xs) / static_cast<double>(xs.size()); }

}  // namespace

ParabolicCoefficients ParabolicFields::sample(const Grid& grid) const {
    ParabolicCoefficients c;
    c.b = scalar_tensor(grid, diffusion);
    for (int a = 0; a < 2; ++a) c.b1[a] = sample_or_empty(grid, drift[a]);
    c.b2 = sample_or_empty(grid, reaction);
    c.b3 = sample_or_empty(grid, noise);
    return c;
}

HyperbolicCoefficients HyperbolicFields::sample(const Grid& grid) const {
    HyperbolicCoefficients c;
    c.b = scalar_tensor(grid, diffusion);
    c.b1 = sample_or_empty(grid, damping);
    for (int a = 0; a < 2; ++a) c.b2[a] = sample_or_empty(grid, drift[a]);
    c.b3 = sample_or_empty(grid, reaction);
    c.b4 = sample_or_empty(grid, noise);
    return c;
}

std::string norm_name(NormKind kind) {
    switch (kind) {
        case NormKind::L2_space: return "L2";
        case NormKind::H1_space: return "H1";
        case NormKind::H2_space: return "H2";
        case NormKind::L2_time_space: return "L2(0,T;L2)";
        case NormKind::L2_time_H1_space: return "L2(0,T;H1)";
        case NormKind::L2_time_H2_space: return "L2(0,T;H2)";
        case NormKind::H1_time_L2_space: return "H1(0,T;L2)";
    }
    return "?";
}

std::vector<StabilitySample> backward_stability_sweep(const BackwardSweepConfig& cfg) {
    require(cfg.t0 > 0.0 && cfg.t0 < cfg.T, "t0 outside (0,T)");
    require(cfg.paths >= 1 && cfg.epsilon > 0.0, "invalid sweep parameters");
    for (NormKind k : {cfg.eta_norm, cfg.E_norm, cfg.prior_norm}) require(!is_space_time(k), "spatial norm expected");
    const Grid grid = build_grid(cfg.grid);
    const Norms norms(grid);
    const TimeGrid time(cfg.T, cfg.steps);
    const int k0 = time_index(time, cfg.t0);
    require(k0 > 0 && k0 < time.steps, "t0 outside (0,T)");

    ParabolicCoefficients c = cfg.coeffs.sample(grid);
    c.y0 = sample_or(grid, cfg.y0, 0.0);
    const BrownianEnsemble ens = sample_brownian(time, cfg.paths, cfg.seed);
    const BrownianEnsemble other = cfg.common_random_numbers ? ens : sample_brownian(time, cfg.paths, splitmix64(cfg.seed));
    const std::vector<int> keep{k0, time.steps};
    const Trajectory base = solve_parabolic(c, ens, grid, keep);
    const double base_prior = std::sqrt(norms.space_sq(c.y0, cfg.prior_norm));

    std::vector<StabilitySample> out;
    for (int k : cfg.modes) {
        const Vec phi = sine_mode(grid, k);
        const double scale = cfg.epsilon / std::sqrt(norms.space_sq(phi, cfg.prior_norm));
        ParabolicCoefficients ch = c;
        ch.y0 = c.y0 + scale * phi;
        const Trajectory pert = solve_parabolic(ch, other, grid, keep);
        std::vector<double> eta(cfg.paths), E(cfg.paths);
        for (int p = 0; p < cfg.paths; ++p) {
            eta[p] = norms.space_sq(base.at(p, time.steps) - pert.at(p, time.steps), cfg.eta_norm);
            E[p] = norms.space_sq(base.at(p, k0) - pert.at(p, k0), cfg.E_norm);
        }
        StabilitySample s;
        s.experiment = "backward";
        s.mode = k;
        s.seed = cfg.seed;
        s.eta = std::sqrt(path_mean(eta));
        s.E = std::sqrt(path_mean(E));
        s.prior = std::max(base_prior, std::sqrt(norms.space_sq(ch.y0, cfg.prior_norm)));
        s.eta_norm = cfg.eta_norm;
        s.E_norm = cfg.E_norm;
        s.prior_norm = cfg.prior_norm;
        out.push_back(s);
    }
    return out;
}

RateFit fit_holder(const std::vector<StabilitySample>& samples) {
    std::vector<double> eta, E;
    for (const auto& s : samples)
        if (s.eta > 0.0 && s.E > 0.0) {
            eta.push_back(s.eta);
            E.push_back(s.E);
        }
    if (eta.size() < 3) fail("degenerate fit");
    const auto [lo, hi] = std::minmax_element(eta.begin(), eta.end());
    if (std::log10(*hi / *lo) < 2.0) fail("degenerate fit");
    return fit_loglog(eta, E);
}

double log_stability_gamma(double t0, double T) {
    require(t0 > 0.0 && t0 < T, "t0 outside (0,T)");
    return std::log(t0 + 1.0) / std::log(T + 1.0);
}

LogStabilityReport log_stability_check(const std::vector<StabilitySample>& samples, double M, double t0, double T) {
    LogStabilityReport r;
    r.gamma = log_stability_gamma(t0, T);
    double need = 1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.E == 0.0) continue;
        const double L = s.eta > 0.0 ? std::max(std::log(1.0 / s.eta), 0.0) : std::numeric_limits<double>::infinity();
        const double base = s.eta + M * M * std::exp(-std::pow(3.0, -r.gamma) * std::pow(L, r.gamma));
        const double q = base > 0.0 ? s.E * s.E / base : std::numeric_limits<double>::infinity();
        if (q > need) {
            need = q;
            r.binding = static_cast<int>(i);
        }
    }
    if (!std::isfinite(need) || need > 1e300) {
        r.finite = false;
        r.C = std::numeric_limits<double>::infinity();
        return r;
    }
    // Smallest grid point 10^(j/20) >= need.
    int j = static_cast<int>(std::ceil(20.0 * std::log10(need) - 1e-9));
    j = std::max(j, 0);
    r.C = std::pow(10.0, j / 20.0);
    if (r.C < need) r.C = std::pow(10.0, (j + 1) / 20.0);
    return r;
}

std::vector<RatioRow> internal_observability_sweep(const InternalObservabilityConfig& cfg) {
    const Grid grid = build_grid(cfg.grid);
    require(!grid.g0.empty(), "empty observation subdomain");
    require(cfg.samples >= 1 && cfg.paths >= 1 && cfg.modes >= 1, "invalid sweep parameters");
    const Norms norms(grid);
    const TimeGrid time(cfg.T, cfg.steps);
    ParabolicCoefficients c = cfg.coeffs.sample(grid);
    std::vector<int> at;
    for (double t : cfg.times) {
        require(t > 0.0 && t <= cfg.T, "evaluation time outside (0,T]");
        at.push_back(time_index(time, t));
    }

    std::vector<RatioRow> rows(cfg.times.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].experiment = "internal";
        rows[i].nodes = grid.n[0];
        rows[i].t = cfg.times[i];
    }
    for (int s = 0; s < cfg.samples; ++s) {
        std::mt19937_64 rng(path_seed(cfg.seed, static_cast<std::uint64_t>(s)));
        const BrownianEnsemble ens = sample_brownian(time, cfg.paths, path_seed(cfg.seed + 1, static_cast<std::uint64_t>(s)));
        c.y0 = random_modes(grid, cfg.modes, rng);
        const Trajectory y = solve_parabolic(c, ens, grid);
        c.y0 = random_modes(grid, cfg.modes, rng);
        const Trajectory yh = solve_parabolic(c, ens, grid);
        Trajectory diff = y;
        for (int p = 0; p < cfg.paths; ++p) diff.y[p] -= yh.y[p];
        const double obs = record_norm(measure_internal(diff, grid, grid.g0));
        if (obs == 0.0) continue;  // identical pair
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::vector<double> sq(cfg.paths);
            for (int p = 0; p < cfg.paths; ++p) sq[p] = norms.space_sq(diff.at(p, at[i]), NormKind::L2_space);
            rows[i].max_ratio = std::max(rows[i].max_ratio, std::sqrt(path_mean(sq)) / obs);
            ++rows[i].samples;
        }
    }
    return rows;
}

RatioRow boundary_observability_sweep(const BoundaryObservabilityConfig& cfg) {
    if (!cfg.calibration || !cfg.calibration->ok) fail("conditions not certified");
    require(cfg.samples >= 1 && cfg.paths >= 1 && cfg.modes >= 1 && cfg.cfl > 0.0, "invalid sweep parameters");
    GridSpec spec = cfg.grid;
    spec.gamma0.clear();
    Grid grid = build_grid(spec);
    PsiSpec psi = build_psi(grid, cfg.x0).spec;
    psi.a = cfg.calibration->a;
    psi.shift = cfg.calibration->shift;
    grid.gamma0 = observation_boundary(grid, TensorField::scalar(1.0), psi);
    require(!grid.gamma0.empty(), "empty observation boundary");

    const double T = cfg.T.value_or(cfg.calibration->T);
    require(T > 0.0, "horizon must be positive");
    const int steps = static_cast<int>(std::ceil(T / (cfg.cfl * grid.min_spacing())));
    const TimeGrid time(T, steps);
    const Norms norms(grid);
    HyperbolicCoefficients c = cfg.coeffs.sample(grid);

    RatioRow row;
    row.experiment = "boundary";
    row.nodes = grid.n[0];
    row.t = T;
    for (int s = 0; s < cfg.samples; ++s) {
        std::mt19937_64 rng(path_seed(cfg.seed, static_cast<std::uint64_t>(s)));
        const BrownianEnsemble ens = sample_brownian(time, cfg.paths, path_seed(cfg.seed + 1, static_cast<std::uint64_t>(s)));
        c.z0 = random_modes(grid, cfg.modes, rng);
        c.z1 = random_modes(grid, cfg.modes, rng);
        double forcing = 0.0;
        if (cfg.source > 0.0) {
            const Vec fx = cfg.source * random_modes(grid, cfg.modes, rng);
            const Vec gx = cfg.source * random_modes(grid, cfg.modes, rng);
            c.f = fx.replicate(1, steps);
            c.g = gx.replicate(1, steps);
            forcing = std::sqrt(T * norms.space_sq(fx, NormKind::L2_space)) + std::sqrt(T * norms.space_sq(gx, NormKind::L2_space));
        }
        const double data = std::sqrt(norms.space_sq(c.z0, NormKind::H1_space) + norms.space_sq(c.z1, NormKind::L2_space));
        if (data == 0.0) continue;
        const Trajectory z = solve_hyperbolic(c, ens, grid);
        const double obs = record_norm(measure_boundary(z, grid, grid.gamma0)) + forcing;
        if (obs == 0.0) continue;
        row.max_ratio = std::max(row.max_ratio, data / obs);
        ++row.samples;
    }
    return row;
}

std::string rate_problem_name(RateProblem p) {
    switch (p) {
        case RateProblem::terminal: return "terminal";
        case RateProblem::parabolic_cauchy: return "parabolic_cauchy";
        case RateProblem::hyperbolic_cauchy: return "hyperbolic_cauchy";
    }
    return "?";
}

namespace {

struct RateSetup {
    Grid grid;
    Norms norms;
    TimeGrid time;
    double t0 = 0.0, margin = 0.0;
    NoiseSpec noise;
    Vec truth0;  // initial datum of the truth
    Mat f;       // source, nodes x steps
};

double default_horizon(RateProblem p) {
    switch (p) {
        case RateProblem::terminal: return 0.1;
        case RateProblem::parabolic_cauchy: return 0.5;
        case RateProblem::hyperbolic_cauchy: return 2.0;
    }
    return 1.0;
}

ParabolicCoefficients rate_parabolic(const Grid& g) {
    ParabolicCoefficients c;
    c.b = Tensor::scalar(g, 1.0);
    c.b1[0] = Vec::Constant(g.size(), 0.2);
    c.b2 = Vec::Constant(g.size(), -0.3);
    c.b3 = Vec::Constant(g.size(), 0.3);
    return c;
}

HyperbolicCoefficients rate_hyperbolic(const Grid& g) {
    HyperbolicCoefficients c;
    c.b = Tensor::scalar(g, 1.0);
    c.b1 = Vec::Constant(g.size(), -0.1);
    c.b3 = Vec::Constant(g.size(), 0.2);
    c.b4 = Vec::Constant(g.size(), 0.3);
    return c;
}

// Sum of dt-weighted squared H1 norms on the inner box over t in [lo, hi].
double inner_h1_sq(const RateSetup& s, const Mat& e, const Box& box, double lo, double hi) {
    const Grid& g = s.grid;
    const Vec& w = s.norms.mass();
    std::vector<int> nodes;
    for (int node = 0; node < g.size(); ++node) {
        const Point x = g.point(node);
        if (x[0] >= box.lo[0] - 1e-12 && x[0] <= box.hi[0] + 1e-12 &&
            (g.dim == 1 || (x[1] >= box.lo[1] - 1e-12 && x[1] <= box.hi[1] + 1e-12)))
            nodes.push_back(node);
    }
    std::vector<SpMat> grad;
    for (int a = 0; a < g.dim; ++a) grad.push_back(gradient_matrix(g, a));
    const int k_lo = static_cast<int>(std::ceil(lo / s.time.dt() - 1e-9));
    const int k_hi = static_cast<int>(std::floor(hi / s.time.dt() + 1e-9));
    double total = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double tw = (k == k_lo || k == k_hi) ? 0.5 * s.time.dt() : s.time.dt();
        const Vec u = e.col(k);
        Vec q = u.cwiseAbs2();
        for (const SpMat& G : grad) q += (G * u).cwiseAbs2();
        double part = 0.0;
        for (int node : nodes) part += w[node] * q[node];
        total += tw * part;
    }
    return total;
}

// L2(0,T;H1) x L2(0,T;L2) for (e, e_t) with forward differences in time.
double energy_sq(const RateSetup& s, const Mat& e) {
    const Vec tw = time_weights(s.time);
    const double dt = s.time.dt();
    double total = 0.0;
    for (int k = 0; k <= s.time.steps; ++k) {
        total += tw[k] * s.norms.space_sq(e.col(k), NormKind::H1_space);
        if (k < s.time.steps)
            total += dt * s.norms.space_sq((e.col(k + 1) - e.col(k)) / dt, NormKind::L2_space);
    }
    return total;
}

struct Outcome {
    double error = 0.0, secondary = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

Outcome run_terminal(const RateSetup& s, double delta, std::uint64_t ens_seed, std::uint64_t noise_seed, int paths) {
    ParabolicCoefficients c = rate_parabolic(s.grid);
    c.y0 = s.truth0;
    const BrownianEnsemble ens = sample_brownian(s.time, paths, ens_seed);
    const Trajectory traj = solve_parabolic(c, ens, s.grid, Storage::terminal);
    const MeasurementRecord noisy = add_noise(measure_terminal(traj, s.grid), delta, s.noise, noise_seed);

    TerminalProblem prob;
    prob.grid = s.grid;
    prob.coeffs = rate_parabolic(s.grid);
    prob.ensemble = ens;
    for (int p = 0; p < paths; ++p) prob.data.push_back(noisy.values[p].col(0));
    prob.tau = std::max(delta * delta, kRegFloor);
    const TerminalResult r = solve_terminal(prob);

    ParabolicCoefficients d = rate_parabolic(s.grid);
    d.y0 = r.y0 - s.truth0;
    const int k0 = time_index(s.time, s.t0);
    const Trajectory diff = solve_parabolic(d, ens, s.grid, std::vector<int>{k0});
    std::vector<double> sq(paths);
    for (int p = 0; p < paths; ++p) sq[p] = s.norms.space_sq(diff.at(p, k0), NormKind::H1_space);
    Outcome o;
    o.error = std::sqrt(path_mean(sq));
    o.secondary = std::sqrt(s.norms.space_sq(d.y0, NormKind::L2_space));
    o.iterations = r.info.iterations;
    o.residual = r.info.residual;
    o.converged = r.info.converged;
    return o;
}

Outcome run_parabolic_cauchy(const RateSetup& s, const Box& inner, double delta, std::uint64_t ens_seed,
                             std::uint64_t noise_seed, int paths) {
    ParabolicCoefficients c = rate_parabolic(s.grid);
    c.y0 = s.truth0;
    c.f = s.f;
    const BrownianEnsemble ens = sample_brownian(s.time, paths, ens_seed);
    const Trajectory traj = solve_parabolic(c, ens, s.grid);
    const MeasurementRecord noisy = add_noise(measure_boundary(traj, s.grid, s.grid.gamma0), delta, s.noise, noise_seed);

    CauchyProblem prob;
    prob.grid = s.grid;
    prob.b = c.b;
    prob.a1 = c.b1;
    prob.a2 = c.b2;
    prob.a3 = c.b3;
    prob.ensemble = ens;
    prob.f = s.f;
    prob.g1 = noisy.values;
    prob.g2 = noisy.normal;
    prob.tau = std::max(delta * delta, kRegFloor);
    const CauchyResult r = solve_cauchy_parabolic(prob);

    std::vector<double> inner_sq(paths), full_sq(paths);
    for (int p = 0; p < paths; ++p) {
        const Mat e = r.u[p] - traj.y[p];
        inner_sq[p] = inner_h1_sq(s, e, inner, s.margin, s.time.T - s.margin);
        full_sq[p] = s.norms.space_time_sq(e, s.time, NormKind::L2_time_H1_space);
    }
    Outcome o;
    o.error = std::sqrt(path_mean(inner_sq));
    o.secondary = std::sqrt(path_mean(full_sq));
    o.iterations = r.info.iterations;
    o.residual = r.info.residual;
    o.converged = r.info.converged;
    return o;
}

Outcome run_hyperbolic_cauchy(const RateSetup& s, double delta, std::uint64_t ens_seed, std::uint64_t noise_seed,
                              int paths) {
    HyperbolicCoefficients c = rate_hyperbolic(s.grid);
    c.z0 = s.truth0;
    c.z1 = 0.5 * sine_mode(s.grid, 2);
    c.f = s.f;
    const BrownianEnsemble ens = sample_brownian(s.time, paths, ens_seed);
    const Trajectory traj = solve_hyperbolic(c, ens, s.grid);
    // Only the Neumann data is measured; the record carries it as its values.
    MeasurementRecord h = measure_boundary(traj, s.grid, s.grid.gamma0);
    h.values = h.normal;
    h.normal.clear();
    const MeasurementRecord noisy = add_noise(h, delta, s.noise, noise_seed);

    HyperbolicCauchyProblem prob;
    prob.grid = s.grid;
    prob.coeffs = rate_hyperbolic(s.grid);
    prob.ensemble = ens;
    prob.f = s.f;
    prob.h = noisy.values;
    prob.gamma = std::max(delta * delta, kRegFloor);
    const CauchyResult r = solve_cauchy_hyperbolic(prob);

    const CauchyMap map = CauchyMap::hyperbolic(s.grid, s.time, prob.coeffs);
    std::vector<double> en(paths), reg(paths);
    for (int p = 0; p < paths; ++p) {
        const Mat e = r.u[p] - traj.y[p];
        en[p] = energy_sq(s, e);
        reg[p] = map.reg(map.to_slice(e));
    }
    Outcome o;
    o.error = std::sqrt(path_mean(en));
    o.secondary = std::sqrt(path_mean(reg));
    o.iterations = r.info.iterations;
    o.residual = r.info.residual;
    o.converged = r.info.converged;
    return o;
}

}  // namespace

RateSweep reconstruction_rate_sweep(const RateSweepConfig& cfg) {
    require(!cfg.deltas.empty() && cfg.seeds >= 1 && cfg.paths >= 1, "invalid sweep parameters");
    for (double d : cfg.deltas) require(d >= 0.0 && d < 1.0, "delta outside (0,1)");
    GridSpec spec;
    spec.nodes = {cfg.nodes, 1};
    if (cfg.problem != RateProblem::terminal) spec.gamma0 = {{0, 1}};
    const double T = cfg.T > 0.0 ? cfg.T : default_horizon(cfg.problem);
    const Grid grid = build_grid(spec);
    RateSetup s{grid, Norms(grid), TimeGrid(T, cfg.steps), 0.0, 0.0, {}, Vec(), Mat()};
    s.t0 = cfg.t0 > 0.0 ? cfg.t0 : 0.5 * T;
    s.margin = cfg.margin > 0.0 ? cfg.margin : T / 8.0;
    require(s.t0 < T && 2.0 * s.margin < T, "sweep times outside (0,T)");
    s.noise = cfg.noise.value_or(cfg.problem == RateProblem::terminal ? NoiseSpec{NoiseShape::white, 1}
                                                                      : NoiseSpec{NoiseShape::single_mode, 1});
    s.truth0 = sine_mode(s.grid, 1) + 0.5 * sine_mode(s.grid, 2);
    if (cfg.problem != RateProblem::terminal) {
        s.f = Mat(s.grid.size(), cfg.steps);
        const Vec shape = sine_mode(s.grid, 1);
        for (int k = 0; k < cfg.steps; ++k) s.f.col(k) = std::cos(s.time.t(k)) * shape;
    }

    RateSweep out;
    out.problem = cfg.problem;
    switch (cfg.problem) {
        case RateProblem::terminal:
            out.error_norm = "L2(Omega;H1) at t0";
            out.secondary_norm = "L2 of initial datum";
            break;
        case RateProblem::parabolic_cauchy:
            out.error_norm = "L2(Omega;L2(eps,T-eps;H1(inner)))";
            out.secondary_norm = "L2(Omega;L2(0,T;H1))";
            break;
        case RateProblem::hyperbolic_cauchy:
            out.error_norm = "L2(Omega;L2(0,T;H1)) x L2(Omega;L2(0,T;L2)) of (z,z_t)";
            out.secondary_norm = "regularization norm";
            break;
    }

    std::vector<double> deltas = cfg.deltas;
    std::sort(deltas.begin(), deltas.end(), std::greater<>());
    for (double delta : deltas) {
        std::vector<double> errs, secs;
        for (int sd = 0; sd < cfg.seeds; ++sd) {
            const std::uint64_t ens_seed = path_seed(cfg.seed, static_cast<std::uint64_t>(sd));
            const std::uint64_t noise_seed = path_seed(splitmix64(cfg.seed), static_cast<std::uint64_t>(sd));
            Outcome o;
            switch (cfg.problem) {
                case RateProblem::terminal: o = run_terminal(s, delta, ens_seed, noise_seed, cfg.paths); break;
                case RateProblem::parabolic_cauchy:
                    o = run_parabolic_cauchy(s, cfg.inner, delta, ens_seed, noise_seed, cfg.paths);
                    break;
                case RateProblem::hyperbolic_cauchy:
                    o = run_hyperbolic_cauchy(s, delta, ens_seed, noise_seed, cfg.paths);
                    break;
            }
            out.rows.push_back({delta, sd, o.error, o.secondary, o.iterations, o.residual, o.converged});
            errs.push_back(o.error);
            secs.push_back(o.secondary);
        }
        out.deltas.push_back(delta);
        out.mean_error.push_back(tree_sum(errs) / cfg.seeds);
        out.mean_secondary.push_back(tree_sum(secs) / cfg.seeds);
    }
    out.monotone = true;
    for (std::size_t i = 1; i < out.mean_error.size(); ++i)
        if (out.mean_error[i] > out.mean_error[i - 1]) out.monotone = false;

    std::vector<double> x, y, y2;
    for (std::size_t i = 0; i < out.deltas.size(); ++i)
        if (out.deltas[i] > 0.0) {
            x.push_back(out.deltas[i]);
            y.push_back(out.mean_error[i]);
            y2.push_back(out.mean_secondary[i]);
        }
    if (x.size() >= 2) {
        out.fit = fit_loglog(x, y);
        out.secondary_fit = fit_loglog(x, y2);
    }
    return out;
}

void write_samples_csv(std::ostream& out, const std::vector<StabilitySample>& samples) {
    out << "experiment,mode,seed,eta,E,prior,eta_norm,E_norm,prior_norm\n" << std::setprecision(17);
    for (const auto& s : samples)
        out << s.experiment << ',' << s.mode << ',' << s.seed << ',' << s.eta << ',' << s.E << ',' << s.prior << ','
            << norm_name(s.eta_norm) << ',' << norm_name(s.E_norm) << ',' << norm_name(s.prior_norm) << '\n';
}

void write_ratios_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
    out << "experiment,nodes,t,max_ratio,samples\n" << std::setprecision(17);
    for (const auto& r : rows)
        out << r.experiment << ',' << r.nodes << ',' << r.t << ',' << r.max_ratio << ',' << r.samples << '\n';
}

void write_rate_csv(std::ostream& out, const RateSweep& sweep) {
    out << "experiment,delta,seed,error,secondary,iterations,residual,converged\n" << std::setprecision(17);
    for (const auto& r : sweep.rows)
        out << rate_problem_name(sweep.problem) << ',' << r.delta << ',' << r.seed << ',' << r.error << ','
            << r.secondary << ',' << r.iterations << ',' << r.residual << ',' << (r.converged ? 1 : 0) << '\n';
}

}  // namespace spde
