#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "spdelab/carleman/identity.hpp"
#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/tikhonov/cauchy.hpp"
#include "spdelab/tikhonov/terminal.hpp"
#include "spdelab/trajectory.hpp"

namespace fs = std::filesystem;
using namespace spde;
using namespace spde::cli;

namespace {

const char* const kUsage =
    "usage: spde_lab <subcommand> --config <path> [--seed <int>] [--out <dir>] [--paths <int>]\n"
    "subcommands:\n"
    "  simulate                forward parabolic or hyperbolic ensemble\n"
    "  identity-check          pointwise and stochastic weighted identities\n"
    "  carleman-check          pseudoconvexity and hyperbolic condition certificate\n"
    "  reconstruct-terminal    initial datum from terminal data\n"
    "  reconstruct-cauchy      parabolic solution from lateral Cauchy data\n"
    "  reconstruct-hyperbolic  hyperbolic solution from Neumann data\n"
    "  stability-sweep         kind = backward | rate\n"
    "  observability-sweep     kind = internal | boundary\n";

// Output directory plus the list of files written by this run.
struct Run {
    std::string command;
    fs::path out;
    std::uint64_t seed = 0;
    std::vector<std::string> files;

    std::ofstream open(const std::string& name) {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) fail("cannot write " + (out / name).string());
        f.precision(17);
        files.push_back(name);
        return f;
    }
    void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }
};

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

json fit_json(const RateFit& f) {
    return {{"slope", f.slope}, {"log_constant", f.log_constant}, {"r2", f.r2}, {"samples", f.samples}};
}

json info_json(const TikhonovResult& r) {
    return {{"iterations", r.iterations},     {"residual", r.residual}, {"converged", r.converged},
            {"functional", r.functional},     {"misfit_sq", r.misfit_sq}, {"reg_sq", r.reg_sq},
            {"variational_residual", r.variational_residual}};
}

json point_json(const Grid& g, int node) {
    const Point x = g.point(node);
    return g.dim == 2 ? json::array({x[0], x[1]}) : json::array({x[0]});
}

double mean_sq(const std::vector<double>& xs) { return tree_sum(xs) / static_cast<double>(xs.size()); }

int paths_of(const Section& root) {
    const int paths = root.integer("paths", 1);
    require(paths >= 1, "field 'paths': must be positive");
    return paths;
}

Point read_point(const Section& s, const std::string& key, Point fallback) {
    if (!s.has(key)) return fallback;
    const auto v = s.numbers(key);
    require(v.size() == 1 || v.size() == 2, "field '" + s.path() + "." + key + "': expected 1 or 2 entries");
    return {v[0], v.size() > 1 ? v[1] : 0.0};
}

Box read_box(const Section& s) {
    Box b;
    b.lo = read_point(s, "lo", b.lo);
    b.hi = read_point(s, "hi", b.hi);
    s.finish();
    return b;
}

WeightSpec read_weight(const Section& s) {
    WeightSpec w;
    w.variant = weight_variant_from_string(s.string("variant"));
    w.dim = s.integer("dim", w.dim);
    w.T = s.number("T", w.T);
    w.lambda = s.number("lambda", w.lambda);
    w.mu = s.number("mu", w.mu);
    w.s = s.number("s", w.s);
    w.c1 = s.number("c1", w.c1);
    w.beta = s.number("beta", w.beta);
    w.m = s.number("m", w.m);
    w.h = s.number("h", w.h);
    w.tau = s.number("tau", w.tau);
    w.x0 = read_point(s, "x0", w.x0);
    if (auto p = s.optional_child("psi")) {
        w.psi.x0 = read_point(*p, "x0", w.psi.x0);
        w.psi.a = p->number("a", w.psi.a);
        w.psi.shift = p->number("shift", w.psi.shift);
        p->finish();
    }
    w.psi_sup = s.number("psi_sup", w.psi_sup);
    w.psi_t_slope = s.number("psi_t_slope", w.psi_t_slope);
    w.psi_t_offset = s.number("psi_t_offset", w.psi_t_offset);
    s.finish();
    validate_weight(w);
    return w;
}

IdentityCase read_identity_case(const Section& s) {
    IdentityCase c;
    c.dim = s.integer("dim", 1);
    c.b = read_tensor(s, "b");
    if (s.has("weight")) c.ell = weight_field(read_weight(s.child("weight")));
    else c.ell = s.expr("ell").jet();
    if (auto e = s.optional_expr("psi")) c.psi = e->jet();
    if (auto e = s.optional_expr("phi")) c.phi = e->jet();
    c.c0_lambda = s.number("c0_lambda", 0.0);
    return c;
}

// Time-trapezoid L2(H1) squared over columns in [lo, hi].
double window_h1_sq(const Norms& norms, const TimeGrid& time, const Mat& e, double lo, double hi) {
    const int k_lo = static_cast<int>(std::ceil(lo / time.dt() - 1e-9));
    const int k_hi = static_cast<int>(std::floor(hi / time.dt() + 1e-9));
    double total = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double w = (k == k_lo || k == k_hi) ? 0.5 * time.dt() : time.dt();
        total += w * norms.space_sq(e.col(k), NormKind::H1_space);
    }
    return total;
}

// ---------------------------------------------------------------------------

void simulate(const Section& root, Run& run) {
    const std::string equation = root.string("equation", "parabolic");
    const Grid grid = build_grid(read_grid(root.child("grid")));
    const TimeGrid time = read_time(root.child("time"));
    const int paths = paths_of(root);
    const std::string storage = root.string("storage", "full");
    const std::string format = root.string("format", "csv");
    require(storage == "full" || storage == "terminal", "field 'storage': expected full or terminal");
    require(format == "csv" || format == "binary", "field 'format': expected csv or binary");
    const BrownianEnsemble ens = sample_brownian(time, paths, run.seed);
    const Storage st = storage == "full" ? Storage::full : Storage::terminal;

    Trajectory traj;
    json report = {{"equation", equation}, {"nodes", grid.size()}, {"steps", time.steps}, {"paths", paths}};
    if (equation == "parabolic") {
        const ParabolicExprs e = read_parabolic(root.child("coefficients"));
        traj = solve_parabolic(sample_parabolic(e, grid, time), ens, grid, st);
    } else if (equation == "hyperbolic") {
        const HyperbolicExprs e = read_hyperbolic(root.child("coefficients"));
        traj = solve_hyperbolic(sample_hyperbolic(e, grid, time), ens, grid, st);
        report["terminal_energy"] = expected_energy(traj, grid, time.steps);
    } else {
        fail("field 'equation': expected parabolic or hyperbolic");
    }
    root.finish();

    const Norms norms(grid);
    std::vector<double> sq(paths);
    for (int p = 0; p < paths; ++p) sq[p] = norms.space_sq(traj.terminal(p), NormKind::L2_space);
    report["terminal_l2"] = std::sqrt(mean_sq(sq));
    for (double v : sq)
        if (!std::isfinite(v)) fail_numerical("solution blew up");

    if (format == "csv") {
        auto f = run.open("trajectory.csv");
        write_csv(f, traj, grid);
    } else {
        auto f = run.open("trajectory.bin");
        write_binary(f, traj, grid);
    }
    run.write_json("report.json", report);
}

void identity_check(const Section& root, Run& run) {
    const std::string equation = root.string("equation", "parabolic");
    require(equation == "parabolic" || equation == "hyperbolic", "field 'equation': expected parabolic or hyperbolic");
    const bool hyper = equation == "hyperbolic";
    const double tol = root.number("tolerance", 1e-10);

    double T = 1.0;
    int nt = 4, nx = 4;
    std::array<double, 2> length{1.0, 1.0};
    if (auto s = root.optional_child("sample")) {
        T = s->number("T", T);
        nt = s->integer("nt", nt);
        nx = s->integer("nx", nx);
        if (s->has("length")) {
            const auto L = s->numbers("length");
            require(!L.empty() && L.size() <= 2, "field 'sample.length': expected 1 or 2 entries");
            length = {L[0], L.size() > 1 ? L[1] : 1.0};
        }
        s->finish();
    }

    json cases = json::array();
    bool all_pass = true;
    for (const Section& s : root.children("cases")) {
        IdentityCase c = read_identity_case(s);
        c.u = s.expr("u").jet();
        s.finish();
        const auto points = cylinder_points(c.dim, T, length, nt, nx);
        const PointwiseResidual r =
            hyper ? hyperbolic_identity_residual(c, points) : parabolic_identity_residual(c, points);
        const bool pass = r.max_abs <= tol;
        all_pass = all_pass && pass;
        cases.push_back({{"max_abs", r.max_abs}, {"max_scale", r.max_scale}, {"samples", r.samples}, {"pass", pass}});
    }
    json report = {{"equation", equation}, {"tolerance", tol}, {"cases", cases}};

    if (auto s = root.optional_child("stochastic")) {
        const Grid grid = build_grid(read_grid(s->child("grid")));
        const TimeGrid time = read_time(s->child("time"));
        const double k = s->number("k", 3.0);
        const BrownianEnsemble ens = sample_brownian(time, paths_of(root), run.seed);
        json rows = json::array();
        for (const Section& cs : s->children("cases")) {
            StochasticIdentityCase c;
            c.base = read_identity_case(cs);
            c.profile = cs.expr("profile").jet();
            c.drift = cs.number("drift", c.drift);
            c.sigma = cs.number("sigma", c.sigma);
            c.z0 = cs.number("z0", c.z0);
            c.y0 = cs.number("y0", c.y0);
            cs.finish();
            const StochasticResidual r = hyper ? hyperbolic_identity_residual(c, grid, ens)
                                               : parabolic_identity_residual(c, grid, ens);
            rows.push_back({{"lhs_mean", r.lhs_mean},
                            {"rhs_mean", r.rhs_mean},
                            {"gap_mean", r.gap_mean},
                            {"gap_stderr", r.gap_stderr},
                            {"within", r.within(k)}});
        }
        s->finish();
        report["stochastic"] = {{"paths", ens.paths()}, {"k", k}, {"cases", rows}};
    } else {
        paths_of(root);  // consumed so that --paths is accepted
    }
    root.finish();
    run.write_json("report.json", report);
    if (!all_pass) fail_numerical("identity residual above tolerance");
}

void carleman_check(const Section& root, Run& run) {
    require(!root.has("paths"), "carleman-check takes no paths");
    const Grid grid = build_grid(read_grid(root.child("grid")));
    const TensorField b = read_tensor(root, "b");
    const Point x0 = read_point(root, "x0", {-1.0, -1.0});
    const std::string mode_name = root.string("mode", "observability");
    CalibrationMode mode;
    if (mode_name == "observability") mode = CalibrationMode::observability;
    else if (mode_name == "source") mode = CalibrationMode::source;
    else fail("field 'mode': expected observability or source");

    CalibrationOptions opt;
    if (auto s = root.optional_child("calibration")) {
        opt.a_min = s->number("a_min", opt.a_min);
        opt.a_max = s->number("a_max", opt.a_max);
        opt.a_samples = s->integer("a_samples", opt.a_samples);
        opt.shift = s->number("shift", opt.shift);
        if (s->has("T")) opt.T = s->number("T");
        opt.T_margin = s->number("T_margin", opt.T_margin);
        s->finish();
    }
    json report;
    if (auto s = root.optional_child("weight")) report["weight"] = to_string(read_weight(*s).variant);
    root.finish();

    const PsiInfo psi = build_psi(grid, x0);
    const PseudoconvexityReport pc = check_pseudoconvexity(grid, b, psi.spec, run.seed);
    const Calibration cal = calibrate_hyperbolic(grid, b, psi.spec, mode, opt);
    json ineqs = json::array();
    for (const Inequality& q : cal.certificate)
        ineqs.push_back({{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"slack", q.slack()}});
    json gamma0 = json::array();
    for (int node : observation_boundary(grid, b, psi.spec)) gamma0.push_back(point_json(grid, node));

    report["pseudoconvexity"] = {{"ok", pc.ok}, {"mu0", pc.mu0}, {"min_grad", pc.min_grad}, {"message", pc.message}};
    report["mode"] = mode_name;
    report["ok"] = cal.ok;
    report["a"] = cal.a;
    report["shift"] = cal.shift;
    report["c0"] = cal.c0;
    report["c1"] = cal.c1;
    report["T"] = cal.T;
    report["mu0"] = cal.mu0;
    report["R0"] = cal.R0;
    report["R1"] = cal.R1;
    report["failure"] = cal.failure;
    report["inequalities"] = ineqs;
    report["observation_boundary"] = gamma0;
    run.write_json("certificate.json", report);
}

struct NoisyRun {
    double delta = 0.0, tau = 0.0;
    NoiseSpec noise;
};

NoisyRun read_noisy(const Section& root, NoiseShape default_shape) {
    NoisyRun r;
    r.delta = root.number("delta");
    require(r.delta >= 0.0, "field 'delta': must be nonnegative");
    r.tau = std::max(root.number("tau", r.delta * r.delta), kRegFloor);
    r.noise.shape = default_shape;
    if (auto s = root.optional_child("noise")) r.noise = read_noise(*s);
    return r;
}

void reconstruct_terminal(const Section& root, Run& run) {
    const Grid grid = build_grid(read_grid(root.child("grid")));
    const TimeGrid time = read_time(root.child("time"));
    const int paths = paths_of(root);
    const ParabolicExprs e = read_parabolic(root.child("coefficients"));
    require(e.y0.has_value(), "field 'coefficients.y0': missing");
    const NoisyRun nr = read_noisy(root, NoiseShape::white);
    const bool has_threshold = root.has("threshold");
    const double threshold = root.number("threshold", 0.0);
    root.finish();

    const ParabolicCoefficients c = sample_parabolic(e, grid, time);
    const BrownianEnsemble ens = sample_brownian(time, paths, run.seed);
    const Trajectory traj = solve_parabolic(c, ens, grid, Storage::terminal);
    const MeasurementRecord noisy = add_noise(measure_terminal(traj, grid), nr.delta, nr.noise, splitmix64(run.seed));

    TerminalProblem prob;
    prob.grid = grid;
    prob.coeffs = c;
    prob.ensemble = ens;
    for (int p = 0; p < paths; ++p) prob.data.push_back(noisy.values[p].col(0));
    prob.tau = nr.tau;
    const TerminalResult r = solve_terminal(prob);

    const Norms norms(grid);
    const Vec diff = r.y0 - c.y0;
    const double err = std::sqrt(norms.space_sq(diff, NormKind::L2_space));
    json report = {{"delta", nr.delta},
                   {"tau", nr.tau},
                   {"error_l2", err},
                   {"error_h1", std::sqrt(norms.space_sq(diff, NormKind::H1_space))},
                   {"truth_l2", std::sqrt(norms.space_sq(c.y0, NormKind::L2_space))},
                   {"solver", info_json(r.info)}};
    if (has_threshold) {
        report["threshold"] = threshold;
        report["within_threshold"] = err <= threshold;
    }
    auto f = run.open("reconstruction.csv");
    f << (grid.dim == 2 ? "x,y,truth,estimate\n" : "x,truth,estimate\n");
    for (int node = 0; node < grid.size(); ++node) {
        const Point x = grid.point(node);
        f << x[0] << ",";
        if (grid.dim == 2) f << x[1] << ",";
        f << c.y0[node] << "," << r.y0[node] << "\n";
    }
    run.write_json("report.json", report);
}

void reconstruct_cauchy(const Section& root, Run& run) {
    const GridSpec spec = read_grid(root.child("grid"));
    require(!spec.gamma0.empty(), "field 'grid.gamma0': required for Cauchy data");
    const Grid grid = build_grid(spec);
    const TimeGrid time = read_time(root.child("time"));
    const int paths = paths_of(root);
    const ParabolicExprs e = read_parabolic(root.child("coefficients"));
    require(!e.g, "field 'coefficients.g': not supported by the Cauchy problem");
    const NoisyRun nr = read_noisy(root, NoiseShape::single_mode);
    const double margin = root.number("margin", time.T / 8.0);
    require(margin >= 0.0 && 2.0 * margin < time.T, "field 'margin': must lie in [0, T/2)");
    root.finish();

    const ParabolicCoefficients c = sample_parabolic(e, grid, time);
    const BrownianEnsemble ens = sample_brownian(time, paths, run.seed);
    const Trajectory traj = solve_parabolic(c, ens, grid);
    const MeasurementRecord noisy =
        add_noise(measure_boundary(traj, grid, grid.gamma0), nr.delta, nr.noise, splitmix64(run.seed));

    CauchyProblem prob;
    prob.grid = grid;
    prob.b = c.b;
    prob.a1 = c.b1;
    prob.a2 = c.b2;
    prob.a3 = c.b3;
    prob.ensemble = ens;
    prob.f = c.f;
    prob.g1 = noisy.values;
    prob.g2 = noisy.normal;
    prob.tau = nr.tau;
    const CauchyResult r = solve_cauchy_parabolic(prob);

    const Norms norms(grid);
    std::vector<double> full(paths), window(paths);
    auto f = run.open("errors.csv");
    f << "path,error,window_error\n";
    for (int p = 0; p < paths; ++p) {
        const Mat err = r.u[p] - traj.y[p];
        full[p] = norms.space_time_sq(err, time, NormKind::L2_time_H1_space);
        window[p] = window_h1_sq(norms, time, err, margin, time.T - margin);
        f << p << "," << std::sqrt(full[p]) << "," << std::sqrt(window[p]) << "\n";
    }
    run.write_json("report.json", {{"delta", nr.delta},
                                   {"tau", nr.tau},
                                   {"margin", margin},
                                   {"error", std::sqrt(mean_sq(full))},
                                   {"window_error", std::sqrt(mean_sq(window))},
                                   {"solver", info_json(r.info)}});
}

void reconstruct_hyperbolic(const Section& root, Run& run) {
    const GridSpec spec = read_grid(root.child("grid"));
    require(!spec.gamma0.empty(), "field 'grid.gamma0': required for Neumann data");
    const Grid grid = build_grid(spec);
    const TimeGrid time = read_time(root.child("time"));
    const int paths = paths_of(root);
    const HyperbolicExprs e = read_hyperbolic(root.child("coefficients"));
    require(!e.g, "field 'coefficients.g': not supported by the Cauchy problem");
    const NoisyRun nr = read_noisy(root, NoiseShape::single_mode);
    root.finish();

    const HyperbolicCoefficients c = sample_hyperbolic(e, grid, time);
    const BrownianEnsemble ens = sample_brownian(time, paths, run.seed);
    const Trajectory traj = solve_hyperbolic(c, ens, grid);
    MeasurementRecord h = measure_boundary(traj, grid, grid.gamma0);
    h.values = h.normal;
    h.normal.clear();
    const MeasurementRecord noisy = add_noise(h, nr.delta, nr.noise, splitmix64(run.seed));

    HyperbolicCauchyProblem prob;
    prob.grid = grid;
    prob.coeffs = c;
    prob.ensemble = ens;
    prob.f = c.f;
    prob.h = noisy.values;
    prob.gamma = nr.tau;
    const CauchyResult r = solve_cauchy_hyperbolic(prob);

    const Norms norms(grid);
    const CauchyMap map = CauchyMap::hyperbolic(grid, time, c);
    const Vec tw = time_weights(time);
    std::vector<double> energy(paths), reg(paths);
    auto f = run.open("errors.csv");
    f << "path,energy_error,reg_error\n";
    for (int p = 0; p < paths; ++p) {
        const Mat err = r.u[p] - traj.y[p];
        double en = 0.0;
        for (int k = 0; k <= time.steps; ++k) {
            en += tw[k] * norms.space_sq(err.col(k), NormKind::H1_space);
            if (k < time.steps)
                en += time.dt() * norms.space_sq((err.col(k + 1) - err.col(k)) / time.dt(), NormKind::L2_space);
        }
        energy[p] = en;
        reg[p] = map.reg(map.to_slice(err));
        f << p << "," << std::sqrt(en) << "," << std::sqrt(reg[p]) << "\n";
    }
    run.write_json("report.json", {{"delta", nr.delta},
                                   {"gamma", nr.tau},
                                   {"energy_error", std::sqrt(mean_sq(energy))},
                                   {"reg_error", std::sqrt(mean_sq(reg))},
                                   {"solver", info_json(r.info)}});
}

void stability_sweep(const Section& root, Run& run) {
    const std::string kind = root.string("kind");
    if (kind == "backward") {
        BackwardSweepConfig c;
        c.grid = read_grid(root.child("grid"));
        const ParabolicExprs e = read_parabolic(root.child("coefficients"));
        c.coeffs = fields_of(e);
        if (e.y0) c.y0 = e.y0->at_time(0.0);
        c.T = root.number("T", c.T);
        c.steps = root.integer("steps", c.steps);
        c.t0 = root.number("t0", 0.5 * c.T);
        if (root.has("modes")) c.modes = root.integers("modes");
        c.paths = paths_of(root);
        c.seed = run.seed;
        c.epsilon = root.number("epsilon", c.epsilon);
        c.eta_norm = read_norm("eta_norm", root.string("eta_norm", "H1"));
        c.E_norm = read_norm("E_norm", root.string("E_norm", "L2"));
        c.prior_norm = read_norm("prior_norm", root.string("prior_norm", "L2"));
        c.common_random_numbers = root.boolean("common_random_numbers", true);
        root.finish();

        const auto samples = backward_stability_sweep(c);
        auto f = run.open("samples.csv");
        write_samples_csv(f, samples);
        double M = 0.0;
        for (const auto& s : samples) M = std::max(M, s.prior);
        const LogStabilityReport ls = log_stability_check(samples, M, c.t0, c.T);
        json report = {{"kind", kind},
                       {"samples", samples.size()},
                       {"log_stability", {{"gamma", ls.gamma}, {"C", ls.C}, {"finite", ls.finite}, {"binding", ls.binding}, {"M", M}}}};
        try {
            report["holder_fit"] = fit_json(fit_holder(samples));
        } catch (const Error& err) {
            report["holder_fit"] = err.what();
        }
        run.write_json("report.json", report);
    } else if (kind == "rate") {
        RateSweepConfig c;
        const std::string problem = root.string("problem");
        if (problem == "terminal") c.problem = RateProblem::terminal;
        else if (problem == "parabolic_cauchy") c.problem = RateProblem::parabolic_cauchy;
        else if (problem == "hyperbolic_cauchy") c.problem = RateProblem::hyperbolic_cauchy;
        else fail("field 'problem': expected terminal, parabolic_cauchy or hyperbolic_cauchy");
        c.nodes = root.integer("nodes", c.nodes);
        c.steps = root.integer("steps", c.steps);
        c.paths = paths_of(root);
        c.seeds = root.integer("seeds", c.seeds);
        c.T = root.number("T", c.T);
        if (root.has("deltas")) c.deltas = root.numbers("deltas");
        c.seed = run.seed;
        if (auto s = root.optional_child("noise")) c.noise = read_noise(*s);
        c.t0 = root.number("t0", c.t0);
        c.margin = root.number("margin", c.margin);
        if (auto s = root.optional_child("inner")) c.inner = read_box(*s);
        root.finish();

        const RateSweep s = reconstruction_rate_sweep(c);
        auto f = run.open("rate.csv");
        write_rate_csv(f, s);
        run.write_json("report.json", {{"kind", kind},
                                       {"problem", problem},
                                       {"error_norm", s.error_norm},
                                       {"secondary_norm", s.secondary_norm},
                                       {"deltas", s.deltas},
                                       {"mean_error", s.mean_error},
                                       {"mean_secondary", s.mean_secondary},
                                       {"fit", fit_json(s.fit)},
                                       {"secondary_fit", fit_json(s.secondary_fit)},
                                       {"monotone", s.monotone}});
    } else {
        fail("field 'kind': expected backward or rate");
    }
}

void observability_sweep(const Section& root, Run& run) {
    const std::string kind = root.string("kind");
    if (kind == "internal") {
        InternalObservabilityConfig c;
        c.grid = read_grid(root.child("grid"));
        c.coeffs = fields_of(read_parabolic(root.child("coefficients")));
        c.T = root.number("T", c.T);
        c.steps = root.integer("steps", c.steps);
        if (root.has("times")) c.times = root.numbers("times");
        c.samples = root.integer("samples", c.samples);
        c.paths = paths_of(root);
        c.modes = root.integer("modes", c.modes);
        c.seed = run.seed;
        root.finish();
        const auto rows = internal_observability_sweep(c);
        auto f = run.open("ratios.csv");
        write_ratios_csv(f, rows);
        json ratios = json::array();
        for (const RatioRow& r : rows) ratios.push_back({{"t", r.t}, {"max_ratio", r.max_ratio}});
        run.write_json("report.json", {{"kind", kind}, {"ratios", ratios}});
    } else if (kind == "boundary") {
        BoundaryObservabilityConfig c;
        c.grid = read_grid(root.child("grid"));
        const HyperbolicExprs e = read_hyperbolic(root.child("coefficients"));
        c.coeffs = fields_of(e);
        c.x0 = read_point(root, "x0", c.x0);
        if (root.has("T")) c.T = root.number("T");
        c.cfl = root.number("cfl", c.cfl);
        c.samples = root.integer("samples", c.samples);
        c.paths = paths_of(root);
        c.modes = root.integer("modes", c.modes);
        c.source = root.number("source", c.source);
        c.seed = run.seed;
        const bool calibrate = root.boolean("calibrate", true);
        root.finish();
        json report = {{"kind", kind}};
        if (calibrate) {
            TensorField b = TensorField::scalar(1.0);
            if (e.b) {
                b.b11 = e.b->jet();
                b.b22 = e.b->jet();
            }
            const Grid g = build_grid(c.grid);
            c.calibration = calibrate_hyperbolic(g, b, build_psi(g, c.x0).spec, CalibrationMode::observability);
            report["calibration"] = {{"ok", c.calibration->ok}, {"T", c.calibration->T}, {"R1", c.calibration->R1},
                                     {"failure", c.calibration->failure}};
        }
        const RatioRow r = boundary_observability_sweep(c);
        auto f = run.open("ratios.csv");
        write_ratios_csv(f, {r});
        report["horizon"] = r.t;
        report["max_ratio"] = r.max_ratio;
        report["samples"] = r.samples;
        run.write_json("report.json", report);
    } else {
        fail("field 'kind': expected internal or boundary");
    }
}

using Handler = void (*)(const Section&, Run&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> h{
        {"simulate", simulate},
        {"identity-check", identity_check},
        {"carleman-check", carleman_check},
        {"reconstruct-terminal", reconstruct_terminal},
        {"reconstruct-cauchy", reconstruct_cauchy},
        {"reconstruct-hyperbolic", reconstruct_hyperbolic},
        {"stability-sweep", stability_sweep},
        {"observability-sweep", observability_sweep},
    };
    return h;
}

// The manifest keeps one entry per subcommand; rerunning a command replaces
// its entry so repeated runs leave identical files.
void write_manifest(const Run& run, const json& config) {
    const fs::path path = run.out / "manifest.json";
    json manifest = {{"runs", json::object()}};
    if (fs::exists(path)) {
        std::ifstream in(path);
        json old = json::parse(in, nullptr, false);
        if (!old.is_discarded() && old.contains("runs") && old["runs"].is_object()) manifest = old;
    }
    manifest["runs"][run.command] = {
        {"config_hash", hex(config_hash(config))}, {"seed", run.seed}, {"files", run.files}, {"config", config}};
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << "\n";
}

int run_command(const std::string& command, Handler handler, int argc, char** argv) {
    CLI::App app{"spde_lab " + command};
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--paths", paths, "ensemble size (overrides the config)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) fail("cannot read config " + config_path);
        std::stringstream text;
        text << in.rdbuf();
        json config = parse_config(text.str());
        require(config.is_object(), "config: expected a JSON object");
        if (seed) config["seed"] = *seed;
        if (paths) config["paths"] = *paths;
        if (!out_dir.empty()) config["out"] = out_dir;

        const Section root(config, "");
        if (!root.has("seed")) fail("seed required");
        Run run;
        run.command = command;
        run.seed = root.unsigned_integer("seed");
        run.out = root.string("out", ".");
        // The output directory is not part of the experiment.
        json hashed = config;
        hashed.erase("out");
        fs::create_directories(run.out);
        handler(root, run);
        write_manifest(run, hashed);
        return 0;
    } catch (const Error& e) {
        std::cerr << "spde_lab " << command << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::validation ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "spde_lab " << command << ": " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << kUsage;
        return 1;
    }
    const std::string command = argv[1];
    for (const auto& [name, handler] : handlers())
        if (name == command) return run_command(command, handler, argc - 1, argv + 1);
    std::cerr << "unknown subcommand '" << command << "'\n" << kUsage;
    return 1;
}
