#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "spdelab/error.hpp"
#include "spdelab/stability.hpp"

using namespace spde;

namespace {

constexpr double pi = std::numbers::pi;

BackwardSweepConfig heat_sweep() {
    BackwardSweepConfig c;
    c.grid.nodes = {41, 1};
    c.T = 0.1;
    c.steps = 200;
    c.t0 = 0.05;
    c.y0 = [](const Point& x) { return std::sin(pi * x[0]); };
    return c;
}

std::vector<StabilitySample> planted(double gamma, double logC) {
    std::vector<StabilitySample> s;
    for (double eta : {1e-4, 1e-3, 1e-2, 1e-1}) {
        StabilitySample x;
        x.eta = eta;
        x.E = std::exp(logC) * std::pow(eta, gamma);
        s.push_back(x);
    }
    return s;
}

}  // namespace

TEST(Stability, FitHolderRecoversPlantedExponent) {
    const RateFit f = fit_holder(planted(0.5, 0.0));
    EXPECT_NEAR(f.slope, 0.5, 1e-12);
    EXPECT_NEAR(f.log_constant, 0.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    const RateFit g = fit_holder(planted(0.3, 1.7));
    EXPECT_NEAR(g.slope, 0.3, 1e-12);
    EXPECT_NEAR(g.log_constant, 1.7, 1e-12);

    auto one = planted(0.5, 0.0);
    one.resize(1);
    EXPECT_THROW(fit_holder(one), Error);
    std::vector<StabilitySample> narrow = planted(0.5, 0.0);
    for (auto& s : narrow) s.eta = 1.0 + 0.01 * s.eta;
    EXPECT_THROW(fit_holder(narrow), Error);
    // Zero samples are excluded rather than fitted.
    auto with_zero = planted(0.5, 0.0);
    with_zero.push_back({});
    EXPECT_NEAR(fit_holder(with_zero).slope, 0.5, 1e-12);
}

TEST(Stability, BackwardSweepDeterministic) {
    const auto samples = backward_stability_sweep(heat_sweep());
    ASSERT_EQ(samples.size(), 5u);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        EXPECT_LT(samples[i].eta, samples[i - 1].eta);
        EXPECT_GT(samples[i].E / samples[i].eta, samples[i - 1].E / samples[i - 1].eta);
    }
    const RateFit f = fit_holder(samples);
    EXPECT_GT(f.slope, 0.0);
    EXPECT_LT(f.slope, 1.0);
    EXPECT_GE(f.r2, 0.9);

    // Modes 1 and 3 of the discrete heat semigroup: the eta ratio follows the eigenvalues.
    BackwardSweepConfig c = heat_sweep();
    c.y0 = {};
    c.modes = {1, 3};
    c.eta_norm = NormKind::L2_space;
    const auto two = backward_stability_sweep(c);
    const double dt = c.T / c.steps, h = 1.0 / 40.0;
    auto factor = [&](int k) {
        const double lam = 4.0 / (h * h) * std::pow(std::sin(k * pi * h / 2.0), 2);
        return std::pow(1.0 / (1.0 + dt * lam), c.steps);
    };
    EXPECT_NEAR(two[1].eta / two[0].eta, factor(3) / factor(1), 1e-8 * factor(3) / factor(1));
}

TEST(Stability, NoisySweepAndScaling) {
    BackwardSweepConfig c = heat_sweep();
    c.coeffs.noise = [](const Point&) { return 0.3; };
    c.paths = 200;
    c.modes = {1, 2, 3, 4};
    const auto s = backward_stability_sweep(c);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i].eta, s[i - 1].eta);

    // Scaling the paired data leaves E / eta and the fitted exponent unchanged.
    BackwardSweepConfig big = c;
    big.epsilon = 7.5;
    big.y0 = [](const Point& x) { return 7.5 * std::sin(pi * x[0]); };
    const auto t = backward_stability_sweep(big);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(t[i].E / t[i].eta, s[i].E / s[i].eta, 1e-10 * s[i].E / s[i].eta);

    // Identical data gives zero discrepancies.
    BackwardSweepConfig tiny = heat_sweep();
    tiny.modes = {1};
    tiny.epsilon = 1e-300;
    const auto z = backward_stability_sweep(tiny);
    EXPECT_EQ(z[0].E, 0.0);
    EXPECT_EQ(z[0].eta, 0.0);

    BackwardSweepConfig bad = heat_sweep();
    bad.t0 = bad.T;
    EXPECT_THROW(backward_stability_sweep(bad), Error);
}

TEST(Stability, CommonRandomNumbersReduceVariance) {
    BackwardSweepConfig c = heat_sweep();
    c.coeffs.noise = [](const Point&) { return 0.5; };
    c.paths = 50;
    c.modes = {2};
    c.epsilon = 0.1;
    std::vector<double> crn, indep;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        c.seed = seed;
        c.common_random_numbers = true;
        crn.push_back(backward_stability_sweep(c)[0].E);
        c.common_random_numbers = false;
        indep.push_back(backward_stability_sweep(c)[0].E);
    }
    auto var = [](const std::vector<double>& x) {
        const MeanError m = mean_and_stderr(x);
        return m.stderr_ * m.stderr_ * x.size();
    };
    EXPECT_GE(var(indep), var(crn));
}

TEST(Stability, LogStability) {
    EXPECT_NEAR(log_stability_gamma(0.5, 1.0), std::log(1.5) / std::log(2.0), 1e-15);
    EXPECT_NEAR(log_stability_gamma(0.5, 1.0), 0.585, 1e-3);
    EXPECT_THROW(log_stability_gamma(1.0, 1.0), Error);

    std::vector<StabilitySample> zeros(3);
    const LogStabilityReport z = log_stability_check(zeros, 1.0, 0.5, 1.0);
    EXPECT_EQ(z.C, 1.0);
    EXPECT_EQ(z.binding, -1);

    // C is the smallest grid value covering the worst sample.
    StabilitySample s;
    s.eta = 0.01;
    s.E = 3.0;
    const LogStabilityReport r = log_stability_check({s}, 1.0, 0.5, 1.0);
    const double beta1 = 0.01 + std::exp(-std::pow(3.0, -r.gamma) * std::pow(std::log(100.0), r.gamma));
    EXPECT_GE(r.C * beta1, 9.0);
    EXPECT_LT(r.C / std::pow(10.0, 0.05) * beta1, 9.0);
    EXPECT_EQ(r.binding, 0);

    BackwardSweepConfig c = heat_sweep();
    c.eta_norm = NormKind::L2_space;
    c.E_norm = NormKind::H1_space;
    c.prior_norm = NormKind::H1_space;
    c.coeffs.noise = [](const Point&) { return 0.3; };
    c.paths = 100;
    const auto a = backward_stability_sweep(c);
    c.paths = 200;
    const auto b = backward_stability_sweep(c);
    const LogStabilityReport ra = log_stability_check(a, a[0].prior, c.t0, c.T);
    const LogStabilityReport rb = log_stability_check(b, b[0].prior, c.t0, c.T);
    ASSERT_TRUE(ra.finite && rb.finite);
    EXPECT_LE(std::max(ra.C, rb.C) / std::min(ra.C, rb.C), 2.0);
}

TEST(Stability, InternalObservability) {
    InternalObservabilityConfig c;
    c.grid.g0 = {{{0.3, 0.0}, {0.6, 0.0}}};
    c.coeffs.noise = [](const Point&) { return 0.2; };
    std::vector<std::vector<RatioRow>> runs;
    for (int n : {17, 33, 65}) {
        c.grid.nodes = {n, 1};
        runs.push_back(internal_observability_sweep(c));
    }
    for (const auto& rows : runs) {
        for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].max_ratio, rows[i - 1].max_ratio);
        for (const auto& r : rows) {
            EXPECT_TRUE(std::isfinite(r.max_ratio));
            EXPECT_GT(r.max_ratio, 0.0);
        }
    }
    for (std::size_t i = 0; i < runs[0].size(); ++i) {
        double lo = 1e300, hi = 0.0;
        for (const auto& rows : runs) {
            lo = std::min(lo, rows[i].max_ratio);
            hi = std::max(hi, rows[i].max_ratio);
        }
        EXPECT_LE(hi / lo, 2.0);
    }
    c.grid.g0.clear();
    EXPECT_THROW(internal_observability_sweep(c), Error);
}

TEST(Stability, BoundaryObservability) {
    BoundaryObservabilityConfig c;
    c.grid.nodes = {17, 1};
    c.x0 = {-1.0, 0.0};
    c.coeffs.noise = [](const Point&) { return 0.2; };
    try {
        boundary_observability_sweep(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "conditions not certified");
    }
    const Grid g = build_grid(c.grid);
    c.calibration = calibrate_hyperbolic(g, TensorField::scalar(1.0), build_psi(g, c.x0).spec, CalibrationMode::observability);
    ASSERT_TRUE(c.calibration->ok);
    std::vector<double> ratios;
    for (int n : {17, 33, 65}) {
        c.grid.nodes = {n, 1};
        const RatioRow r = boundary_observability_sweep(c);
        EXPECT_EQ(r.samples, c.samples);
        ratios.push_back(r.max_ratio);
    }
    EXPECT_LE(*std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end()), 2.0);
}

TEST(Stability, RateSweepSmall) {
    RateSweepConfig c;
    c.nodes = 16;
    c.steps = 32;
    c.paths = 4;
    c.seeds = 2;
    c.deltas = {0.2, 0.05, 0.0};
    for (RateProblem p : {RateProblem::terminal, RateProblem::parabolic_cauchy, RateProblem::hyperbolic_cauchy}) {
        c.problem = p;
        const RateSweep s = reconstruction_rate_sweep(c);
        ASSERT_EQ(s.rows.size(), 6u);
        EXPECT_EQ(s.deltas, (std::vector<double>{0.2, 0.05, 0.0}));
        EXPECT_EQ(s.fit.samples, 2);
        EXPECT_LT(s.mean_error[1], s.mean_error[0]);
        // The noiseless point has the smallest error whenever its solve at the
        // regularization floor converges; the sideways heat problem does not.
        const bool floor_converged = s.rows[4].converged && s.rows[5].converged;
        if (p != RateProblem::parabolic_cauchy) EXPECT_TRUE(floor_converged);
        if (floor_converged) EXPECT_LE(s.mean_error[2], s.mean_error[1]);
        std::ostringstream a, b;
        write_rate_csv(a, s);
        write_rate_csv(b, reconstruction_rate_sweep(c));
        EXPECT_EQ(a.str(), b.str());
    }
    c.deltas = {1.0};
    EXPECT_THROW(reconstruction_rate_sweep(c), Error);
}
