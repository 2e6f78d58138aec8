#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spdelab/error.hpp"
#include "spdelab/hyperbolic.hpp"
#include "spdelab/parabolic.hpp"
#include "spdelab/stats.hpp"

using namespace spde;

namespace {

constexpr double pi = std::numbers::pi;

Grid line(int n) {
    GridSpec s;
    s.nodes = {n, 1};
    return build_grid(s);
}

Vec sine(const Grid& g, int k = 1) {
    return sample(g, [k](const Point& x) { return std::sin(k * pi * x[0]); });
}

ParabolicCoefficients heat(const Grid& g) {
    ParabolicCoefficients c;
    c.b = Tensor::scalar(g, 1.0);
    c.y0 = sine(g);
    return c;
}

HyperbolicCoefficients wave(const Grid& g) {
    HyperbolicCoefficients c;
    c.b = Tensor::scalar(g, 1.0);
    c.z0 = sine(g);
    c.z1 = Vec::Zero(g.size());
    return c;
}

double l2(const Grid& g, const Vec& u) { return std::sqrt(u.dot(mass_weights(g).cwiseProduct(u))); }

}  // namespace

TEST(Parabolic, ZeroDataGivesZero) {
    const Grid g = line(11);
    ParabolicCoefficients c = heat(g);
    c.y0.setZero();
    c.b2 = Vec::Constant(11, 0.7);
    c.b3 = Vec::Constant(11, 0.4);
    const auto traj = solve_parabolic(c, sample_brownian(TimeGrid(1.0, 10), 3, 1), g);
    for (const Mat& y : traj.y) EXPECT_EQ(y.norm(), 0.0);
}

TEST(Parabolic, HeatModeConvergesInSpace) {
    std::vector<double> hs, errs;
    for (int n : {11, 21, 41}) {
        const Grid g = line(n);
        const TimeGrid tg(0.1, 4000);
        const auto traj = solve_parabolic(heat(g), sample_brownian(tg, 1, 1), g, Storage::terminal);
        errs.push_back(l2(g, traj.terminal(0) - std::exp(-pi * pi * 0.1) * sine(g)));
        hs.push_back(g.h[0]);
    }
    EXPECT_GE(fit_loglog(hs, errs).slope, 1.8);
}

TEST(Parabolic, GeometricBrownianModeStrongOrder) {
    const Grid g = line(41);
    const double sigma = 0.5, T = 0.25;
    ParabolicCoefficients c = heat(g);
    c.b3 = Vec::Constant(g.size(), sigma);
    const auto fine = sample_brownian(TimeGrid(T, 64), 400, 3);
    std::vector<double> dts, errs;
    for (int f : {4, 2, 1}) {
        const auto ens = fine.coarsen(f);
        const auto traj = solve_parabolic(c, ens, g, Storage::terminal);
        errs.push_back(strong_error(traj, g, [&](int p) {
            const double W = ens.path(p)[ens.time().steps];
            return Vec(sine(g) * std::exp((-pi * pi - sigma * sigma / 2) * T + sigma * W));
        }));
        dts.push_back(ens.time().dt());
    }
    EXPECT_GE(fit_loglog(dts, errs).slope, 0.45);
}

TEST(Parabolic, LinearityCausalityAndZeroNoise) {
    const Grid g = line(15);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    ParabolicCoefficients c = heat(g);
    c.b1[0] = Vec::Constant(g.size(), 0.3);
    c.b2 = Vec::Constant(g.size(), -0.2);
    c.b3 = Vec::Constant(g.size(), 0.5);
    Vec u(g.size()), v(g.size());
    for (int i = 0; i < g.size(); ++i) {
        u[i] = g.on_boundary[i] ? 0.0 : n01(rng);
        v[i] = g.on_boundary[i] ? 0.0 : n01(rng);
    }
    const auto ens = sample_brownian(TimeGrid(0.5, 20), 3, 8);
    c.y0 = u;
    const auto tu = solve_parabolic(c, ens, g);
    c.y0 = v;
    const auto tv = solve_parabolic(c, ens, g);
    c.y0 = 2.0 * u - 3.0 * v;
    const auto tw = solve_parabolic(c, ens, g);
    for (int p = 0; p < 3; ++p) {
        EXPECT_LE((tw.y[p] - 2.0 * tu.y[p] + 3.0 * tv.y[p]).cwiseAbs().maxCoeff(), 1e-12);
        for (int k = 0; k <= 20; ++k) {
            EXPECT_EQ(tw.y[p](0, k), 0.0);
            EXPECT_EQ(tw.y[p](14, k), 0.0);
        }
    }

    Mat dW = ens.materialize();
    dW.bottomRows(5).setRandom();
    const auto perturbed = solve_parabolic(c, BrownianEnsemble(ens.time(), dW), g);
    for (int p = 0; p < 3; ++p)
        EXPECT_TRUE((perturbed.y[p].leftCols(16).array() == tw.y[p].leftCols(16).array()).all());

    c.b3.resize(0);
    const auto quiet = solve_parabolic(c, ens, g);
    EXPECT_TRUE((quiet.y[0].array() == quiet.y[2].array()).all());
}

TEST(Parabolic, EllipticityAndBlowUp) {
    const Grid g = line(9);
    ParabolicCoefficients c = heat(g);
    c.b.b11[3] = -1.0;
    try {
        solve_parabolic(c, sample_brownian(TimeGrid(1.0, 4), 1, 1), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "ellipticity violated");
    }
    c = heat(g);
    c.b2 = Vec::Constant(g.size(), 1e300);
    try {
        solve_parabolic(c, sample_brownian(TimeGrid(1.0, 40), 1, 1), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
}

TEST(Parabolic, NonlinearCallbacksMatchLinearTerms) {
    const Grid g = line(17);
    const auto ens = sample_brownian(TimeGrid(0.5, 25), 2, 5);
    ParabolicCoefficients lin = heat(g);
    lin.b2 = Vec::Constant(g.size(), 0.8);
    lin.b3 = Vec::Constant(g.size(), 0.3);
    ParabolicCoefficients nl = heat(g);
    nl.F = [](double, const Point&, double y, const Point&) { return 0.8 * y; };
    nl.K = [](double, const Point&, double y) { return 0.3 * y; };
    const auto a = solve_parabolic(lin, ens, g), b = solve_parabolic(nl, ens, g);
    for (int p = 0; p < 2; ++p) EXPECT_LE((a.y[p] - b.y[p]).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Hyperbolic, StandingWaveSecondOrder) {
    std::vector<double> hs, errs;
    for (int n : {17, 33, 65}) {
        const Grid g = line(n);
        const TimeGrid tg(1.0, 2 * (n - 1));
        const auto traj = solve_hyperbolic(wave(g), sample_brownian(tg, 1, 1), g);
        double worst = 0.0;
        for (int k = 0; k <= tg.steps; ++k)
            worst = std::max(worst, l2(g, traj.at(0, k) - std::cos(pi * tg.t(k)) * sine(g)));
        hs.push_back(g.h[0]);
        errs.push_back(worst);
    }
    EXPECT_GE(fit_loglog(hs, errs).slope, 1.8);
}

TEST(Hyperbolic, CflEnforced) {
    const Grid g = line(11);
    try {
        solve_hyperbolic(wave(g), sample_brownian(TimeGrid(1.0, 5), 1, 1), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "unstable step size");
    }
}

TEST(Hyperbolic, ZeroDataAndZeroNoise) {
    const Grid g = line(11);
    HyperbolicCoefficients c = wave(g);
    c.z0.setZero();
    c.b4 = Vec::Constant(g.size(), 0.3);
    const auto ens = sample_brownian(TimeGrid(1.0, 20), 2, 1);
    for (const Mat& y : solve_hyperbolic(c, ens, g).y) EXPECT_EQ(y.norm(), 0.0);
    c = wave(g);
    c.b3 = Vec::Constant(g.size(), 0.2);
    const auto t = solve_hyperbolic(c, ens, g);
    EXPECT_TRUE((t.y[0].array() == t.y[1].array()).all());
}

TEST(Hyperbolic, NoisySelfConvergence) {
    const Grid g = line(17);
    HyperbolicCoefficients c = wave(g);
    c.b4 = Vec::Constant(g.size(), 1.0);
    const auto fine = sample_brownian(TimeGrid(1.0, 256), 200, 12);
    const auto ref = solve_hyperbolic(c, fine, g, Storage::terminal);
    std::vector<double> dts, errs;
    for (int f : {16, 8}) {
        const auto ens = fine.coarsen(f);
        const auto traj = solve_hyperbolic(c, ens, g, Storage::terminal);
        dts.push_back(ens.time().dt());
        errs.push_back(strong_error(traj, g, ref, g));
    }
    EXPECT_GE(errs[0] / errs[1], std::sqrt(2.0) * 0.8);
}

TEST(Hyperbolic, EnergyConservedWithoutLowerOrder) {
    const Grid g = line(33);
    const TimeGrid tg(2.0, 128);
    const auto traj = solve_hyperbolic(wave(g), sample_brownian(tg, 1, 1), g);
    const double e1 = expected_energy(traj, g, 1);
    for (int k = 2; k <= tg.steps; ++k) EXPECT_NEAR(expected_energy(traj, g, k), e1, 1e-12 * e1);
    const auto rep = check_energy_estimate(traj, wave(g), g, 0.0, 2.0, 1.0);
    EXPECT_TRUE(rep.pass);
    const double drift = expected_energy(traj, g, tg.steps) / expected_energy(traj, g, 0);
    EXPECT_LE(drift, 1.0 + 10.0 * tg.dt());
}

TEST(Hyperbolic, EnergyEstimateRandomCoefficients) {
    const Grid g = line(21);
    const TimeGrid tg(1.0, 40);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int draw = 0; draw < 50; ++draw) {
        HyperbolicCoefficients c = wave(g);
        c.b1 = Vec::Constant(g.size(), u(rng));
        c.b2[0] = Vec::Constant(g.size(), u(rng));
        c.b3 = Vec::Constant(g.size(), u(rng));
        c.b4 = Vec::Constant(g.size(), u(rng));
        const auto traj = solve_hyperbolic(c, sample_brownian(tg, 20, draw), g);
        const auto rep = check_energy_estimate(traj, c, g, 0.0, 1.0, 10.0);
        EXPECT_TRUE(rep.pass) << "draw " << draw << " rho " << rep.rho;
    }
    HyperbolicCoefficients zero = wave(g);
    zero.z0.setZero();
    const auto traj = solve_hyperbolic(zero, sample_brownian(tg, 2, 1), g);
    EXPECT_TRUE(check_energy_estimate(traj, zero, g, 0.0, 1.0, 1.0).vacuous);
}

TEST(Hyperbolic, NeumannTraceOfSine) {
    const Grid g = line(201);
    Trajectory t;
    t.time = TimeGrid(1.0, 1);
    t.stored = {0};
    t.y = {Mat(sine(g))};
    const auto tr = neumann_trace(t, g, {0, 200});
    EXPECT_NEAR(tr[0](0, 0), -pi, 1e-3);
    EXPECT_NEAR(tr[0](1, 0), -pi, 1e-3);
    t.y = {Mat::Zero(g.size(), 1)};
    EXPECT_EQ(neumann_trace(t, g, {200})[0].norm(), 0.0);
    EXPECT_THROW(neumann_trace(t, g, {}), Error);
}

TEST(Hyperbolic, StrongErrorAgainstItself) {
    const Grid g = line(11);
    const auto traj = solve_hyperbolic(wave(g), sample_brownian(TimeGrid(1.0, 20), 2, 1), g);
    EXPECT_EQ(strong_error(traj, g, traj, g), 0.0);
}
