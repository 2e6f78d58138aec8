#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spdelab/error.hpp"
#include "spdelab/measurements.hpp"
#include "spdelab/norms.hpp"
#include "spdelab/parabolic.hpp"

using namespace spde;

namespace {

constexpr double pi = std::numbers::pi;

Grid line(int n) {
    GridSpec s;
    s.nodes = {n, 1};
    s.gamma0 = {{0, 1}};
    s.g0 = {{{0.2, 0.0}, {0.6, 0.0}}};
    return build_grid(s);
}

Trajectory heat_run(const Grid& g, const Vec& y0, int paths = 3) {
    ParabolicCoefficients c;
    c.b = Tensor::scalar(g, 1.0);
    c.b3 = Vec::Constant(g.size(), 0.3);
    c.y0 = y0;
    return solve_parabolic(c, sample_brownian(TimeGrid(0.1, 20), paths, 5), g);
}

Vec sine(const Grid& g) {
    return sample(g, [](const Point& x) { return std::sin(pi * x[0]); });
}

// Constant-in-space field stored as a trajectory (not a PDE solution).
Trajectory constant_field(const Grid& g, double value) {
    Trajectory t;
    t.time = TimeGrid(1.0, 4);
    t.stored = storage_indices(t.time, Storage::full);
    t.y.assign(2, Mat::Constant(g.size(), 5, value));
    return t;
}

}  // namespace

TEST(Measurements, ZeroTrajectoryGivesZeroRecords) {
    const Grid g = line(11);
    const Trajectory t = heat_run(g, Vec::Zero(11));
    EXPECT_EQ(record_norm(measure_internal(t, g, g.g0)), 0.0);
    EXPECT_EQ(record_norm(measure_terminal(t, g)), 0.0);
    EXPECT_EQ(record_norm(measure_boundary(t, g, g.gamma0)), 0.0);
}

TEST(Measurements, InternalRestriction) {
    const Grid g = line(11);
    const Trajectory t = heat_run(g, sine(g));
    const MeasurementRecord r = measure_internal(t, g, g.g0);
    ASSERT_EQ(r.nodes, g.g0);
    for (std::size_t i = 0; i < g.g0.size(); ++i)
        EXPECT_EQ(r.values[1](static_cast<Eigen::Index>(i), 7), t.y[1](g.g0[i], 7));

    // Restricting again to the same set changes nothing.
    Trajectory sub = t;
    for (auto& y : sub.y) {
        Mat z = Mat::Zero(y.rows(), y.cols());
        for (int node : g.g0) z.row(node) = y.row(node);
        y = z;
    }
    EXPECT_EQ(record_norm(record_difference(measure_internal(sub, g, g.g0), r)), 0.0);

    // All interior nodes: record norm is the interior space-time norm.
    const MeasurementRecord all = measure_internal(t, g, g.interior);
    const Norms norms(g);
    EXPECT_NEAR(record_norm(all), expected_norm(norms, t.y, NormKind::L2_time_space, &t.time), 1e-13);
    EXPECT_THROW(measure_internal(t, g, {}), Error);
}

TEST(Measurements, TerminalOfDeterministicHeatMode) {
    const Grid g = line(41);
    ParabolicCoefficients c;
    c.b = Tensor::scalar(g, 1.0);
    c.y0 = sine(g);
    const Trajectory t = solve_parabolic(c, sample_brownian(TimeGrid(0.1, 2000), 1, 1), g);
    const MeasurementRecord r = measure_terminal(t, g);
    const Vec exact = std::exp(-pi * pi * 0.1) * sine(g);
    EXPECT_LT((r.values[0].col(0) - exact).cwiseAbs().maxCoeff(), 2e-3);

    // A field constant in time reads back unchanged.
    const Trajectory k = constant_field(g, 2.5);
    EXPECT_EQ(measure_terminal(k, g).values[1].col(0), Vec::Constant(g.size(), 2.5));
}

TEST(Measurements, BoundaryPairs) {
    const Grid g = line(201);
    Trajectory t;
    t.time = TimeGrid(1.0, 2);
    t.stored = {0, 1, 2};
    t.y.assign(1, sine(g).replicate(1, 3));
    const std::vector<int> left = select_boundary(g, [&](int node) { return g.point(node)[0] == 0.0; });
    const MeasurementRecord r = measure_boundary(t, g, left);
    EXPECT_NEAR(r.normal[0](0, 0), -pi, 1e-3);
    EXPECT_NEAR(r.values[0](0, 1), 0.0, 1e-15);

    const Trajectory k = constant_field(g, 3.0);
    const MeasurementRecord rk = measure_boundary(k, g, g.gamma0);
    EXPECT_LT(rk.normal[0].cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_THROW(measure_boundary(k, g, {}), Error);
}

TEST(Measurements, OperatorsAreLinear) {
    const Grid g = line(11);
    const Trajectory u = heat_run(g, sine(g));
    const Trajectory v = heat_run(g, sample(g, [](const Point& x) { return x[0] * (1.0 - x[0]); }));
    Trajectory w = u;
    for (int p = 0; p < w.paths(); ++p) w.y[p] = 2.0 * u.y[p] - 3.0 * v.y[p];
    auto combo = [](MeasurementRecord a, const MeasurementRecord& b) {
        for (std::size_t p = 0; p < a.values.size(); ++p) {
            a.values[p] = 2.0 * a.values[p] - 3.0 * b.values[p];
            if (!a.normal.empty()) a.normal[p] = 2.0 * a.normal[p] - 3.0 * b.normal[p];
        }
        return a;
    };
    const MeasurementRecord bw = measure_boundary(w, g, g.gamma0);
    EXPECT_LT(record_norm(record_difference(bw, combo(measure_boundary(u, g, g.gamma0), measure_boundary(v, g, g.gamma0)))),
              1e-13);
    const MeasurementRecord iw = measure_internal(w, g, g.g0);
    EXPECT_LT(record_norm(record_difference(iw, combo(measure_internal(u, g, g.g0), measure_internal(v, g, g.g0)))),
              1e-13);
}

TEST(Measurements, NoiseIsNormExact) {
    const Grid g = line(21);
    const Trajectory t = heat_run(g, sine(g), 4);
    for (const MeasurementRecord& clean :
         {measure_terminal(t, g), measure_internal(t, g, g.g0), measure_boundary(t, g, g.gamma0)}) {
        EXPECT_EQ(record_norm(record_difference(add_noise(clean, 0.0, {}, 1), clean)), 0.0);
        for (NoiseSpec spec : {NoiseSpec{NoiseShape::white, 1}, NoiseSpec{NoiseShape::single_mode, 2}}) {
            const MeasurementRecord a = add_noise(clean, 0.05, spec, 1);
            const MeasurementRecord b = add_noise(clean, 0.05, spec, 2);
            EXPECT_EQ(a.delta, 0.05);
            EXPECT_NEAR(record_norm(record_difference(a, clean)), 0.05, 0.05 * 1e-12);
            EXPECT_NEAR(record_norm(record_difference(b, clean)), 0.05, 0.05 * 1e-12);
            EXPECT_GT(record_norm(record_difference(a, b)), 0.0);
        }
    }
    EXPECT_THROW(add_noise(measure_terminal(t, g), -1.0, {}, 1), Error);
}
