#include "spdelab/measurements.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "spdelab/brownian.hpp"
#include "spdelab/error.hpp"
#include "spdelab/hyperbolic.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

namespace {

MeasurementRecord skeleton(MeasurementKind kind, const Trajectory& traj, const Grid& grid, std::uint64_t seed) {
    MeasurementRecord r;
    r.kind = kind;
    r.grid_nodes = grid.n;
    r.grid_length = grid.length;
    r.time = traj.time;
    r.seed = seed;
    return r;
}

// Trapezoid weights over the stored time nodes.
Vec stored_time_weights(const Trajectory& traj) {
    const auto n = static_cast<Eigen::Index>(traj.stored.size());
    Vec w = Vec::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double span = traj.time.t(traj.stored[i + 1]) - traj.time.t(traj.stored[i]);
        w[i] += 0.5 * span;
        w[i + 1] += 0.5 * span;
    }
    if (n == 1) w[0] = 1.0;
    return w;
}

}  // namespace

MeasurementRecord measure_internal(const Trajectory& traj, const Grid& grid, const std::vector<int>& g0,
                                   std::uint64_t seed) {
    require(!g0.empty(), "empty observation subdomain");
    MeasurementRecord r = skeleton(MeasurementKind::internal, traj, grid, seed);
    r.nodes = g0;
    r.times = traj.stored;
    const Vec mass = mass_weights(grid);
    r.space_weight.resize(static_cast<Eigen::Index>(g0.size()));
    for (std::size_t i = 0; i < g0.size(); ++i) {
        require(g0[i] >= 0 && g0[i] < grid.size(), "observation node outside the grid");
        r.space_weight[static_cast<Eigen::Index>(i)] = mass[g0[i]];
    }
    r.time_weight = stored_time_weights(traj);
    r.values.resize(traj.paths());
    parallel_for(r.values.size(), [&](std::size_t p) {
        Mat& out = r.values[p];
        out.resize(static_cast<Eigen::Index>(g0.size()), traj.y[p].cols());
        for (std::size_t i = 0; i < g0.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = traj.y[p].row(g0[i]);
    });
    return r;
}

MeasurementRecord measure_terminal(const Trajectory& traj, const Grid& grid, std::uint64_t seed) {
    MeasurementRecord r = skeleton(MeasurementKind::terminal, traj, grid, seed);
    r.nodes.resize(grid.size());
    for (int i = 0; i < grid.size(); ++i) r.nodes[i] = i;
    r.times = {traj.time.steps};
    r.space_weight = mass_weights(grid);
    r.time_weight = Vec::Ones(1);
    r.values.resize(traj.paths());
    for (int p = 0; p < traj.paths(); ++p) r.values[p] = traj.terminal(p);
    return r;
}

MeasurementRecord measure_boundary(const Trajectory& traj, const Grid& grid, const std::vector<int>& gamma0,
                                   std::uint64_t seed) {
    require(!gamma0.empty(), "empty observation boundary");
    MeasurementRecord r = skeleton(MeasurementKind::boundary_pair, traj, grid, seed);
    r.nodes = gamma0;
    r.times = traj.stored;
    r.space_weight = boundary_weights(grid, gamma0);
    r.time_weight = stored_time_weights(traj);
    r.normal = neumann_trace(traj, grid, gamma0);
    r.values.resize(traj.paths());
    for (int p = 0; p < traj.paths(); ++p) {
        Mat& out = r.values[p];
        out.resize(static_cast<Eigen::Index>(gamma0.size()), traj.y[p].cols());
        for (std::size_t i = 0; i < gamma0.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = traj.y[p].row(gamma0[i]);
    }
    return r;
}

double record_norm(const MeasurementRecord& r) {
    std::vector<double> sq(r.values.size());
    const Mat w = r.space_weight * r.time_weight.transpose();
    parallel_for(sq.size(), [&](std::size_t p) {
        double s = w.cwiseProduct(r.values[p].cwiseAbs2()).sum();
        if (!r.normal.empty()) s += w.cwiseProduct(r.normal[p].cwiseAbs2()).sum();
        sq[p] = s;
    });
    if (sq.empty()) return 0.0;
    return std::sqrt(tree_sum(sq) / static_cast<double>(sq.size()));
}

MeasurementRecord record_difference(const MeasurementRecord& a, const MeasurementRecord& b) {
    require(a.kind == b.kind && a.values.size() == b.values.size() && a.normal.size() == b.normal.size(),
            "shape error");
    MeasurementRecord d = a;
    for (std::size_t p = 0; p < a.values.size(); ++p) {
        require(a.values[p].rows() == b.values[p].rows() && a.values[p].cols() == b.values[p].cols(), "shape error");
        d.values[p] -= b.values[p];
        if (!a.normal.empty()) d.normal[p] -= b.normal[p];
    }
    return d;
}

namespace {

// Unscaled perturbation with the record's shape.
MeasurementRecord draw(const MeasurementRecord& clean, const NoiseSpec& noise, std::uint64_t seed) {
    MeasurementRecord e = clean;
    const int components = clean.normal.empty() ? 1 : 2;
    Vec profile;
    if (noise.shape == NoiseShape::single_mode) {
        require(noise.mode >= 1, "noise mode must be positive");
        const double k = noise.mode * std::numbers::pi;
        if (clean.kind == MeasurementKind::boundary_pair) {
            profile.resize(static_cast<Eigen::Index>(clean.times.size()));
            for (std::size_t i = 0; i < clean.times.size(); ++i)
                profile[static_cast<Eigen::Index>(i)] = std::sin(k * clean.time.t(clean.times[i]) / clean.time.T);
        } else {
            const double h = clean.grid_length[0] / (clean.grid_nodes[0] - 1);
            profile.resize(static_cast<Eigen::Index>(clean.nodes.size()));
            for (std::size_t i = 0; i < clean.nodes.size(); ++i) {
                const double x = (clean.nodes[i] % clean.grid_nodes[0]) * h;
                profile[static_cast<Eigen::Index>(i)] = std::sin(k * x / clean.grid_length[0]);
            }
        }
    }
    parallel_for(clean.values.size(), [&](std::size_t p) {
        std::mt19937_64 rng(path_seed(seed, p));
        std::normal_distribution<double> normal;
        for (int c = 0; c < components; ++c) {
            Mat& m = c == 0 ? e.values[p] : e.normal[p];
            if (noise.shape == NoiseShape::white) {
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
            } else {
                const double amp = normal(rng);
                if (clean.kind == MeasurementKind::boundary_pair)
                    m = amp * Vec::Ones(m.rows()) * profile.transpose();
                else
                    m = amp * profile * Vec::Ones(m.cols()).transpose();
            }
        }
    });
    return e;
}

}  // namespace

MeasurementRecord add_noise(const MeasurementRecord& clean, double delta, const NoiseSpec& noise, std::uint64_t seed) {
    require(delta >= 0.0, "noise level must be nonnegative");
    MeasurementRecord out = clean;
    out.delta = delta;
    if (delta == 0.0) return out;
    MeasurementRecord e = draw(clean, noise, seed);
    double n = record_norm(e);
    if (!(n > 0.0)) {
        e = draw(clean, noise, splitmix64(seed));
        n = record_norm(e);
    }
    if (!(n > 0.0)) fail_numerical("zero-norm perturbation");
    const double scale = delta / n;
    for (std::size_t p = 0; p < out.values.size(); ++p) {
        out.values[p] += scale * e.values[p];
        if (!out.normal.empty()) out.normal[p] += scale * e.normal[p];
    }
    return out;
}

}  // namespace spde
