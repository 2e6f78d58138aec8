#pragma once

#include <cstdint>
#include <vector>

#include "spdelab/trajectory.hpp"

namespace spde {

enum class MeasurementKind { internal, terminal, boundary_pair };

// Per-path payloads are |nodes| x |times|. For boundary pairs `values` holds
// the Dirichlet trace and `normal` the one-sided normal derivative.
struct MeasurementRecord {
    MeasurementKind kind = MeasurementKind::terminal;
    std::vector<int> nodes;
    std::vector<int> times;  // time node indices
    std::vector<Mat> values;
    std::vector<Mat> normal;

    // Provenance.
    std::array<int, 2> grid_nodes{0, 0};
    std::array<double, 2> grid_length{0.0, 0.0};
    TimeGrid time;
    std::uint64_t seed = 0;
    double delta = 0.0;

    // Quadrature of the natural norm: space weight per node, time weight per
    // stored time (1 for terminal records).
    Vec space_weight, time_weight;

    int paths() const { return static_cast<int>(values.size()); }
};

MeasurementRecord measure_internal(const Trajectory& traj, const Grid& grid, const std::vector<int>& g0,
                                   std::uint64_t seed = 0);
MeasurementRecord measure_terminal(const Trajectory& traj, const Grid& grid, std::uint64_t seed = 0);
MeasurementRecord measure_boundary(const Trajectory& traj, const Grid& grid, const std::vector<int>& gamma0,
                                   std::uint64_t seed = 0);

// sqrt(E sum w_x w_t (value^2 + normal^2)).
double record_norm(const MeasurementRecord& r);
// a - b with a's metadata; shapes must agree.
MeasurementRecord record_difference(const MeasurementRecord& a, const MeasurementRecord& b);

enum class NoiseShape { white, single_mode };

struct NoiseSpec {
    NoiseShape shape = NoiseShape::white;
    int mode = 1;  // single_mode: sin(k pi s) along the record's main coordinate
};

// Perturbation rescaled so that record_norm(noisy - clean) equals delta.
// single_mode uses x1 / L1 for internal and terminal records and t / T for
// boundary records, with one N(0,1) amplitude per path and component.
MeasurementRecord add_noise(const MeasurementRecord& clean, double delta, const NoiseSpec& noise, std::uint64_t seed);

}  // namespace spde
