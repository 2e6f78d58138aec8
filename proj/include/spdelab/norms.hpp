#pragma once

#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/operators.hpp"

namespace spde {

enum class NormKind {
    L2_space,
    H1_space,
    H2_space,
    L2_time_space,
    L2_time_H1_space,
    L2_time_H2_space,
    H1_time_L2_space,
};

bool is_space_time(NormKind kind);
NormKind spatial_part(NormKind kind);

// Discrete norms on one grid. Spatial norms are quadratic forms u' R u with
// R the Riesz matrix below; second differences live at interior nodes only,
// which is the zero-ghost convention for fields vanishing on the boundary.
class Norms {
public:
    explicit Norms(const Grid& grid);

    const Grid& grid() const { return grid_; }
    const Vec& mass() const { return mass_; }
    // Mass weights restricted to interior nodes, zero elsewhere.
    const Vec& interior_mass() const { return interior_mass_; }

    double space_sq(const Vec& u, NormKind kind) const;
    // Riesz matrix of a spatial kind on all nodes.
    const SpMat& riesz(NormKind kind) const;

    // Space-time field: nodes x (steps+1).
    double space_time_sq(const Mat& U, const TimeGrid& time, NormKind kind) const;

private:
    Grid grid_;
    Vec mass_, interior_mass_;
    SpMat r_l2_, r_h1_, r_h2_;
};

double discrete_norm(const Norms& norms, const Mat& field, NormKind kind, const TimeGrid* time = nullptr);
// sqrt of the path average of squared norms.
double expected_norm(const Norms& norms, const std::vector<Mat>& fields, NormKind kind,
                     const TimeGrid* time = nullptr);

// Trapezoid weights in time for steps+1 nodes.
Vec time_weights(const TimeGrid& time);

}  // namespace spde
