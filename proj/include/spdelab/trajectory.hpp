#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spdelab/grid.hpp"

namespace spde {

// Per-path fields at a subset of time nodes. y[p] is nodes x stored.size();
// v is filled for hyperbolic runs only.
struct Trajectory {
    TimeGrid time;
    std::vector<int> stored;
    std::vector<Mat> y;
    std::vector<Mat> v;

    int paths() const { return static_cast<int>(y.size()); }
    // Column of a stored time index; throws if that time was not kept.
    int column(int k) const;
    Vec at(int path, int k) const { return y[path].col(column(k)); }
    Vec velocity(int path, int k) const { return v[path].col(column(k)); }
    Vec terminal(int path) const { return at(path, time.steps); }
};

enum class Storage { full, terminal };
std::vector<int> storage_indices(const TimeGrid& time, Storage storage);

// CSV columns: path,t,x[,y],value. Velocity rows are not written.
void write_csv(std::ostream& out, const Trajectory& traj, const Grid& grid);
// Little-endian float64: header {dim, nx, ny, stored, steps, paths, T} then
// y[p] column-major for each path.
void write_binary(std::ostream& out, const Trajectory& traj, const Grid& grid);
Trajectory read_binary(std::istream& in);

}  // namespace spde
