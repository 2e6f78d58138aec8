#include "spdelab/trajectory.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "spdelab/error.hpp"

namespace spde {

int Trajectory::column(int k) const {
    const auto it = std::lower_bound(stored.begin(), stored.end(), k);
    require(it != stored.end() && *it == k, "time index not stored");
    return static_cast<int>(it - stored.begin());
}

std::vector<int> storage_indices(const TimeGrid& time, Storage storage) {
    if (storage == Storage::terminal) return {time.steps};
    std::vector<int> all(time.steps + 1);
    for (int k = 0; k <= time.steps; ++k) all[k] = k;
    return all;
}

void write_csv(std::ostream& out, const Trajectory& traj, const Grid& grid) {
    out << (grid.dim == 2 ? "path,t,x,y,value\n" : "path,t,x,value\n");
    out.precision(17);
    for (int p = 0; p < traj.paths(); ++p)
        for (std::size_t c = 0; c < traj.stored.size(); ++c) {
            const double t = traj.time.t(traj.stored[c]);
            for (int node = 0; node < grid.size(); ++node) {
                const Point x = grid.point(node);
                out << p << ',' << t << ',' << x[0];
                if (grid.dim == 2) out << ',' << x[1];
                out << ',' << traj.y[p](node, static_cast<Eigen::Index>(c)) << '\n';
            }
        }
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");

void put(std::ostream& out, double x) {
    char buf[8];
    std::memcpy(buf, &x, 8);
    out.write(buf, 8);
}

double get(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    require(static_cast<bool>(in), "truncated binary trajectory");
    double x;
    std::memcpy(&x, buf, 8);
    return x;
}

}  // namespace

void write_binary(std::ostream& out, const Trajectory& traj, const Grid& grid) {
    put(out, grid.dim);
    put(out, grid.n[0]);
    put(out, grid.n[1]);
    put(out, static_cast<double>(traj.stored.size()));
    put(out, traj.time.steps);
    put(out, traj.paths());
    put(out, traj.time.T);
    for (int k : traj.stored) put(out, k);
    for (const Mat& m : traj.y)
        for (Eigen::Index i = 0; i < m.size(); ++i) put(out, m.data()[i]);
}

Trajectory read_binary(std::istream& in) {
    get(in);
    const int nx = static_cast<int>(get(in)), ny = static_cast<int>(get(in));
    const int stored = static_cast<int>(get(in)), steps = static_cast<int>(get(in));
    const int paths = static_cast<int>(get(in));
    const double T = get(in);
    Trajectory traj;
    traj.time = TimeGrid(T, steps);
    for (int c = 0; c < stored; ++c) traj.stored.push_back(static_cast<int>(get(in)));
    for (int p = 0; p < paths; ++p) {
        Mat m(nx * ny, stored);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get(in);
        traj.y.push_back(std::move(m));
    }
    return traj;
}

}  // namespace spde
