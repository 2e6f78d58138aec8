#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace spde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Eigen::Vector2d;  // x2 is unused in 1D

// Boundary selector: axis in {0,1}, side 0 for x=0 and 1 for x=L.
struct Face {
    int axis = 0;
    int side = 1;
};

// Axis-aligned box used to mark an interior observation region.
struct Box {
    Point lo{0.0, 0.0};
    Point hi{0.0, 0.0};
};

struct GridSpec {
    int dim = 1;
    std::array<double, 2> length{1.0, 1.0};
    std::array<int, 2> nodes{11, 1};
    std::vector<Face> gamma0;        // empty: no observation boundary
    std::vector<Box> g0;             // empty: no observation subdomain
};

struct Grid {
    int dim = 1;
    std::array<double, 2> length{1.0, 1.0};
    std::array<int, 2> n{1, 1};
    std::array<double, 2> h{1.0, 1.0};

    std::vector<char> on_boundary;
    std::vector<Point> normal;       // zero at interior nodes
    std::vector<int> interior;       // ascending node ids
    std::vector<int> boundary;
    std::vector<int> interior_slot;  // node id -> position in `interior`, or -1
    std::vector<int> gamma0;
    std::vector<int> g0;

    int size() const { return n[0] * n[1]; }
    int index(int i, int j = 0) const { return i + n[0] * j; }
    int ix(int node) const { return node % n[0]; }
    int iy(int node) const { return node / n[0]; }
    Point point(int node) const { return {ix(node) * h[0], dim == 2 ? iy(node) * h[1] : 0.0}; }
    double min_spacing() const { return dim == 2 ? std::min(h[0], h[1]) : h[0]; }
    // Volume of one interior cell.
    double cell() const { return dim == 2 ? h[0] * h[1] : h[0]; }
};

Grid build_grid(const GridSpec& spec);

// Nodes of a boundary set matching a predicate; used for Carleman-derived sets.
std::vector<int> select_boundary(const Grid& grid, const std::function<bool(int node)>& keep);

// Evaluate f(x) at every node.
Vec sample(const Grid& grid, const std::function<double(const Point&)>& f);

// Interior restriction and zero extension.
Vec restrict_interior(const Grid& grid, const Vec& full);
Vec extend_interior(const Grid& grid, const Vec& inner);

struct TimeGrid {
    double T = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon, int n_steps);
    double dt() const { return T / steps; }
    double t(int k) const { return k == steps ? T : k * dt(); }
    bool operator==(const TimeGrid& o) const { return T == o.T && steps == o.steps; }
};

}  // namespace spde
