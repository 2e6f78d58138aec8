#include "spdelab/grid.hpp"

#include <cmath>

#include "spdelab/error.hpp"

namespace spde {

Grid build_grid(const GridSpec& spec) {
    require(spec.dim == 1 || spec.dim == 2, "dimension must be 1 or 2");
    Grid g;
    g.dim = spec.dim;
    for (int a = 0; a < spec.dim; ++a) {
        require(spec.length[a] > 0.0, "axis length must be positive");
        require(spec.nodes[a] >= 3, "degenerate grid");
        g.length[a] = spec.length[a];
        g.n[a] = spec.nodes[a];
        g.h[a] = spec.length[a] / (spec.nodes[a] - 1);
    }

    const int N = g.size();
    g.on_boundary.assign(N, 0);
    g.normal.assign(N, Point::Zero());
    g.interior_slot.assign(N, -1);
    for (int node = 0; node < N; ++node) {
        Point nu = Point::Zero();
        const int c[2] = {g.ix(node), g.iy(node)};
        for (int a = 0; a < g.dim; ++a) {
            if (c[a] == 0) nu[a] = -1.0;
            if (c[a] == g.n[a] - 1) nu[a] = 1.0;
        }
        if (nu.squaredNorm() > 0.0) {
            g.on_boundary[node] = 1;
            g.normal[node] = nu.normalized();  // corners take the diagonal
            g.boundary.push_back(node);
        } else {
            g.interior_slot[node] = static_cast<int>(g.interior.size());
            g.interior.push_back(node);
        }
    }

    if (!spec.gamma0.empty()) {
        g.gamma0 = select_boundary(g, [&](int node) {
            const int c[2] = {g.ix(node), g.iy(node)};
            for (const Face& f : spec.gamma0) {
                require(f.axis >= 0 && f.axis < g.dim, "face axis out of range");
                if (c[f.axis] == (f.side == 0 ? 0 : g.n[f.axis] - 1)) return true;
            }
            return false;
        });
        require(!g.gamma0.empty(), "empty observation boundary");
    }
    if (!spec.g0.empty()) {
        const double eps = 1e-12;
        for (int node : g.interior) {
            const Point x = g.point(node);
            for (const Box& b : spec.g0) {
                bool in = true;
                for (int a = 0; a < g.dim; ++a) in = in && x[a] >= b.lo[a] - eps && x[a] <= b.hi[a] + eps;
                if (in) {
                    g.g0.push_back(node);
                    break;
                }
            }
        }
        require(!g.g0.empty(), "empty observation subdomain");
    }
    return g;
}

std::vector<int> select_boundary(const Grid& grid, const std::function<bool(int)>& keep) {
    std::vector<int> out;
    for (int node : grid.boundary)
        if (keep(node)) out.push_back(node);
    return out;
}

Vec sample(const Grid& grid, const std::function<double(const Point&)>& f) {
    Vec v(grid.size());
    for (int node = 0; node < grid.size(); ++node) v[node] = f(grid.point(node));
    return v;
}

Vec restrict_interior(const Grid& grid, const Vec& full) {
    require(full.size() == grid.size(), "shape error");
    Vec out(grid.interior.size());
    for (std::size_t s = 0; s < grid.interior.size(); ++s) out[s] = full[grid.interior[s]];
    return out;
}

Vec extend_interior(const Grid& grid, const Vec& inner) {
    require(inner.size() == static_cast<Eigen::Index>(grid.interior.size()), "shape error");
    Vec out = Vec::Zero(grid.size());
    for (std::size_t s = 0; s < grid.interior.size(); ++s) out[grid.interior[s]] = inner[s];
    return out;
}

TimeGrid::TimeGrid(double horizon, int n_steps) : T(horizon), steps(n_steps) {
    require(horizon > 0.0 && std::isfinite(horizon), "time horizon must be positive");
    require(n_steps >= 1, "time grid needs at least one step");
}

}  // namespace spde
