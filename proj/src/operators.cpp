#include "spdelab/operators.hpp"

#include <cmath>
#include <Eigen/Eigenvalues>

#include "spdelab/error.hpp"

namespace spde {

Tensor Tensor::scalar(const Grid& grid, double c) {
    Tensor t;
    t.b11 = Vec::Constant(grid.size(), c);
    t.b12 = Vec::Zero(grid.size());
    t.b22 = Vec::Constant(grid.size(), c);
    return t;
}

double Tensor::quad(int node, const Point& xi) const {
    double q = b11[node] * xi[0] * xi[0];
    if (b22.size() > 0) q += 2.0 * b12[node] * xi[0] * xi[1] + b22[node] * xi[1] * xi[1];
    return q;
}

double Tensor::trace(int node) const { return b11[node] + (b22.size() > 0 ? b22[node] : 0.0); }

double check_ellipticity(const Grid& grid, const Tensor& b, double floor) {
    require(b.b11.size() == grid.size(), "shape error");
    if (grid.dim == 2) require(b.b12.size() == grid.size() && b.b22.size() == grid.size(), "shape error");
    double s0 = std::numeric_limits<double>::infinity();
    for (int node = 0; node < grid.size(); ++node) {
        double lam = b.b11[node];
        if (grid.dim == 2) {
            Eigen::Matrix2d m;
            m << b.b11[node], b.b12[node], b.b12[node], b.b22[node];
            lam = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m, Eigen::EigenvaluesOnly).eigenvalues()[0];
        }
        if (!(lam > floor)) fail("ellipticity violated");
        s0 = std::min(s0, lam);
    }
    return s0;
}

Vec mass_weights(const Grid& grid) {
    Vec w(grid.size());
    for (int node = 0; node < grid.size(); ++node) {
        const int c[2] = {grid.ix(node), grid.iy(node)};
        double m = 1.0;
        for (int a = 0; a < grid.dim; ++a) {
            const bool end = c[a] == 0 || c[a] == grid.n[a] - 1;
            m *= end ? 0.5 * grid.h[a] : grid.h[a];
        }
        w[node] = m;
    }
    return w;
}

namespace {

int step(const Grid& grid, int axis) { return axis == 0 ? 1 : grid.n[0]; }
int coord(const Grid& grid, int node, int axis) { return axis == 0 ? grid.ix(node) : grid.iy(node); }

// One-sided second-order derivative at an axis end, pointing into the domain.
void one_sided(Triplets& t, const Grid& grid, int row, int node, int axis, double scale) {
    const int s = step(grid, axis);
    const int c = coord(grid, node, axis);
    const double inv = scale / (2.0 * grid.h[axis]);
    if (c == 0) {
        t.emplace_back(row, node, -3.0 * inv);
        t.emplace_back(row, node + s, 4.0 * inv);
        t.emplace_back(row, node + 2 * s, -1.0 * inv);
    } else {
        t.emplace_back(row, node, 3.0 * inv);
        t.emplace_back(row, node - s, -4.0 * inv);
        t.emplace_back(row, node - 2 * s, 1.0 * inv);
    }
}

SpMat from_triplets(int rows, int cols, const Triplets& t) {
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

}  // namespace

SpMat gradient_matrix(const Grid& grid, int axis) {
    require(axis >= 0 && axis < grid.dim, "axis out of range");
    Triplets t;
    const int s = step(grid, axis);
    const double inv = 1.0 / (2.0 * grid.h[axis]);
    for (int node = 0; node < grid.size(); ++node) {
        const int c = coord(grid, node, axis);
        if (c > 0 && c < grid.n[axis] - 1) {
            t.emplace_back(node, node + s, inv);
            t.emplace_back(node, node - s, -inv);
        } else {
            one_sided(t, grid, node, node, axis, 1.0);
        }
    }
    return from_triplets(grid.size(), grid.size(), t);
}

SpMat interior_gradient(const Grid& grid, int axis) {
    require(axis >= 0 && axis < grid.dim, "axis out of range");
    Triplets t;
    const int s = step(grid, axis);
    const double inv = 1.0 / (2.0 * grid.h[axis]);
    for (int node : grid.interior) {
        t.emplace_back(node, node + s, inv);
        t.emplace_back(node, node - s, -inv);
    }
    return from_triplets(grid.size(), grid.size(), t);
}

SpMat second_difference(const Grid& grid, int a, int b) {
    require(a >= 0 && a < grid.dim && b >= 0 && b < grid.dim, "axis out of range");
    Triplets t;
    if (a == b) {
        const int s = step(grid, a);
        const double inv = 1.0 / (grid.h[a] * grid.h[a]);
        for (int node : grid.interior) {
            t.emplace_back(node, node + s, inv);
            t.emplace_back(node, node, -2.0 * inv);
            t.emplace_back(node, node - s, inv);
        }
    } else {
        const int sa = step(grid, a), sb = step(grid, b);
        const double inv = 1.0 / (4.0 * grid.h[a] * grid.h[b]);
        for (int node : grid.interior) {
            t.emplace_back(node, node + sa + sb, inv);
            t.emplace_back(node, node + sa - sb, -inv);
            t.emplace_back(node, node - sa + sb, -inv);
            t.emplace_back(node, node - sa - sb, inv);
        }
    }
    return from_triplets(grid.size(), grid.size(), t);
}

SpMat divergence_operator(const Grid& grid, const Tensor& b) {
    Triplets t;
    const Vec* diag[2] = {&b.b11, &b.b22};
    for (int node : grid.interior) {
        for (int a = 0; a < grid.dim; ++a) {
            const Vec& c = *diag[a];
            const int s = step(grid, a);
            const double inv = 1.0 / (grid.h[a] * grid.h[a]);
            const double up = 0.5 * (c[node] + c[node + s]);
            const double dn = 0.5 * (c[node] + c[node - s]);
            t.emplace_back(node, node + s, up * inv);
            t.emplace_back(node, node - s, dn * inv);
            t.emplace_back(node, node, -(up + dn) * inv);
        }
    }
    if (grid.dim == 2) {
        // d2(b12 d1 u) + d1(b12 d2 u), all centered.
        const int s1 = step(grid, 0), s2 = step(grid, 1);
        const double inv = 1.0 / (4.0 * grid.h[0] * grid.h[1]);
        for (int node : grid.interior) {
            const double bn = b.b12[node + s2], bs = b.b12[node - s2];
            const double be = b.b12[node + s1], bw = b.b12[node - s1];
            t.emplace_back(node, node + s2 + s1, (bn + be) * inv);
            t.emplace_back(node, node + s2 - s1, -(bn + bw) * inv);
            t.emplace_back(node, node - s2 + s1, -(bs + be) * inv);
            t.emplace_back(node, node - s2 - s1, (bs + bw) * inv);
        }
    }
    return from_triplets(grid.size(), grid.size(), t);
}

SpMat neumann_matrix(const Grid& grid, const std::vector<int>& nodes) {
    Triplets t;
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        const int node = nodes[r];
        require(grid.on_boundary[node], "Neumann trace requested at an interior node");
        const Point& nu = grid.normal[node];
        for (int a = 0; a < grid.dim; ++a)
            if (nu[a] != 0.0) one_sided(t, grid, static_cast<int>(r), node, a, nu[a]);
    }
    return from_triplets(static_cast<int>(nodes.size()), grid.size(), t);
}

SpMat extension_matrix(const Grid& grid) {
    Triplets t;
    for (std::size_t s = 0; s < grid.interior.size(); ++s) t.emplace_back(grid.interior[s], static_cast<int>(s), 1.0);
    return from_triplets(grid.size(), static_cast<int>(grid.interior.size()), t);
}

SpMat interior_block(const Grid& grid, const SpMat& full) {
    const SpMat E = extension_matrix(grid);
    SpMat out = SpMat(E.transpose()) * full * E;
    out.makeCompressed();
    return out;
}

}  // namespace spde
