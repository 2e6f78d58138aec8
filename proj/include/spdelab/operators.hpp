#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "spdelab/grid.hpp"

namespace spde {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Symmetric principal coefficient b^{jk} sampled at nodes. b12 and b22 are
// ignored in 1D.
struct Tensor {
    Vec b11, b12, b22;

    static Tensor scalar(const Grid& grid, double c);
    double quad(int node, const Point& xi) const;
    double trace(int node) const;
};

// Smallest eigenvalue of b at every node; throws "ellipticity violated" below
// `floor`. Returns the minimum over nodes.
double check_ellipticity(const Grid& grid, const Tensor& b, double floor = 0.0);

// Trapezoid (tensor) mass weights.
Vec mass_weights(const Grid& grid);

// First derivative along `axis` at every node: central inside, one-sided
// second order at the ends of the axis.
SpMat gradient_matrix(const Grid& grid, int axis);

// Central first derivative at interior nodes only (other rows empty).
SpMat interior_gradient(const Grid& grid, int axis);

// Second derivative d_a d_b at interior nodes only (other rows empty).
SpMat second_difference(const Grid& grid, int a, int b);

// sum_jk (b^{jk} u_{x_j})_{x_k}: flux differences for j = k with midpoint
// averaged b, centered products for j != k. Boundary rows are empty.
SpMat divergence_operator(const Grid& grid, const Tensor& b);

// Outward normal derivative at the listed boundary nodes, one-sided second
// order along each axis the normal points into. One row per node.
SpMat neumann_matrix(const Grid& grid, const std::vector<int>& nodes);

// Selection of the interior block: rows/cols in interior slot order.
SpMat interior_block(const Grid& grid, const SpMat& full);
// Map from interior unknowns to all nodes (zero extension).
SpMat extension_matrix(const Grid& grid);

}  // namespace spde
