#pragma once

#include <array>
#include <functional>
#include <memory>

#include <Eigen/SparseCholesky>

#include "spdelab/brownian.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/trajectory.hpp"

namespace spde {

// dy - div(b grad y) dt = (b1.grad y + b2 y + f) dt + (b3 y + g) dW, y = 0 on
// the boundary. Empty vectors and matrices mean zero. Sources are nodes x
// steps (or steps+1); column k is used on step k.
struct ParabolicCoefficients {
    Tensor b;
    std::array<Vec, 2> b1;
    Vec b2, b3;
    Mat f, g;
    Vec y0;

    // Optional Lipschitz nonlinearities, evaluated explicitly at the previous
    // step; the step is a contraction only if dt * Lip^2 < 1.
    std::function<double(double t, const Point& x, double y, const Point& grad)> F;
    std::function<double(double t, const Point& x, double y)> K;
};

// One semi-implicit Euler-Maruyama step on interior unknowns:
//   (I - dt L) y+ = y + dt (K y + f) + (b3 y + g) dW,  K = b1.grad + b2.
// The factorization is built once and shared read-only across paths.
class ParabolicStepper {
public:
    ParabolicStepper(const Grid& grid, const TimeGrid& time, const ParabolicCoefficients& c);

    const Grid& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(grid_.interior.size()); }

    // Linear homogeneous step.
    Vec step(const Vec& y, double dW) const;
    // Transpose of `step` in the Euclidean inner product.
    Vec step_transpose(const Vec& r, double dW) const;
    // Inhomogeneous forcing contribution of step k (zero if no sources).
    Vec forcing(int k, double dW) const;
    bool has_forcing() const { return f_.size() > 0 || g_.size() > 0; }

    // Explicit residual pieces, interior rows: (I - dt L) and the lower-order
    // plus noise map A_k = I + dt K + dW b3.
    const SpMat& implicit_matrix() const { return S_; }
    SpMat explicit_matrix(double dW) const;
    Vec solve(const Vec& rhs) const { return ldlt_->solve(rhs); }

private:
    Grid grid_;
    TimeGrid time_;
    SpMat S_, K_;
    Vec b3_;
    Mat f_, g_;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
};

Trajectory solve_parabolic(const ParabolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                           Storage storage = Storage::full);
Trajectory solve_parabolic(const ParabolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                           const std::vector<int>& keep);

// Lower-order coupling b1.grad + b2 as an interior block.
SpMat lower_order_matrix(const Grid& grid, const std::array<Vec, 2>& b1, const Vec& b2);
// Interior sample of a nodal source column, or zero.
Vec source_column(const Grid& grid, const Mat& src, int k);

}  // namespace spde
