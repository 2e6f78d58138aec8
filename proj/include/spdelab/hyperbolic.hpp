#pragma once

#include <array>
#include <memory>

#include <Eigen/SparseCholesky>

#include "spdelab/brownian.hpp"
#include "spdelab/norms.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/trajectory.hpp"

namespace spde {

// dz_t - div(b grad z) dt = (b1 z_t + b2.grad z + b3 z + f) dt + (b4 z + g) dW,
// z = 0 on the boundary, (z, z_t)(0) = (z0, z1).
struct HyperbolicCoefficients {
    Tensor b;
    Vec b1;
    std::array<Vec, 2> b2;
    Vec b3, b4;
    Mat f, g;
    Vec z0, z1;
};

// r1 = |b1| + |b2| + |b4|, r2 = |b3| in the sup norm.
struct CoefficientBounds {
    double r1 = 0.0, r2 = 0.0;
};
CoefficientBounds coefficient_bounds(const HyperbolicCoefficients& c);

// Staggered step on interior unknowns. v^k approximates z_t at t_k - dt/2 and
// y^{k+1} = y^k + dt v^{k+1}; the wave operator acts on the centered average
// (y^{k+1} + 2y^k + y^{k-1})/4, giving
//   (I - dt^2/4 L)(v+ - v) = dt L y + dt (b1 v + b2.grad y + b3 y + f) + (b4 y + g) dW.
class HyperbolicStepper {
public:
    HyperbolicStepper(const Grid& grid, const TimeGrid& time, const HyperbolicCoefficients& c);

    const Grid& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(grid_.interior.size()); }

    // Velocity at -dt/2 from (z0, z1), interior vectors.
    Vec start_velocity(const Vec& y0, const Vec& z1) const;
    void step(Vec& y, Vec& v, int k, double dW) const;

    const SpMat& laplacian() const { return L_; }      // interior block of div(b grad)
    const SpMat& lower_order() const { return Ky_; }   // b2.grad + b3, interior block
    const Vec& damping() const { return b1_; }
    const Vec& noise() const { return b4_; }

private:
    Grid grid_;
    TimeGrid time_;
    SpMat L_, Ky_;
    Vec b1_, b4_;
    Mat f_, g_;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
};

// Throws "unstable step size" unless dt <= h / sqrt(max_x sum_jk b^{jk}).
void check_cfl(const Grid& grid, const TimeGrid& time, const Tensor& b);

Trajectory solve_hyperbolic(const HyperbolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                            Storage storage = Storage::full);
Trajectory solve_hyperbolic(const HyperbolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                            const std::vector<int>& keep);

// Path-averaged |z_t|^2 + |grad z|^2 at time node k, using the centered
// displacement (y^k + y^{k-1})/2 for k >= 1.
double expected_energy(const Trajectory& traj, const Grid& grid, int k);

struct EnergyReport {
    double numerator = 0.0;
    double denominator = 0.0;
    double rho = 0.0;
    bool vacuous = false;
    bool pass = false;
};

EnergyReport check_energy_estimate(const Trajectory& traj, const HyperbolicCoefficients& c, const Grid& grid,
                                   double s, double t, double C);

// One-sided normal derivative at `subset`, per path: |subset| x stored.
std::vector<Mat> neumann_trace(const Trajectory& traj, const Grid& grid, const std::vector<int>& subset);

// Surface weights for a boundary node set (1 per node in 1D).
Vec boundary_weights(const Grid& grid, const std::vector<int>& nodes);

// sqrt(E |a(T) - b(T)|^2_{L2}); the reference may live on a grid refined by an
// integer factor and is restricted by injection.
double strong_error(const Trajectory& traj, const Grid& grid, const Trajectory& ref, const Grid& ref_grid);
double strong_error(const Trajectory& traj, const Grid& grid, const std::function<Vec(int path)>& exact_terminal);

}  // namespace spde
