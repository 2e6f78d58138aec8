#pragma once

#include <array>
#include <vector>

#include "spdelab/brownian.hpp"
#include "spdelab/carleman/geometry.hpp"
#include "spdelab/carleman/jet.hpp"

namespace spde {

// Ingredients shared by both weighted identities. Empty psi means the
// default multiplier; empty phi means phi = 1 (hyperbolic only). For the
// hyperbolic identity b must not depend on t.
struct IdentityCase {
    int dim = 1;
    TensorField b = TensorField::scalar(1.0);
    JetField ell;
    JetField psi;
    JetField phi;
    double c0_lambda = 0.0;  // constant in the default hyperbolic psi
    JetField u;              // deterministic test function u(t, x)
};

// 2 sum b^{jk} ell_{x_j x_k}.
JetField default_parabolic_psi(const TensorField& b, const JetField& ell, int dim);
// ell_tt + sum (b^{jk} ell_{x_j})_{x_k} - c0 lambda.
JetField default_hyperbolic_psi(const TensorField& b, const JetField& ell, int dim, double c0_lambda);

// (t, x1, x2) evaluation points.
using SamplePoint = std::array<double, 3>;
// Tensor sample of the open cylinder (0, T) x box: nt times, nx per axis.
std::vector<SamplePoint> cylinder_points(int dim, double T, const std::array<double, 2>& length, int nt, int nx);

struct PointwiseResidual {
    double max_abs = 0.0;
    double max_scale = 0.0;  // largest |side| seen, for context
    int samples = 0;
    std::vector<double> lhs, rhs;  // per point
};

// Deterministic identities (du = u_t dt, no quadratic variation) with all
// derivatives exact through jets.
PointwiseResidual parabolic_identity_residual(const IdentityCase& c, const std::vector<SamplePoint>& points);
PointwiseResidual hyperbolic_identity_residual(const IdentityCase& c, const std::vector<SamplePoint>& points);

// Manufactured Ito processes driven by dZ = drift Z dt + sigma Z dW, Z(0) = z0.
// Parabolic: u = p(x) Z. Hyperbolic: u = p(x) Y with Y' = Z, Y(0) = y0, so
// that u_t = p Z is the Ito process.
struct StochasticIdentityCase {
    IdentityCase base;  // u is ignored
    JetField profile;
    double drift = 0.0, sigma = 0.5;
    double z0 = 1.0, y0 = 0.0;
};

struct StochasticResidual {
    Vec gaps;  // per path, integrated LHS - RHS
    double lhs_mean = 0.0, rhs_mean = 0.0;
    double gap_mean = 0.0, gap_stderr = 0.0;
    bool within(double k) const { return std::abs(gap_mean) <= k * gap_stderr; }
};

// Both sides integrated over the grid (trapezoid in space) and the ensemble's
// time grid. dZ splits into its drift, integrated by the trapezoid rule with
// the other dt terms, and sigma Z dW, summed at the left point; (dZ)^2 becomes
// sigma^2 Z^2 dt and the total differential telescopes exactly.
StochasticResidual parabolic_identity_residual(const StochasticIdentityCase& c, const Grid& grid,
                                               const BrownianEnsemble& ens);
StochasticResidual hyperbolic_identity_residual(const StochasticIdentityCase& c, const Grid& grid,
                                                const BrownianEnsemble& ens);

// Root-mean-square size of the sample-mean gap at m paths, estimated from the
// full per-path sample: sqrt(bias^2 + var / m) with bias^2 corrected for its
// own sampling error.
double expected_gap(const Vec& gaps, int m);

}  // namespace spde
