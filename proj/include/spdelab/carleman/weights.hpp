#pragma once

#include <array>
#include <string>

#include "spdelab/carleman/jet.hpp"
#include "spdelab/grid.hpp"

namespace spde {

// psi(x) = a |x - x0|^2 + shift, or a constant when `constant` is set.
struct PsiSpec {
    Point x0{-1.0, -1.0};
    double a = 1.0;
    double shift = 0.0;
    bool constant = false;
    double value = 0.0;  // used when constant

    JetD operator()(const JetD& x1, const JetD& x2, int dim) const;
    double at(const Point& x, int dim) const;
    Point grad(const Point& x, int dim) const;
};

enum class WeightVariant {
    parabolic_interior,
    time_exponential,
    time_power,
    hyperbolic_quadratic,
    hyperbolic_aniso,
    local_paraboloid,
};

std::string to_string(WeightVariant v);
WeightVariant weight_variant_from_string(const std::string& name);

struct WeightSpec {
    WeightVariant variant = WeightVariant::hyperbolic_quadratic;
    int dim = 1;
    double T = 1.0;
    double lambda = 1.0;
    double mu = 1.0;
    double s = 1.0;
    double c1 = 0.0;
    double beta = 0.5;
    double m = 1.0;
    double h = 1.0;
    double tau = 0.5;
    Point x0{-1.0, -1.0};  // x0' for the anisotropic weight (second entry)
    PsiSpec psi;
    double psi_sup = 0.0;          // |psi|_C(G), parabolic_interior only
    // time_exponential: psi(t) = psi_t_slope * t + psi_t_offset.
    double psi_t_slope = 1.0;
    double psi_t_offset = 0.0;
};

// Rejects parameter sets outside a variant's admissible range.
void validate_weight(const WeightSpec& spec);

// ell as a jet field; theta = e^ell.
JetField weight_field(const WeightSpec& spec);

struct WeightEval {
    double ell = 0.0, theta = 0.0;
    double ell_t = 0.0, ell_tt = 0.0;
    Point grad{0.0, 0.0};
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

// Throws "weight singular at endpoint" for parabolic_interior at t in {0, T}.
WeightEval eval_weight(const WeightSpec& spec, double t, const Point& x);

// Smallest lambda making theta < tol at t = dt and T - dt on every node
// (parabolic_interior; alpha < 0 there is checked and a failure throws).
double parabolic_weight_decay_lambda(const WeightSpec& spec, const Grid& grid, const TimeGrid& time,
                                     double tol = 1e-8);

}  // namespace spde
