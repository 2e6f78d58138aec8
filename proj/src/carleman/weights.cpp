#include "spdelab/carleman/weights.hpp"

#include <cmath>
#include <limits>

namespace spde {

JetD PsiSpec::operator()(const JetD& x1, const JetD& x2, int dim) const {
    if (constant) return JetD(value);
    JetD r = (x1 - x0[0]) * (x1 - x0[0]);
    if (dim == 2) r += (x2 - x0[1]) * (x2 - x0[1]);
    return r * a + shift;
}

double PsiSpec::at(const Point& x, int dim) const {
    if (constant) return value;
    const Point d = x - x0;
    return a * (dim == 2 ? d.squaredNorm() : d[0] * d[0]) + shift;
}

Point PsiSpec::grad(const Point& x, int dim) const {
    if (constant) return Point::Zero();
    Point g = 2.0 * a * (x - x0);
    if (dim == 1) g[1] = 0.0;
    return g;
}

std::string to_string(WeightVariant v) {
    switch (v) {
        case WeightVariant::parabolic_interior: return "parabolic_interior";
        case WeightVariant::time_exponential: return "time_exponential";
        case WeightVariant::time_power: return "time_power";
        case WeightVariant::hyperbolic_quadratic: return "hyperbolic_quadratic";
        case WeightVariant::hyperbolic_aniso: return "hyperbolic_aniso";
        case WeightVariant::local_paraboloid: return "local_paraboloid";
    }
    return "unknown";
}

WeightVariant weight_variant_from_string(const std::string& name) {
    for (auto v : {WeightVariant::parabolic_interior, WeightVariant::time_exponential, WeightVariant::time_power,
                   WeightVariant::hyperbolic_quadratic, WeightVariant::hyperbolic_aniso,
                   WeightVariant::local_paraboloid})
        if (to_string(v) == name) return v;
    fail("unknown weight variant: " + name);
}

void validate_weight(const WeightSpec& w) {
    require(w.dim == 1 || w.dim == 2, "weight dimension must be 1 or 2");
    require(w.T > 0, "weight horizon must be positive");
    switch (w.variant) {
        case WeightVariant::parabolic_interior:
            require(w.psi_sup >= 0, "psi_sup must be nonnegative");
            break;
        case WeightVariant::time_exponential:
            require(w.psi_t_slope >= 1.0, "time_exponential needs psi_t >= 1");
            break;
        case WeightVariant::hyperbolic_aniso:
            require(w.dim == 2, "hyperbolic_aniso needs two dimensions");
            require(w.beta > 0 && w.beta < 0.8, "hyperbolic_aniso needs beta in (0, 4/5)");
            break;
        case WeightVariant::local_paraboloid:
            require(w.tau > 0 && w.tau < 1, "local_paraboloid needs tau in (0, 1)");
            break;
        default:
            break;
    }
}

JetField weight_field(const WeightSpec& spec) {
    validate_weight(spec);
    const WeightSpec w = spec;
    switch (w.variant) {
        case WeightVariant::parabolic_interior:
            return [w](const JetD& t, const JetD& x1, const JetD& x2) {
                const JetD num = exp(w.psi(x1, x2, w.dim) * w.mu) - std::exp(2.0 * w.mu * w.psi_sup);
                return w.lambda * num / (t * (w.T - t));
            };
        case WeightVariant::time_exponential:
            return [w](const JetD& t, const JetD&, const JetD&) {
                const JetD psi = t * w.psi_t_slope + w.psi_t_offset;
                return w.s * exp(w.lambda * psi);
            };
        case WeightVariant::time_power:
            return [w](const JetD& t, const JetD&, const JetD&) { return pow(t + 1.0, w.lambda); };
        case WeightVariant::hyperbolic_quadratic:
            return [w](const JetD& t, const JetD& x1, const JetD& x2) {
                const JetD tc = t - 0.5 * w.T;
                return w.lambda * (w.psi(x1, x2, w.dim) - w.c1 * tc * tc);
            };
        case WeightVariant::hyperbolic_aniso:
            // x1 is the distinguished axis; x2 plays the role of x'.
            return [w](const JetD& t, const JetD& x1, const JetD& x2) {
                const JetD xp = x2 - w.x0[1];
                const JetD tm = t + w.m;
                return w.lambda * (xp * xp - w.beta * x1 * x1 + tm * tm);
            };
        case WeightVariant::local_paraboloid:
            return [w](const JetD& t, const JetD& x1, const JetD& x2) {
                const JetD tc = t - 0.5 * w.T;
                JetD phi = w.h * x1 + 0.5 * tc * tc + 0.5 * w.tau;
                if (w.dim == 2) phi += 0.5 * x2 * x2;
                return w.s * pow(phi, -w.lambda);
            };
    }
    fail("unknown weight variant");
}

WeightEval eval_weight(const WeightSpec& spec, double t, const Point& x) {
    if (spec.variant == WeightVariant::parabolic_interior && (t <= 0.0 || t >= spec.T))
        fail("weight singular at endpoint");
    const JetPoint p = jet_point(t, x[0], spec.dim == 2 ? x[1] : 0.0);
    const JetD ell = eval(weight_field(spec), p);
    WeightEval e;
    e.ell = ell.value();
    e.theta = std::exp(e.ell);
    const JetD lt = ell.d(0);
    e.ell_t = lt.value();
    e.ell_tt = lt.d(0).value();
    for (int a = 0; a < spec.dim; ++a) {
        const JetD la = ell.d(1 + a);
        e.grad[a] = la.value();
        for (int b = 0; b < spec.dim; ++b) e.hess(a, b) = la.d(1 + b).value();
    }
    return e;
}

double parabolic_weight_decay_lambda(const WeightSpec& spec, const Grid& grid, const TimeGrid& time,
                                     double tol) {
    require(spec.variant == WeightVariant::parabolic_interior, "decay check needs parabolic_interior");
    WeightSpec unit = spec;
    unit.lambda = 1.0;
    double weakest = std::numeric_limits<double>::infinity();
    for (int k = 1; k < time.steps; ++k)
        for (int node = 0; node < grid.size(); ++node) {
            const double alpha = eval_weight(unit, time.t(k), grid.point(node)).ell;
            if (!(alpha < 0)) fail("alpha not negative at an interior time");
            if (k == 1 || k == time.steps - 1) weakest = std::min(weakest, -alpha);
        }
    return std::log(1.0 / tol) / weakest;
}

}  // namespace spde
