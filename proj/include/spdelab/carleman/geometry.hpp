#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spdelab/carleman/jet.hpp"
#include "spdelab/carleman/weights.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/operators.hpp"

namespace spde {

// Principal coefficients as analytic fields, so that derivatives of b enter
// the conditions exactly.
struct TensorField {
    JetField b11, b12, b22;
    // Set only to describe a possibly nonsymmetric field; empty means b21 = b12.
    JetField b21;

    static TensorField scalar(double c);
    // Nodal samples at time t.
    Tensor sample(const Grid& grid, double t = 0.0) const;
    Eigen::Matrix2d at(const Point& x, int dim, double t = 0.0) const;
};

struct PsiInfo {
    PsiSpec spec;
    Vec values;
    double min = 0.0, max = 0.0;
    double min_grad = 0.0;
    bool no_critical_point = false;
    // The canonical choice never vanishes on the boundary; recorded so that
    // consumers can refuse it when they need psi = 0 on the boundary.
    bool vanishes_on_boundary = false;
};

// psi = |x - x0|^2 with x0 outside the closed box.
PsiInfo build_psi(const Grid& grid, const Point& x0);

struct PseudoconvexityReport {
    bool ok = false;
    double mu0 = 0.0;
    double min_grad = 0.0;
    int node = -1;         // binding (or violating) node
    Point direction{0.0, 0.0};
    std::string message;
};

// Largest mu0 with xi' D xi >= mu0 xi' b xi at every node, where D is the
// matrix of the pseudoconvexity form. Exact in dimension <= 2 through a
// generalized eigenproblem; a probe set of directions double-checks it.
PseudoconvexityReport check_pseudoconvexity(const Grid& grid, const TensorField& b, const PsiSpec& psi,
                                            std::uint64_t probe_seed = 17);

enum class CalibrationMode { observability, source };

struct CalibrationOptions {
    double a_min = 1.0, a_max = 100.0;
    int a_samples = 41;           // log-spaced
    double shift = 0.0;
    std::optional<double> T;      // fixed horizon instead of searching
    double T_margin = 1.1;        // T = margin * 2 R1 when searching
};

struct Inequality {
    std::string name;
    double lhs = 0.0, rhs = 0.0;
    double slack() const { return lhs - rhs; }
};

struct Calibration {
    bool ok = false;
    CalibrationMode mode = CalibrationMode::observability;
    double a = 1.0, shift = 0.0;
    double c0 = 0.0, c1 = 0.0, T = 0.0;
    double mu0 = 0.0;  // of the rescaled psi
    double R0 = 0.0, R1 = 0.0;
    std::vector<Inequality> certificate;
    std::string failure;  // tightest violated constraint when !ok
};

Calibration calibrate_hyperbolic(const Grid& grid, const TensorField& b, const PsiSpec& psi, CalibrationMode mode,
                                 const CalibrationOptions& options = {});

// Boundary nodes with sum_jk b^{jk} psi_{x_j} nu^k > 0.
std::vector<int> observation_boundary(const Grid& grid, const TensorField& b, const PsiSpec& psi);

// m > max|x' - x0'| + beta * l for the anisotropic weight on this grid.
void check_aniso_parameters(const WeightSpec& spec, const Grid& grid);

}  // namespace spde
