#pragma once

#include <memory>
#include <vector>

#include "spdelab/norms.hpp"
#include "spdelab/parabolic.hpp"
#include "spdelab/tikhonov/cg.hpp"

namespace spde {

// Terminal map y0 -> y(T) per path on a fixed ensemble. Fields are full-node
// vectors vanishing on the boundary; only interior values are read.
class TerminalMap {
public:
    TerminalMap(const Grid& grid, const ParabolicCoefficients& c, const BrownianEnsemble& ens);

    const Grid& grid() const { return stepper_.grid(); }
    const BrownianEnsemble& ensemble() const { return ens_; }
    int paths() const { return ens_.paths(); }

    // Homogeneous part (f = g = 0).
    std::vector<Vec> apply_B(const Vec& y0) const;
    // Adjoint of apply_B for E<.,.>_{L2} on data and <.,.>_{L2} on y0.
    Vec apply_B_adjoint(const std::vector<Vec>& r) const;
    // Terminal of the zero-initial solve with the sources.
    const std::vector<Vec>& offset() const { return offset_; }

    // Interior-unknown pieces of the normal equation, Euclidean inner product:
    // (1/M) sum_p Pi_p' W Pi_p y and (1/M) sum_p Pi_p' W r_p.
    Vec normal_apply(const Vec& y_inner) const;
    Vec normal_rhs(const std::vector<Vec>& r) const;

private:
    Vec forward(const Vec& y_inner, int path) const;
    Vec backward(const Vec& r_inner, int path) const;

    BrownianEnsemble ens_;
    ParabolicStepper stepper_;
    Vec w_;  // interior mass weights
    std::vector<Vec> offset_;
};

struct TerminalProblem {
    Grid grid;
    ParabolicCoefficients coeffs;  // y0 is ignored
    BrownianEnsemble ensemble;
    std::vector<Vec> data;  // y_T^delta per path, all nodes
    double tau = 1e-6;
};

struct TikhonovResult {
    int iterations = 0;
    double residual = 0.0;             // final relative CG residual
    double functional = 0.0;           // J at the minimizer
    double misfit_sq = 0.0;            // data term at the minimizer
    double reg_sq = 0.0;               // regularization norm squared (unscaled)
    double variational_residual = 0.0; // max over random test directions
    long gram_applications = 0;
    bool converged = false;
    std::vector<double> history;
};

struct TerminalResult {
    Vec y0;
    TikhonovResult info;
};

// Floor applied to every regularization parameter.
inline constexpr double kRegFloor = 1e-12;

// CG on (B*B + tau R_H2) y0 = B*(y_T - offset), preconditioned by tau R_H2 + W.
TerminalResult solve_terminal(const TerminalProblem& prob, std::uint64_t check_seed = 11);
// Same normal equation, assembled and factored.
Vec terminal_dense_solve(const TerminalProblem& prob);

// J_tau(y0) = E|B y0 + offset - d|^2 + tau |y0|^2_H2 and its two parts.
struct TerminalFunctional {
    double value = 0.0, misfit_sq = 0.0, reg_sq = 0.0;
};
TerminalFunctional terminal_functional(const TerminalMap& map, const Norms& norms, const std::vector<Vec>& data,
                                       double tau, const Vec& y0);

}  // namespace spde
