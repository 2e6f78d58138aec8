#pragma once

#include <vector>

#include "spdelab/brownian.hpp"
#include "spdelab/hyperbolic.hpp"
#include "spdelab/norms.hpp"
#include "spdelab/parabolic.hpp"
#include "spdelab/tikhonov/terminal.hpp"

namespace spde {

enum class CauchyKind { parabolic, hyperbolic };

// Discrete defect operator of one path. A space-time field is a slice x
// (steps+1) matrix (slice = all nodes for the parabolic problem, interior
// nodes for the hyperbolic one); its per-step defect r^k lives on interior
// rows for the active steps k in [first, steps).
//
// Parabolic: r^k = u^{k+1} - u^k - dt L u^{k+1} - dt (a1.grad + a2) u^k - a3 u^k dW_k,
// with L implicit as in the forward scheme.
// Hyperbolic, k >= 1, with ubar = (u^{k+1} + 2u^k + u^{k-1}) / 4:
//   r^k = (u^{k+1} - 2u^k + u^{k-1}) / dt - dt L ubar - b1 (u^k - u^{k-1})
//         - dt (b2.grad + b3) u^k - b4 u^k dW_k.
// Fields produced by the forward schemes with g = 0 have r^k = dt f^k.
class CauchyMap {
public:
    static CauchyMap parabolic(const Grid& grid, const TimeGrid& time, const Tensor& b, const std::array<Vec, 2>& a1,
                               const Vec& a2, const Vec& a3);
    static CauchyMap hyperbolic(const Grid& grid, const TimeGrid& time, const HyperbolicCoefficients& c);

    CauchyKind kind() const { return kind_; }
    const Grid& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }
    Eigen::Index slice() const { return slice_; }
    Eigen::Index rows() const { return rows_; }
    int first() const { return first_; }

    // Full-node field <-> slice field.
    Mat to_slice(const Mat& full) const;
    Mat to_full(const Mat& slice) const;

    Mat apply(const Mat& U, const Vec& dW) const;            // rows x steps
    Mat apply_transpose(const Mat& R, const Vec& dW) const;  // slice x (steps+1)
    // dt f^k on the active steps.
    Mat source_steps(const Mat& f) const;

    // H1(0,T;L2) misfit of per-step defects e: with E^k = sum_{first<=j<k} e^j,
    //   sum_{k>first} dt |E^k|^2 + sum_k |e^k|^2 / dt   (interior L2 weights).
    double misfit(const Mat& e) const;
    Mat misfit_riesz(const Mat& e) const;  // half the gradient
    // Regularization norm: L2(0,T;H2), plus H1(0,T;L2) in the hyperbolic case.
    double reg(const Mat& V) const;
    Mat reg_riesz(const Mat& V) const;

    // Noise-free sparse assembly of the defect map, (rows*steps) x (slice*(steps+1)).
    SpMat assemble(const Vec& dW) const;
    // Block-diagonal (in time) regularization matrix.
    SpMat reg_matrix() const;
    const Vec& weights() const { return w_; }

private:
    CauchyKind kind_ = CauchyKind::parabolic;
    Grid grid_;
    TimeGrid time_;
    Eigen::Index slice_ = 0, rows_ = 0;
    int first_ = 0;
    SpMat prev_, cur_, next_;  // rows x slice
    Vec noise_;                // per row, multiplies dW_k u^k at that row's node
    SpMat noise_select_;       // rows x slice
    Vec w_;                    // interior L2 weights (rows)
    SpMat R_;                  // slice x slice
    Vec tw_;                   // trapezoid time weights
};

struct Defect {
    Mat per_step;    // nodes x steps, zero outside interior rows
    Mat cumulative;  // nodes x (steps+1), P u at t_k
};
Defect apply_P(const CauchyMap& map, const Mat& u_full, const Vec& dW);

struct CauchyProblem {
    Grid grid;  // gamma0 must be marked
    Tensor b;
    std::array<Vec, 2> a1;
    Vec a2, a3;
    BrownianEnsemble ensemble;
    Mat f;                    // nodes x steps or steps+1; empty means zero
    std::vector<Mat> g1, g2;  // per path, |gamma0| x (steps+1)
    std::vector<Mat> anchor;  // optional, per path nodes x (steps+1)
    double tau = 1e-4;
};

struct HyperbolicCauchyProblem {
    Grid grid;                      // gamma0 must be marked
    HyperbolicCoefficients coeffs;  // f, g, z0, z1 are ignored
    BrownianEnsemble ensemble;
    Mat f;
    std::vector<Mat> h;  // per path Neumann data, |gamma0| x (steps+1)
    std::vector<Mat> anchor;
    double gamma = 1e-4;
};

struct CauchyResult {
    std::vector<Mat> u;  // per path, nodes x (steps+1)
    std::vector<Mat> anchor;
    TikhonovResult info;  // iterations and residuals are maxima over paths, functional values means
};

CauchyResult solve_cauchy_parabolic(const CauchyProblem& prob, std::uint64_t check_seed = 13);
CauchyResult solve_cauchy_hyperbolic(const HyperbolicCauchyProblem& prob, std::uint64_t check_seed = 13);
// Dense oracles; total unknowns over all paths are capped at 2000.
std::vector<Mat> cauchy_dense_solve(const CauchyProblem& prob);
std::vector<Mat> cauchy_dense_solve(const HyperbolicCauchyProblem& prob);

}  // namespace spde
