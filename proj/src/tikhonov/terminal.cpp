#include "spdelab/tikhonov/terminal.hpp"

#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>

#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

TerminalMap::TerminalMap(const Grid& grid, const ParabolicCoefficients& c, const BrownianEnsemble& ens)
    : ens_(ens), stepper_(grid, ens.time(), c) {
    require(!c.F && !c.K, "terminal map needs linear coefficients");
    w_ = restrict_interior(grid, mass_weights(grid));
    offset_.assign(ens.paths(), Vec());
    parallel_for(static_cast<std::size_t>(ens.paths()), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        Vec y = Vec::Zero(stepper_.dim());
        if (stepper_.has_forcing()) {
            const Vec dW = ens_.increments(p);
            for (int k = 0; k < ens_.time().steps; ++k) y = stepper_.step(y, dW[k]) + stepper_.forcing(k, dW[k]);
        }
        offset_[pi] = extend_interior(grid, y);
    });
}

Vec TerminalMap::forward(const Vec& y_inner, int path) const {
    const Vec dW = ens_.increments(path);
    Vec y = y_inner;
    for (int k = 0; k < ens_.time().steps; ++k) y = stepper_.step(y, dW[k]);
    return y;
}

Vec TerminalMap::backward(const Vec& r_inner, int path) const {
    const Vec dW = ens_.increments(path);
    Vec s = r_inner;
    for (int k = ens_.time().steps - 1; k >= 0; --k) s = stepper_.step_transpose(s, dW[k]);
    return s;
}

std::vector<Vec> TerminalMap::apply_B(const Vec& y0) const {
    require(y0.size() == grid().size(), "shape error");
    const Vec inner = restrict_interior(grid(), y0);
    std::vector<Vec> out(paths());
    parallel_for(out.size(), [&](std::size_t p) { out[p] = extend_interior(grid(), forward(inner, static_cast<int>(p))); });
    return out;
}

Vec TerminalMap::normal_rhs(const std::vector<Vec>& r) const {
    require(static_cast<int>(r.size()) == paths(), "shape error");
    std::vector<Vec> parts(r.size());
    parallel_for(r.size(), [&](std::size_t p) {
        require(r[p].size() == grid().size(), "shape error");
        parts[p] = backward(w_.cwiseProduct(restrict_interior(grid(), r[p])), static_cast<int>(p));
    });
    return tree_sum(parts) / static_cast<double>(paths());
}

Vec TerminalMap::apply_B_adjoint(const std::vector<Vec>& r) const {
    return extend_interior(grid(), normal_rhs(r).cwiseQuotient(w_));
}

Vec TerminalMap::normal_apply(const Vec& y_inner) const {
    std::vector<Vec> parts(paths());
    parallel_for(parts.size(), [&](std::size_t p) {
        const int path = static_cast<int>(p);
        parts[p] = backward(w_.cwiseProduct(forward(y_inner, path)), path);
    });
    return tree_sum(parts) / static_cast<double>(paths());
}

TerminalFunctional terminal_functional(const TerminalMap& map, const Norms& norms, const std::vector<Vec>& data,
                                       double tau, const Vec& y0) {
    const std::vector<Vec> By = map.apply_B(y0);
    std::vector<double> sq(By.size());
    for (std::size_t p = 0; p < By.size(); ++p)
        sq[p] = norms.space_sq(By[p] + map.offset()[p] - data[p], NormKind::L2_space);
    TerminalFunctional j;
    j.misfit_sq = tree_sum(sq) / static_cast<double>(sq.size());
    j.reg_sq = norms.space_sq(y0, NormKind::H2_space);
    j.value = j.misfit_sq + tau * j.reg_sq;
    return j;
}

namespace {

struct TerminalSystem {
    TerminalMap map;
    Norms norms;
    SpMat R;  // interior block of the H2 Riesz matrix
    double tau;
    std::vector<Vec> residual_data;  // d - offset

    explicit TerminalSystem(const TerminalProblem& prob)
        : map(prob.grid, prob.coeffs, prob.ensemble), norms(prob.grid),
          R(interior_block(prob.grid, norms.riesz(NormKind::H2_space))), tau(std::max(prob.tau, kRegFloor)) {
        require(prob.tau > 0.0, "regularization parameter must be positive");
        require(static_cast<int>(prob.data.size()) == prob.ensemble.paths(), "data/ensemble path count mismatch");
        residual_data.resize(prob.data.size());
        for (std::size_t p = 0; p < prob.data.size(); ++p) {
            require(prob.data[p].size() == prob.grid.size(), "shape error");
            residual_data[p] = prob.data[p] - map.offset()[p];
        }
    }

    GramOperator gram() const {
        return GramOperator(R.rows(), [this](const Vec& v) -> Vec { return map.normal_apply(v) + tau * (R * v); });
    }
    Vec rhs() const { return map.normal_rhs(residual_data); }
};

}  // namespace

TerminalResult solve_terminal(const TerminalProblem& prob, std::uint64_t check_seed) {
    const TerminalSystem sys(prob);
    const GramOperator gram = sys.gram();
    check_gram(gram, 3, check_seed);

    const Vec w = restrict_interior(prob.grid, mass_weights(prob.grid));
    SpMat P = sys.tau * sys.R;
    for (Eigen::Index i = 0; i < w.size(); ++i) P.coeffRef(i, i) += w[i];
    const Eigen::SimplicialLDLT<SpMat> pre(P);
    if (pre.info() != Eigen::Success) fail_numerical("preconditioner factorization failed");

    const Vec b = sys.rhs();
    const int max_iter = 10 * static_cast<int>(gram.dim());
    const CgResult cg = cg_solve(gram, b, 1e-10, max_iter, [&](const Vec& r) -> Vec { return pre.solve(r); });

    TerminalResult out;
    out.y0 = extend_interior(prob.grid, cg.x);
    out.info.iterations = cg.iterations;
    out.info.residual = cg.residuals.back();
    out.info.converged = cg.converged;
    out.info.history = cg.residuals;

    const TerminalFunctional j = terminal_functional(sys.map, sys.norms, prob.data, sys.tau, out.y0);
    out.info.functional = j.value;
    out.info.misfit_sq = j.misfit_sq;
    out.info.reg_sq = j.reg_sq;

    // Variational equation E<A y, B phi> + tau <y, phi>_H2 = E<y_T, B phi>.
    std::mt19937_64 rng(check_seed + 1);
    std::normal_distribution<double> normal;
    const std::vector<Vec> Ay = [&] {
        std::vector<Vec> v = sys.map.apply_B(out.y0);
        for (std::size_t p = 0; p < v.size(); ++p) v[p] += sys.map.offset()[p] - prob.data[p];
        return v;
    }();
    for (int trial = 0; trial < 5; ++trial) {
        Vec phi = Vec::Zero(prob.grid.size());
        for (int node : prob.grid.interior) phi[node] = normal(rng);
        const std::vector<Vec> Bphi = sys.map.apply_B(phi);
        std::vector<double> dots(Bphi.size()), a2(Bphi.size()), b2(Bphi.size());
        const Vec& mass = sys.norms.mass();
        for (std::size_t p = 0; p < Bphi.size(); ++p) {
            dots[p] = Ay[p].dot(mass.cwiseProduct(Bphi[p]));
            a2[p] = Ay[p].dot(mass.cwiseProduct(Ay[p]));
            b2[p] = Bphi[p].dot(mass.cwiseProduct(Bphi[p]));
        }
        const double M = static_cast<double>(Bphi.size());
        const SpMat& R = sys.norms.riesz(NormKind::H2_space);
        const double reg = out.y0.dot(R * phi);
        const double lhs = tree_sum(dots) / M + sys.tau * reg;
        const double scale = std::sqrt(tree_sum(a2) / M * tree_sum(b2) / M) +
                             sys.tau * std::sqrt(out.y0.dot(R * out.y0) * phi.dot(R * phi));
        if (scale > 0.0) out.info.variational_residual = std::max(out.info.variational_residual, std::abs(lhs) / scale);
    }
    out.info.gram_applications = gram.applications();
    return out;
}

Vec terminal_dense_solve(const TerminalProblem& prob) {
    const TerminalSystem sys(prob);
    return extend_interior(prob.grid, dense_solve(sys.gram(), sys.rhs()));
}

}  // namespace spde
