#include "spdelab/tikhonov/cg.hpp"

#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "spdelab/error.hpp"

namespace spde {

CgResult cg_solve(const GramOperator& gram, const Vec& rhs, double tol, int max_iter, const LinearMap& preconditioner) {
    require(rhs.size() == gram.dim(), "shape error");
    CgResult out;
    out.x = Vec::Zero(rhs.size());
    const double bnorm = rhs.norm();
    out.residuals.push_back(1.0);
    if (bnorm == 0.0) {
        out.converged = true;
        return out;
    }
    Vec r = rhs;
    Vec z = preconditioner ? preconditioner(r) : r;
    Vec p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
        const Vec Ap = gram(p);
        const double curvature = p.dot(Ap);
        if (!(curvature > 0.0)) fail_numerical("Gram not SPD");
        const double alpha = rz / curvature;
        out.x += alpha * p;
        r -= alpha * Ap;
        out.iterations = it + 1;
        const double rel = r.norm() / bnorm;
        out.residuals.push_back(rel);
        if (rel <= tol) {
            out.converged = true;
            break;
        }
        z = preconditioner ? preconditioner(r) : r;
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return out;
}

void check_gram(const GramOperator& gram, int pairs, std::uint64_t seed, double tol) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    auto draw = [&] {
        Vec v(gram.dim());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
        return v;
    };
    for (int i = 0; i < pairs; ++i) {
        const Vec u = draw(), v = draw();
        const Vec Gu = gram(u), Gv = gram(v);
        const double a = Gu.dot(v), b = u.dot(Gv);
        const double scale = Gu.norm() * v.norm() + u.norm() * Gv.norm();
        if (std::abs(a - b) > tol * scale) fail_numerical("Gram not SPD");
        if (!(Gu.dot(u) > 0.0) || !(Gv.dot(v) > 0.0)) fail_numerical("Gram not SPD");
    }
}

Mat assemble(const GramOperator& gram) {
    const Eigen::Index n = gram.dim();
    Mat G(n, n);
    Vec e = Vec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        G.col(j) = gram(e);
        e[j] = 0.0;
    }
    return G;
}

Vec dense_solve(const GramOperator& gram, const Vec& rhs, Eigen::Index cap) {
    if (gram.dim() > cap) fail("dense oracle size cap exceeded");
    Mat G = assemble(gram);
    G = 0.5 * (G + G.transpose()).eval();
    const Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) fail_numerical("Gram not SPD");
    return llt.solve(rhs);
}

}  // namespace spde
