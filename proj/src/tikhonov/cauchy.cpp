#include "spdelab/tikhonov/cauchy.hpp"

#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

namespace {

SpMat identity(Eigen::Index n) {
    SpMat I(n, n);
    I.setIdentity();
    return I;
}

SpMat diagonal(const Vec& d) {
    SpMat D(d.size(), d.size());
    D.reserve(Eigen::VectorXi::Constant(d.size(), 1));
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] != 0.0) D.insert(i, i) = d[i];
    D.makeCompressed();
    return D;
}

Vec interior_or_zero(const Grid& grid, const Vec& v) {
    if (v.size() == 0) return Vec::Zero(static_cast<Eigen::Index>(grid.interior.size()));
    require(v.size() == grid.size(), "shape error");
    return restrict_interior(grid, v);
}

// Interior rows of a full-node operator.
SpMat interior_rows(const Grid& grid, const SpMat& full) {
    return SpMat(SpMat(extension_matrix(grid).transpose()) * full);
}

// Append block B at (r0, c0).
void add_block(Triplets& t, const SpMat& B, Eigen::Index r0, Eigen::Index c0, double scale = 1.0) {
    for (int k = 0; k < B.outerSize(); ++k)
        for (SpMat::InnerIterator it(B, k); it; ++it)
            t.emplace_back(static_cast<int>(r0 + it.row()), static_cast<int>(c0 + it.col()), scale * it.value());
}

}  // namespace

CauchyMap CauchyMap::parabolic(const Grid& grid, const TimeGrid& time, const Tensor& b, const std::array<Vec, 2>& a1,
                               const Vec& a2, const Vec& a3) {
    check_ellipticity(grid, b);
    CauchyMap m;
    m.kind_ = CauchyKind::parabolic;
    m.grid_ = grid;
    m.time_ = time;
    m.slice_ = grid.size();
    m.rows_ = static_cast<Eigen::Index>(grid.interior.size());
    m.first_ = 0;
    const double dt = time.dt();
    const SpMat sel = SpMat(extension_matrix(grid).transpose());
    const SpMat L = interior_rows(grid, divergence_operator(grid, b));
    SpMat K(grid.size(), grid.size());
    for (int a = 0; a < grid.dim; ++a) {
        if (a1[a].size() == 0) continue;
        require(a1[a].size() == grid.size(), "shape error");
        K += SpMat(a1[a].asDiagonal() * interior_gradient(grid, a));
    }
    if (a2.size() > 0) {
        require(a2.size() == grid.size(), "shape error");
        Vec d = Vec::Zero(grid.size());
        for (int node : grid.interior) d[node] = a2[node];
        K += diagonal(d);
    }
    m.next_ = sel - dt * L;
    m.cur_ = -sel - dt * interior_rows(grid, K);
    m.prev_ = SpMat(m.rows_, m.slice_);
    m.noise_ = interior_or_zero(grid, a3);
    m.noise_select_ = sel;
    const Norms norms(grid);
    m.w_ = restrict_interior(grid, norms.mass());
    m.R_ = norms.riesz(NormKind::H2_space);
    m.tw_ = time_weights(time);
    return m;
}

CauchyMap CauchyMap::hyperbolic(const Grid& grid, const TimeGrid& time, const HyperbolicCoefficients& c) {
    check_ellipticity(grid, c.b);
    check_cfl(grid, time, c.b);
    CauchyMap m;
    m.kind_ = CauchyKind::hyperbolic;
    m.grid_ = grid;
    m.time_ = time;
    m.slice_ = static_cast<Eigen::Index>(grid.interior.size());
    m.rows_ = m.slice_;
    m.first_ = 1;
    const double dt = time.dt();
    const SpMat I = identity(m.slice_);
    const SpMat L = interior_block(grid, divergence_operator(grid, c.b));
    const SpMat K = lower_order_matrix(grid, c.b2, c.b3);
    const SpMat B1 = diagonal(interior_or_zero(grid, c.b1));
    m.next_ = I / dt - 0.25 * dt * L;
    m.cur_ = -2.0 / dt * I - 0.5 * dt * L - B1 - dt * K;
    m.prev_ = I / dt - 0.25 * dt * L + B1;
    m.noise_ = interior_or_zero(grid, c.b4);
    m.noise_select_ = I;
    const Norms norms(grid);
    m.w_ = restrict_interior(grid, norms.mass());
    m.R_ = interior_block(grid, norms.riesz(NormKind::H2_space));
    m.tw_ = time_weights(time);
    return m;
}

Mat CauchyMap::to_slice(const Mat& full) const {
    require(full.rows() == grid_.size(), "shape error");
    if (kind_ == CauchyKind::parabolic) return full;
    Mat out(slice_, full.cols());
    for (Eigen::Index k = 0; k < full.cols(); ++k) out.col(k) = restrict_interior(grid_, full.col(k));
    return out;
}

Mat CauchyMap::to_full(const Mat& slice) const {
    require(slice.rows() == slice_, "shape error");
    if (kind_ == CauchyKind::parabolic) return slice;
    Mat out(grid_.size(), slice.cols());
    for (Eigen::Index k = 0; k < slice.cols(); ++k) out.col(k) = extend_interior(grid_, slice.col(k));
    return out;
}

Mat CauchyMap::apply(const Mat& U, const Vec& dW) const {
    const int N = time_.steps;
    require(U.rows() == slice_ && U.cols() == N + 1 && dW.size() == N, "shape error");
    Mat R = Mat::Zero(rows_, N);
    for (int k = first_; k < N; ++k) {
        Vec r = next_ * U.col(k + 1) + cur_ * U.col(k);
        if (k > 0 && prev_.nonZeros() > 0) r += prev_ * U.col(k - 1);
        r -= dW[k] * noise_.cwiseProduct(noise_select_ * U.col(k));
        R.col(k) = r;
    }
    return R;
}

Mat CauchyMap::apply_transpose(const Mat& R, const Vec& dW) const {
    const int N = time_.steps;
    require(R.rows() == rows_ && R.cols() == N && dW.size() == N, "shape error");
    Mat U = Mat::Zero(slice_, N + 1);
    for (int k = first_; k < N; ++k) {
        const Vec r = R.col(k);
        U.col(k + 1) += next_.transpose() * r;
        U.col(k) += cur_.transpose() * r - dW[k] * (noise_select_.transpose() * noise_.cwiseProduct(r));
        if (k > 0 && prev_.nonZeros() > 0) U.col(k - 1) += prev_.transpose() * r;
    }
    return U;
}

Mat CauchyMap::source_steps(const Mat& f) const {
    const int N = time_.steps;
    Mat S = Mat::Zero(rows_, N);
    if (f.size() == 0) return S;
    require(f.rows() == grid_.size() && (f.cols() == N || f.cols() == N + 1), "shape error");
    for (int k = first_; k < N; ++k) S.col(k) = time_.dt() * restrict_interior(grid_, f.col(k));
    return S;
}

double CauchyMap::misfit(const Mat& e) const {
    const double dt = time_.dt();
    Vec E = Vec::Zero(rows_);
    double s = 0.0;
    for (int k = first_; k < time_.steps; ++k) {
        const Vec ek = e.col(k);
        s += ek.dot(w_.cwiseProduct(ek)) / dt;
        E += ek;
        s += dt * E.dot(w_.cwiseProduct(E));
    }
    return s;
}

Mat CauchyMap::misfit_riesz(const Mat& e) const {
    const int N = time_.steps;
    const double dt = time_.dt();
    // cum.col(k) = E^k for k in (first, N].
    Mat cum = Mat::Zero(rows_, N + 1);
    for (int k = first_; k < N; ++k) cum.col(k + 1) = cum.col(k) + e.col(k);
    Mat out = Mat::Zero(rows_, N);
    Vec tail = Vec::Zero(rows_);  // sum_{k > j} E^k
    for (int j = N - 1; j >= first_; --j) {
        tail += cum.col(j + 1);
        out.col(j) = w_.cwiseProduct(e.col(j) / dt + dt * tail);
    }
    return out;
}

double CauchyMap::reg(const Mat& V) const {
    double s = 0.0;
    for (int k = 0; k <= time_.steps; ++k) s += tw_[k] * V.col(k).dot(R_ * V.col(k));
    if (kind_ == CauchyKind::hyperbolic) {
        const double dt = time_.dt();
        for (int k = 1; k <= time_.steps; ++k) {
            const Vec d = V.col(k) - V.col(k - 1);
            s += d.dot(w_.cwiseProduct(d)) / dt;
        }
    }
    return s;
}

Mat CauchyMap::reg_riesz(const Mat& V) const {
    Mat out(slice_, V.cols());
    for (int k = 0; k <= time_.steps; ++k) out.col(k) = tw_[k] * (R_ * V.col(k));
    if (kind_ == CauchyKind::hyperbolic) {
        const double dt = time_.dt();
        for (int k = 1; k <= time_.steps; ++k) {
            const Vec d = w_.cwiseProduct(V.col(k) - V.col(k - 1)) / dt;
            out.col(k) += d;
            out.col(k - 1) -= d;
        }
    }
    return out;
}

SpMat CauchyMap::assemble(const Vec& dW) const {
    const int N = time_.steps;
    Triplets t;
    for (int k = first_; k < N; ++k) {
        const Eigen::Index r0 = k * rows_;
        add_block(t, next_, r0, (k + 1) * slice_);
        add_block(t, cur_, r0, k * slice_);
        if (k > 0) add_block(t, prev_, r0, (k - 1) * slice_);
        if (dW.size() > 0) add_block(t, SpMat(diagonal(noise_) * noise_select_), r0, k * slice_, -dW[k]);
    }
    SpMat A(rows_ * N, slice_ * (N + 1));
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

SpMat CauchyMap::reg_matrix() const {
    const int N = time_.steps;
    Triplets t;
    for (int k = 0; k <= N; ++k) add_block(t, R_, k * slice_, k * slice_, tw_[k]);
    if (kind_ == CauchyKind::hyperbolic) {
        const double c = 1.0 / time_.dt();
        for (int k = 1; k <= N; ++k)
            for (Eigen::Index i = 0; i < slice_; ++i) {
                const int a = static_cast<int>(k * slice_ + i), b = static_cast<int>((k - 1) * slice_ + i);
                t.emplace_back(a, a, c * w_[i]);
                t.emplace_back(b, b, c * w_[i]);
                t.emplace_back(a, b, -c * w_[i]);
                t.emplace_back(b, a, -c * w_[i]);
            }
    }
    SpMat M(slice_ * (N + 1), slice_ * (N + 1));
    M.setFromTriplets(t.begin(), t.end());
    return M;
}

Defect apply_P(const CauchyMap& map, const Mat& u_full, const Vec& dW) {
    const Grid& grid = map.grid();
    const int N = map.time().steps;
    const Mat r = map.apply(map.to_slice(u_full), dW);
    Defect d;
    d.per_step = Mat::Zero(grid.size(), N);
    d.cumulative = Mat::Zero(grid.size(), N + 1);
    for (int k = 0; k < N; ++k) {
        d.per_step.col(k) = extend_interior(grid, r.col(k));
        d.cumulative.col(k + 1) = d.cumulative.col(k) + d.per_step.col(k);
    }
    return d;
}

namespace {

// Data slots on gamma0, one time slice at a time: C u^k = d^k. The null space
// is parametrized by eliminating one pivot unknown per constraint row.
struct Constraint {
    Mat C;                   // m x slice
    std::vector<int> pivot;  // eliminated slice index per row
    SpMat Z;                 // slice x free
    SpMat R;                 // for the minimum-norm lifting
    Mat R_inv_Ct;            // slice x m
    Eigen::LLT<Mat> schur;   // C R^{-1} C'

    Constraint(const Mat& C_in, const SpMat& R_in) : C(C_in), R(R_in) {
        const Eigen::Index m = C.rows(), n = C.cols();
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        for (Eigen::Index r = 0; r < m; ++r) {
            Eigen::Index best = -1;
            for (Eigen::Index j = 0; j < n; ++j)
                if (!used[j] && C(r, j) != 0.0 && (best < 0 || std::abs(C(r, j)) > std::abs(C(r, best)))) best = j;
            if (best < 0) fail("degenerate constraint set");
            used[best] = 1;
            pivot.push_back(static_cast<int>(best));
        }
        std::vector<int> free;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!used[j]) free.push_back(static_cast<int>(j));
        Mat CE(m, m), CF(m, static_cast<Eigen::Index>(free.size()));
        for (Eigen::Index r = 0; r < m; ++r) CE.col(r) = C.col(pivot[r]);
        for (std::size_t j = 0; j < free.size(); ++j) CF.col(static_cast<Eigen::Index>(j)) = C.col(free[j]);
        const Eigen::FullPivLU<Mat> lu(CE);
        if (m > 0 && !lu.isInvertible()) fail("degenerate constraint set");
        const Mat T = m > 0 ? Mat(-lu.solve(CF)) : Mat(0, static_cast<Eigen::Index>(free.size()));
        const double cut = 1e-14 * std::max(1.0, T.size() > 0 ? T.cwiseAbs().maxCoeff() : 0.0);
        Triplets t;
        for (std::size_t j = 0; j < free.size(); ++j) {
            t.emplace_back(free[j], static_cast<int>(j), 1.0);
            for (Eigen::Index r = 0; r < m; ++r)
                if (std::abs(T(r, static_cast<Eigen::Index>(j))) > cut)
                    t.emplace_back(pivot[r], static_cast<int>(j), T(r, static_cast<Eigen::Index>(j)));
        }
        Z = SpMat(n, static_cast<Eigen::Index>(free.size()));
        Z.setFromTriplets(t.begin(), t.end());

        const Eigen::SimplicialLDLT<SpMat> ldlt(R);
        if (ldlt.info() != Eigen::Success) fail_numerical("regularization matrix is singular");
        R_inv_Ct = ldlt.solve(Mat(C.transpose()));
        schur.compute(C * R_inv_Ct);
    }

    // Field with C F^k = d^k of least regularization norm per slice.
    Mat lift(const Mat& d) const { return R_inv_Ct * schur.solve(d); }

    void check(const Mat& F, const Mat& d, double h) const {
        const Mat gap = C * F - d;
        const double scale = std::max({1.0, d.cwiseAbs().maxCoeff(), F.cwiseAbs().maxCoeff() / h});
        if (gap.cwiseAbs().maxCoeff() > 1e-9 * scale) fail("anchor infeasible");
    }
};

struct PathData {
    Vec dW;
    Mat d;       // constraint data, m x (steps+1)
    Mat anchor;  // slice x (steps+1), empty: lift
};

struct CauchySystem {
    CauchyMap map;
    Constraint cons;
    double reg;
    Mat source;  // dt f^k
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> pre;

    CauchySystem(CauchyMap m, const Mat& C, const Mat& f, double reg_param)
        : map(std::move(m)), cons(C, map.kind() == CauchyKind::parabolic
                                         ? Norms(map.grid()).riesz(NormKind::H2_space)
                                         : interior_block(map.grid(), Norms(map.grid()).riesz(NormKind::H2_space))),
          reg(std::max(reg_param, kRegFloor)), source(map.source_steps(f)) {
        require(reg_param > 0.0, "regularization parameter must be positive");
        // Preconditioner: noise-free defects, local part of the misfit.
        const int N = map.time().steps;
        const SpMat A0 = map.assemble(Vec());
        Vec q = Vec::Zero(map.rows() * N);
        for (int k = map.first(); k < N; ++k) q.segment(k * map.rows(), map.rows()) = map.weights() / map.time().dt();
        Triplets t;
        for (int k = 0; k <= N; ++k) add_block(t, cons.Z, k * map.slice(), k * cons.Z.cols());
        SpMat Zb(map.slice() * (N + 1), cons.Z.cols() * (N + 1));
        Zb.setFromTriplets(t.begin(), t.end());
        const SpMat H = SpMat(A0.transpose()) * q.asDiagonal() * A0 + reg * map.reg_matrix();
        const SpMat P = SpMat(Zb.transpose()) * H * Zb;
        pre = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(P);
        if (pre->info() != Eigen::Success) fail_numerical("preconditioner factorization failed");
    }

    Eigen::Index free() const { return cons.Z.cols(); }
    int cols() const { return map.time().steps + 1; }

    Mat expand(const Vec& w) const {
        return cons.Z * Eigen::Map<const Mat>(w.data(), free(), cols());
    }
    Vec reduce(const Mat& X) const {
        const Mat r = SpMat(cons.Z.transpose()) * X;
        return Eigen::Map<const Vec>(r.data(), r.size());
    }

    GramOperator gram(const Vec& dW) const {
        return GramOperator(free() * cols(), [this, dW](const Vec& w) -> Vec {
            const Mat V = expand(w);
            const Mat e = map.apply(V, dW);
            return reduce(map.apply_transpose(map.misfit_riesz(e), dW) + reg * map.reg_riesz(V));
        });
    }

    Mat anchor(const PathData& p) const {
        if (p.anchor.size() == 0) return cons.lift(p.d);
        require(p.anchor.rows() == map.slice() && p.anchor.cols() == cols(), "shape error");
        cons.check(p.anchor, p.d, map.grid().min_spacing());
        return p.anchor;
    }

    Vec rhs(const Mat& F, const Vec& dW) const {
        const Mat e0 = map.apply(F, dW) - source;
        return -reduce(map.apply_transpose(map.misfit_riesz(e0), dW));
    }
};

struct PathOutcome {
    Mat u, F;
    CgResult cg;
    double functional = 0.0, misfit = 0.0, reg = 0.0, variational = 0.0;
    long applications = 0;
};

PathOutcome solve_path(const CauchySystem& sys, const PathData& pd, std::uint64_t seed, bool check) {
    PathOutcome out;
    out.F = sys.anchor(pd);
    const GramOperator gram = sys.gram(pd.dW);
    if (check) check_gram(gram, 3, seed);
    const Vec b = sys.rhs(out.F, pd.dW);
    out.cg = cg_solve(gram, b, 1e-10, 10 * static_cast<int>(gram.dim()),
                      [&](const Vec& r) -> Vec { return sys.pre->solve(r); });
    const Mat V = sys.expand(out.cg.x);
    out.u = out.F + V;
    const Mat e = sys.map.apply(out.u, pd.dW) - sys.source;
    out.misfit = sys.map.misfit(e);
    out.reg = sys.map.reg(V);
    out.functional = out.misfit + sys.reg * out.reg;

    // Variational equation against random directions of the constraint space.
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> normal;
    const Mat Qe = sys.map.misfit_riesz(e);
    const Mat RV = sys.map.reg_riesz(V);
    for (int trial = 0; trial < 5; ++trial) {
        Vec w(gram.dim());
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
        const Mat H = sys.expand(w);
        const Mat Ah = sys.map.apply(H, pd.dW);
        const double lhs = Qe.cwiseProduct(Ah).sum() + sys.reg * RV.cwiseProduct(H).sum();
        const double scale =
            std::sqrt(out.misfit * sys.map.misfit(Ah)) + sys.reg * std::sqrt(out.reg * sys.map.reg(H));
        if (scale > 0.0) out.variational = std::max(out.variational, std::abs(lhs) / scale);
    }
    out.applications = gram.applications();
    return out;
}

CauchyResult solve_all(const CauchySystem& sys, const std::vector<PathData>& paths, std::uint64_t seed) {
    std::vector<PathOutcome> outs(paths.size());
    parallel_for(paths.size(), [&](std::size_t p) {
        outs[p] = solve_path(sys, paths[p], path_seed(seed, p), p == 0);
    });
    CauchyResult r;
    std::vector<double> fun, mis, reg;
    r.info.converged = true;
    for (std::size_t p = 0; p < outs.size(); ++p) {
        const PathOutcome& o = outs[p];
        r.u.push_back(sys.map.to_full(o.u));
        r.anchor.push_back(sys.map.to_full(o.F));
        r.info.iterations = std::max(r.info.iterations, o.cg.iterations);
        r.info.residual = std::max(r.info.residual, o.cg.residuals.back());
        r.info.variational_residual = std::max(r.info.variational_residual, o.variational);
        r.info.converged = r.info.converged && o.cg.converged;
        r.info.gram_applications += o.applications;
        fun.push_back(o.functional);
        mis.push_back(o.misfit);
        reg.push_back(o.reg);
    }
    const double M = static_cast<double>(outs.size());
    r.info.functional = tree_sum(fun) / M;
    r.info.misfit_sq = tree_sum(mis) / M;
    r.info.reg_sq = tree_sum(reg) / M;
    r.info.history = outs.front().cg.residuals;
    return r;
}

std::vector<Mat> dense_all(const CauchySystem& sys, const std::vector<PathData>& paths) {
    if (static_cast<Eigen::Index>(paths.size()) * sys.free() * sys.cols() > 2000)
        fail("dense oracle size cap exceeded");
    std::vector<Mat> out;
    for (const PathData& pd : paths) {
        const Mat F = sys.anchor(pd);
        const Vec w = dense_solve(sys.gram(pd.dW), sys.rhs(F, pd.dW));
        out.push_back(sys.map.to_full(F + sys.expand(w)));
    }
    return out;
}

void check_gamma0(const Grid& grid) {
    if (grid.gamma0.empty()) fail("empty observation boundary");
}

Mat slot_data(const std::vector<Mat>& a, const std::vector<Mat>* b, std::size_t p, Eigen::Index nodes, int cols) {
    require(p < a.size() && a[p].rows() == nodes && a[p].cols() == cols, "shape error");
    if (!b) return a[p];
    require(p < b->size() && (*b)[p].rows() == nodes && (*b)[p].cols() == cols, "shape error");
    Mat d(2 * nodes, cols);
    d << a[p], (*b)[p];
    return d;
}

CauchySystem parabolic_system(const CauchyProblem& prob) {
    check_gamma0(prob.grid);
    CauchyMap map = CauchyMap::parabolic(prob.grid, prob.ensemble.time(), prob.b, prob.a1, prob.a2, prob.a3);
    const auto m = static_cast<Eigen::Index>(prob.grid.gamma0.size());
    Mat C = Mat::Zero(2 * m, prob.grid.size());
    for (Eigen::Index i = 0; i < m; ++i) C(i, prob.grid.gamma0[i]) = 1.0;
    C.bottomRows(m) = Mat(neumann_matrix(prob.grid, prob.grid.gamma0));
    return CauchySystem(std::move(map), C, prob.f, prob.tau);
}

std::vector<PathData> parabolic_paths(const CauchyProblem& prob) {
    const int M = prob.ensemble.paths(), cols = prob.ensemble.time().steps + 1;
    const auto m = static_cast<Eigen::Index>(prob.grid.gamma0.size());
    require(static_cast<int>(prob.g1.size()) == M && static_cast<int>(prob.g2.size()) == M,
            "data/ensemble path count mismatch");
    require(prob.anchor.empty() || static_cast<int>(prob.anchor.size()) == M, "data/ensemble path count mismatch");
    std::vector<PathData> out(M);
    for (int p = 0; p < M; ++p) {
        out[p].dW = prob.ensemble.increments(p);
        out[p].d = slot_data(prob.g1, &prob.g2, p, m, cols);
        if (!prob.anchor.empty()) out[p].anchor = prob.anchor[p];
    }
    return out;
}

CauchySystem hyperbolic_system(const HyperbolicCauchyProblem& prob) {
    check_gamma0(prob.grid);
    CauchyMap map = CauchyMap::hyperbolic(prob.grid, prob.ensemble.time(), prob.coeffs);
    // Dirichlet values are zero, so only interior columns of the Neumann rows remain.
    const Mat C(SpMat(neumann_matrix(prob.grid, prob.grid.gamma0) * extension_matrix(prob.grid)));
    return CauchySystem(std::move(map), C, prob.f, prob.gamma);
}

std::vector<PathData> hyperbolic_paths(const HyperbolicCauchyProblem& prob, const CauchyMap& map) {
    const int M = prob.ensemble.paths(), cols = prob.ensemble.time().steps + 1;
    const auto m = static_cast<Eigen::Index>(prob.grid.gamma0.size());
    require(static_cast<int>(prob.h.size()) == M, "data/ensemble path count mismatch");
    require(prob.anchor.empty() || static_cast<int>(prob.anchor.size()) == M, "data/ensemble path count mismatch");
    std::vector<PathData> out(M);
    for (int p = 0; p < M; ++p) {
        out[p].dW = prob.ensemble.increments(p);
        out[p].d = slot_data(prob.h, nullptr, p, m, cols);
        if (!prob.anchor.empty()) {
            const Mat& a = prob.anchor[p];
            require(a.rows() == prob.grid.size() && a.cols() == cols, "shape error");
            for (int node : prob.grid.boundary)
                if (a.row(node).cwiseAbs().maxCoeff() > 0.0) fail("anchor infeasible");
            out[p].anchor = map.to_slice(a);
        }
    }
    return out;
}

}  // namespace

CauchyResult solve_cauchy_parabolic(const CauchyProblem& prob, std::uint64_t check_seed) {
    const CauchySystem sys = parabolic_system(prob);
    return solve_all(sys, parabolic_paths(prob), check_seed);
}

CauchyResult solve_cauchy_hyperbolic(const HyperbolicCauchyProblem& prob, std::uint64_t check_seed) {
    const CauchySystem sys = hyperbolic_system(prob);
    return solve_all(sys, hyperbolic_paths(prob, sys.map), check_seed);
}

std::vector<Mat> cauchy_dense_solve(const CauchyProblem& prob) {
    const CauchySystem sys = parabolic_system(prob);
    return dense_all(sys, parabolic_paths(prob));
}

std::vector<Mat> cauchy_dense_solve(const HyperbolicCauchyProblem& prob) {
    const CauchySystem sys = hyperbolic_system(prob);
    return dense_all(sys, hyperbolic_paths(prob, sys.map));
}

}  // namespace spde
