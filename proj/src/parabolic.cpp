#include "spdelab/parabolic.hpp"

#include <cmath>

#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

SpMat lower_order_matrix(const Grid& grid, const std::array<Vec, 2>& b1, const Vec& b2) {
    const int N = grid.size();
    SpMat K(N, N);
    for (int a = 0; a < grid.dim; ++a) {
        if (b1[a].size() == 0) continue;
        require(b1[a].size() == N, "shape error");
        K += SpMat(b1[a].asDiagonal() * interior_gradient(grid, a));
    }
    if (b2.size() > 0) {
        require(b2.size() == N, "shape error");
        SpMat D(N, N);
        for (int node : grid.interior) D.insert(node, node) = b2[node];
        K += D;
    }
    return interior_block(grid, K);
}

Vec source_column(const Grid& grid, const Mat& src, int k) {
    if (src.size() == 0) return Vec::Zero(static_cast<Eigen::Index>(grid.interior.size()));
    require(src.rows() == grid.size() && k < src.cols(), "shape error");
    return restrict_interior(grid, src.col(k));
}

namespace {

Vec interior_or_zero(const Grid& grid, const Vec& v) {
    if (v.size() == 0) return Vec::Zero(static_cast<Eigen::Index>(grid.interior.size()));
    return restrict_interior(grid, v);
}

void check_sources(const Mat& src, const Grid& grid, const TimeGrid& time) {
    if (src.size() == 0) return;
    require(src.rows() == grid.size() && (src.cols() == time.steps || src.cols() == time.steps + 1), "shape error");
}

}  // namespace

ParabolicStepper::ParabolicStepper(const Grid& grid, const TimeGrid& time, const ParabolicCoefficients& c)
    : grid_(grid), time_(time), f_(c.f), g_(c.g) {
    check_ellipticity(grid, c.b);
    check_sources(c.f, grid, time);
    check_sources(c.g, grid, time);
    const SpMat L = interior_block(grid, divergence_operator(grid, c.b));
    const Eigen::Index n = L.rows();
    SpMat I(n, n);
    I.setIdentity();
    S_ = I - time.dt() * L;
    S_.makeCompressed();
    K_ = lower_order_matrix(grid, c.b1, c.b2);
    b3_ = interior_or_zero(grid, c.b3);
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(S_);
    if (ldlt_->info() != Eigen::Success) fail_numerical("implicit step matrix is singular");
}

Vec ParabolicStepper::step(const Vec& y, double dW) const {
    Vec rhs = y + time_.dt() * (K_ * y) + dW * b3_.cwiseProduct(y);
    return ldlt_->solve(rhs);
}

Vec ParabolicStepper::step_transpose(const Vec& r, double dW) const {
    const Vec s = ldlt_->solve(r);
    return s + time_.dt() * (K_.transpose() * s) + dW * b3_.cwiseProduct(s);
}

Vec ParabolicStepper::forcing(int k, double dW) const {
    const Vec rhs = time_.dt() * source_column(grid_, f_, k) + dW * source_column(grid_, g_, k);
    return ldlt_->solve(rhs);
}

SpMat ParabolicStepper::explicit_matrix(double dW) const {
    const Eigen::Index n = dim();
    SpMat A(n, n);
    A.setIdentity();
    A += time_.dt() * K_;
    SpMat B(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (b3_[i] != 0.0) B.insert(i, i) = dW * b3_[i];
    A += B;
    A.makeCompressed();
    return A;
}

Trajectory solve_parabolic(const ParabolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                           Storage storage) {
    return solve_parabolic(c, ens, grid, storage_indices(ens.time(), storage));
}

Trajectory solve_parabolic(const ParabolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                           const std::vector<int>& keep) {
    const TimeGrid& tg = ens.time();
    const ParabolicStepper stepper(grid, tg, c);
    require(c.y0.size() == grid.size(), "shape error");
    const bool nonlinear = static_cast<bool>(c.F) || static_cast<bool>(c.K);
    std::array<SpMat, 2> grad;
    for (int a = 0; a < grid.dim; ++a) grad[a] = interior_gradient(grid, a);

    Trajectory traj;
    traj.time = tg;
    traj.stored = keep;
    traj.y.assign(ens.paths(), Mat());
    parallel_for(static_cast<std::size_t>(ens.paths()), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        const Vec dW = ens.increments(p);
        Mat& out = traj.y[p];
        out = Mat::Zero(grid.size(), static_cast<Eigen::Index>(keep.size()));
        std::size_t next = 0;
        Vec y = restrict_interior(grid, c.y0);
        auto record = [&](int k) {
            if (next < keep.size() && keep[next] == k) out.col(static_cast<Eigen::Index>(next++)) = extend_interior(grid, y);
        };
        record(0);
        for (int k = 0; k < tg.steps; ++k) {
            Vec y_next = stepper.step(y, dW[k]);
            if (stepper.has_forcing()) y_next += stepper.forcing(k, dW[k]);
            if (nonlinear) {
                const Vec full = extend_interior(grid, y);
                Vec extra = Vec::Zero(y.size());
                Point gxy = Point::Zero();
                Vec gx = grad[0] * full, gy = grid.dim == 2 ? Vec(grad[1] * full) : Vec();
                for (std::size_t s = 0; s < grid.interior.size(); ++s) {
                    const int node = grid.interior[s];
                    const Point x = grid.point(node);
                    gxy[0] = gx[node];
                    if (grid.dim == 2) gxy[1] = gy[node];
                    if (c.F) extra[s] += tg.dt() * c.F(tg.t(k), x, full[node], gxy);
                    if (c.K) extra[s] += dW[k] * c.K(tg.t(k), x, full[node]);
                }
                y_next += stepper.solve(extra);
            }
            y = std::move(y_next);
            if (!y.allFinite()) fail_numerical("blow-up");
            record(k + 1);
        }
    });
    return traj;
}

}  // namespace spde
