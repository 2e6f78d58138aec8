#include "spdelab/hyperbolic.hpp"

#include <cmath>

#include "spdelab/error.hpp"
#include "spdelab/parabolic.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

namespace {

double sup(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vec interior_or_zero(const Grid& grid, const Vec& v) {
    if (v.size() == 0) return Vec::Zero(static_cast<Eigen::Index>(grid.interior.size()));
    return restrict_interior(grid, v);
}

}  // namespace

CoefficientBounds coefficient_bounds(const HyperbolicCoefficients& c) {
    CoefficientBounds r;
    double b2 = 0.0;
    for (const Vec& v : c.b2) b2 = std::max(b2, sup(v));
    r.r1 = sup(c.b1) + b2 + sup(c.b4);
    r.r2 = sup(c.b3);
    return r;
}

void check_cfl(const Grid& grid, const TimeGrid& time, const Tensor& b) {
    double smax = 0.0;
    for (int node = 0; node < grid.size(); ++node) {
        double s = b.b11[node];
        if (grid.dim == 2) s += 2.0 * b.b12[node] + b.b22[node];
        smax = std::max(smax, s);
    }
    require(smax > 0.0, "ellipticity violated");
    if (time.dt() > grid.min_spacing() / std::sqrt(smax) * (1.0 + 1e-12)) fail("unstable step size");
}

HyperbolicStepper::HyperbolicStepper(const Grid& grid, const TimeGrid& time, const HyperbolicCoefficients& c)
    : grid_(grid), time_(time), f_(c.f), g_(c.g) {
    check_ellipticity(grid, c.b);
    check_cfl(grid, time, c.b);
    for (const Mat* src : {&c.f, &c.g})
        if (src->size() > 0)
            require(src->rows() == grid.size() && (src->cols() == time.steps || src->cols() == time.steps + 1),
                    "shape error");
    L_ = interior_block(grid, divergence_operator(grid, c.b));
    Ky_ = lower_order_matrix(grid, c.b2, c.b3);
    b1_ = interior_or_zero(grid, c.b1);
    b4_ = interior_or_zero(grid, c.b4);
    const Eigen::Index n = L_.rows();
    SpMat I(n, n);
    I.setIdentity();
    const double q = 0.25 * time.dt() * time.dt();
    const SpMat S = I - q * L_;
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(S);
    if (ldlt_->info() != Eigen::Success) fail_numerical("implicit step matrix is singular");
}

Vec HyperbolicStepper::start_velocity(const Vec& y0, const Vec& z1) const {
    const Vec acc = L_ * y0 + b1_.cwiseProduct(z1) + Ky_ * y0 + source_column(grid_, f_, 0);
    return z1 - 0.5 * time_.dt() * acc;
}

void HyperbolicStepper::step(Vec& y, Vec& v, int k, double dW) const {
    const double dt = time_.dt();
    Vec rhs = dt * (L_ * y) + dt * (b1_.cwiseProduct(v) + Ky_ * y) + dW * b4_.cwiseProduct(y);
    if (f_.size() > 0) rhs += dt * source_column(grid_, f_, k);
    if (g_.size() > 0) rhs += dW * source_column(grid_, g_, k);
    v += ldlt_->solve(rhs);
    y += dt * v;
}

Trajectory solve_hyperbolic(const HyperbolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                            Storage storage) {
    return solve_hyperbolic(c, ens, grid, storage_indices(ens.time(), storage));
}

Trajectory solve_hyperbolic(const HyperbolicCoefficients& c, const BrownianEnsemble& ens, const Grid& grid,
                            const std::vector<int>& keep) {
    const TimeGrid& tg = ens.time();
    const HyperbolicStepper stepper(grid, tg, c);
    require(c.z0.size() == grid.size() && c.z1.size() == grid.size(), "shape error");
    const Vec y0 = restrict_interior(grid, c.z0), z1 = restrict_interior(grid, c.z1);
    const Vec v0 = stepper.start_velocity(y0, z1);

    Trajectory traj;
    traj.time = tg;
    traj.stored = keep;
    traj.y.assign(ens.paths(), Mat());
    traj.v.assign(ens.paths(), Mat());
    parallel_for(static_cast<std::size_t>(ens.paths()), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        const Vec dW = ens.increments(p);
        Mat& oy = traj.y[p];
        Mat& ov = traj.v[p];
        oy = Mat::Zero(grid.size(), static_cast<Eigen::Index>(keep.size()));
        ov = oy;
        std::size_t next = 0;
        Vec y = y0, v = v0;
        auto record = [&](int k) {
            if (next < keep.size() && keep[next] == k) {
                const auto col = static_cast<Eigen::Index>(next++);
                oy.col(col) = extend_interior(grid, y);
                ov.col(col) = extend_interior(grid, k == 0 ? z1 : v);
            }
        };
        record(0);
        for (int k = 0; k < tg.steps; ++k) {
            stepper.step(y, v, k, dW[k]);
            if (!y.allFinite() || !v.allFinite()) fail_numerical("blow-up");
            record(k + 1);
        }
    });
    return traj;
}

double expected_energy(const Trajectory& traj, const Grid& grid, int k) {
    require(!traj.v.empty(), "energy needs a hyperbolic trajectory");
    const SpMat lap = divergence_operator(grid, Tensor::scalar(grid, 1.0));
    const Vec w = mass_weights(grid);
    const double dt = traj.time.dt();
    std::vector<double> e(traj.paths());
    parallel_for(e.size(), [&](std::size_t p) {
        const Vec y = traj.at(static_cast<int>(p), k);
        const Vec v = traj.velocity(static_cast<int>(p), k);
        const Vec ybar = k == 0 ? y : Vec(y - 0.5 * dt * v);
        e[p] = v.dot(w.cwiseProduct(v)) - ybar.dot(w.cwiseProduct(lap * ybar));
    });
    return tree_sum(e) / traj.paths();
}

EnergyReport check_energy_estimate(const Trajectory& traj, const HyperbolicCoefficients& c, const Grid& grid,
                                   double s, double t, double C) {
    const TimeGrid& tg = traj.time;
    require(s >= 0.0 && s <= tg.T && t >= 0.0 && t <= tg.T, "time outside [0, T]");
    const int ks = static_cast<int>(std::lround(s / tg.dt()));
    const int kt = static_cast<int>(std::lround(t / tg.dt()));
    const CoefficientBounds r = coefficient_bounds(c);

    const Vec w = mass_weights(grid);
    const Vec tw = time_weights(tg);
    double sources = 0.0;
    for (const Mat* src : {&c.f, &c.g})
        for (Eigen::Index k = 0; k < src->cols(); ++k)
            sources += tw[std::min<Eigen::Index>(k, tg.steps)] * src->col(k).dot(w.cwiseProduct(src->col(k)));

    EnergyReport rep;
    rep.numerator = expected_energy(traj, grid, kt);
    rep.denominator = std::exp(C * (r.r1 * r.r1 + std::sqrt(r.r2) + 1.0) * tg.T) * expected_energy(traj, grid, ks) +
                      C * sources;
    if (rep.denominator == 0.0) {
        if (rep.numerator != 0.0) fail_numerical("energy created from nothing");
        rep.vacuous = true;
        rep.pass = true;
        return rep;
    }
    rep.rho = rep.numerator / rep.denominator;
    rep.pass = rep.rho <= 1.0;
    return rep;
}

std::vector<Mat> neumann_trace(const Trajectory& traj, const Grid& grid, const std::vector<int>& subset) {
    require(!subset.empty(), "empty observation boundary");
    const SpMat Nm = neumann_matrix(grid, subset);
    std::vector<Mat> out(traj.paths());
    for (int p = 0; p < traj.paths(); ++p) out[p] = Nm * traj.y[p];
    return out;
}

Vec boundary_weights(const Grid& grid, const std::vector<int>& nodes) {
    Vec w(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (grid.dim == 1) {
            w[i] = 1.0;
            continue;
        }
        const int node = nodes[i];
        const int c[2] = {grid.ix(node), grid.iy(node)};
        double s = 0.0;
        for (int a = 0; a < 2; ++a) {
            if (c[a] != 0 && c[a] != grid.n[a] - 1) continue;
            const int t = 1 - a;  // tangent axis of the face normal to a
            const bool end = c[t] == 0 || c[t] == grid.n[t] - 1;
            s += end ? 0.5 * grid.h[t] : grid.h[t];
        }
        w[i] = s;
    }
    return w;
}

double strong_error(const Trajectory& traj, const Grid& grid, const Trajectory& ref, const Grid& ref_grid) {
    require(traj.paths() == ref.paths() && traj.time.T == ref.time.T && grid.dim == ref_grid.dim, "grid mismatch");
    int r[2] = {1, 1};
    for (int a = 0; a < grid.dim; ++a) {
        require((ref_grid.n[a] - 1) % (grid.n[a] - 1) == 0 && grid.length[a] == ref_grid.length[a], "grid mismatch");
        r[a] = (ref_grid.n[a] - 1) / (grid.n[a] - 1);
    }
    return strong_error(traj, grid, [&](int p) {
        const Vec fine = ref.terminal(p);
        Vec coarse(grid.size());
        for (int node = 0; node < grid.size(); ++node)
            coarse[node] = fine[ref_grid.index(grid.ix(node) * r[0], grid.iy(node) * r[1])];
        return coarse;
    });
}

double strong_error(const Trajectory& traj, const Grid& grid, const std::function<Vec(int)>& exact_terminal) {
    const Vec w = mass_weights(grid);
    std::vector<double> e(traj.paths());
    for (int p = 0; p < traj.paths(); ++p) {
        const Vec d = traj.terminal(p) - exact_terminal(p);
        e[p] = d.dot(w.cwiseProduct(d));
    }
    return std::sqrt(tree_sum(e) / traj.paths());
}

}  // namespace spde
