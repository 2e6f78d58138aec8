#include "spdelab/norms.hpp"

#include <cmath>

#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

bool is_space_time(NormKind kind) {
    return kind == NormKind::L2_time_space || kind == NormKind::L2_time_H1_space ||
           kind == NormKind::L2_time_H2_space || kind == NormKind::H1_time_L2_space;
}

NormKind spatial_part(NormKind kind) {
    switch (kind) {
        case NormKind::L2_time_space:
        case NormKind::H1_time_L2_space:
            return NormKind::L2_space;
        case NormKind::L2_time_H1_space:
            return NormKind::H1_space;
        case NormKind::L2_time_H2_space:
            return NormKind::H2_space;
        default:
            return kind;
    }
}

Norms::Norms(const Grid& grid) : grid_(grid), mass_(mass_weights(grid)) {
    interior_mass_ = Vec::Zero(grid.size());
    for (int node : grid.interior) interior_mass_[node] = mass_[node];

    const int N = grid.size();
    r_l2_ = SpMat(N, N);
    r_l2_.reserve(Eigen::VectorXi::Constant(N, 1));
    for (int i = 0; i < N; ++i) r_l2_.insert(i, i) = mass_[i];
    r_l2_.makeCompressed();

    SpMat Wm = r_l2_;
    r_h1_ = r_l2_;
    for (int a = 0; a < grid.dim; ++a) {
        const SpMat G = gradient_matrix(grid, a);
        r_h1_ += SpMat(G.transpose()) * Wm * G;
    }
    SpMat Wi(N, N);
    for (int node : grid.interior) Wi.insert(node, node) = interior_mass_[node];
    r_h2_ = r_h1_;
    for (int a = 0; a < grid.dim; ++a)
        for (int b = 0; b < grid.dim; ++b) {
            const SpMat D = second_difference(grid, a, b);
            r_h2_ += SpMat(D.transpose()) * Wi * D;  // cross terms enter twice
        }
    r_h1_.makeCompressed();
    r_h2_.makeCompressed();
}

const SpMat& Norms::riesz(NormKind kind) const {
    switch (kind) {
        case NormKind::L2_space:
            return r_l2_;
        case NormKind::H1_space:
            return r_h1_;
        case NormKind::H2_space:
            return r_h2_;
        default:
            fail("riesz matrix requested for a space-time kind");
    }
}

double Norms::space_sq(const Vec& u, NormKind kind) const {
    require(u.size() == grid_.size(), "shape error");
    if (kind == NormKind::L2_space) return u.dot(mass_.cwiseProduct(u));
    return u.dot(riesz(kind) * u);
}

double Norms::space_time_sq(const Mat& U, const TimeGrid& time, NormKind kind) const {
    require(U.rows() == grid_.size() && U.cols() == time.steps + 1, "shape error");
    const Vec tw = time_weights(time);
    const NormKind sk = spatial_part(kind);
    double s = 0.0;
    for (int k = 0; k <= time.steps; ++k) s += tw[k] * space_sq(U.col(k), sk);
    if (kind == NormKind::H1_time_L2_space) {
        const double dt = time.dt();
        for (int k = 1; k <= time.steps; ++k) {
            const Vec d = (U.col(k) - U.col(k - 1)) / dt;
            s += dt * space_sq(d, NormKind::L2_space);
        }
    }
    return s;
}

Vec time_weights(const TimeGrid& time) {
    Vec w = Vec::Constant(time.steps + 1, time.dt());
    w[0] *= 0.5;
    w[time.steps] *= 0.5;
    return w;
}

namespace {

double squared(const Norms& norms, const Mat& field, NormKind kind, const TimeGrid* time) {
    if (is_space_time(kind)) {
        require(time != nullptr, "shape error");
        return norms.space_time_sq(field, *time, kind);
    }
    require(field.cols() == 1, "shape error");
    return norms.space_sq(field.col(0), kind);
}

}  // namespace

double discrete_norm(const Norms& norms, const Mat& field, NormKind kind, const TimeGrid* time) {
    return std::sqrt(std::max(0.0, squared(norms, field, kind, time)));
}

double expected_norm(const Norms& norms, const std::vector<Mat>& fields, NormKind kind, const TimeGrid* time) {
    require(!fields.empty(), "shape error");
    std::vector<double> sq(fields.size());
    parallel_for(fields.size(), [&](std::size_t p) { sq[p] = squared(norms, fields[p], kind, time); });
    return std::sqrt(std::max(0.0, tree_sum(sq) / static_cast<double>(fields.size())));
}

}  // namespace spde
