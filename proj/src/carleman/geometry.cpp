#include "spdelab/carleman/geometry.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

namespace spde {

TensorField TensorField::scalar(double c) {
    return {constant_field(c), constant_field(0.0), constant_field(c), {}};
}

Eigen::Matrix2d TensorField::at(const Point& x, int dim, double t) const {
    const JetPoint p = jet_point(t, x[0], x[1]);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    m(0, 0) = eval(b11, p).value();
    if (dim == 2) {
        m(0, 1) = m(1, 0) = eval(b12, p).value();
        m(1, 1) = eval(b22, p).value();
    }
    return m;
}

Tensor TensorField::sample(const Grid& grid, double t) const {
    Tensor out;
    const int n = grid.size();
    out.b11.resize(n);
    out.b12 = Vec::Zero(n);
    out.b22 = Vec::Zero(n);
    for (int node = 0; node < n; ++node) {
        const Eigen::Matrix2d m = at(grid.point(node), grid.dim, t);
        out.b11[node] = m(0, 0);
        out.b12[node] = m(0, 1);
        out.b22[node] = m(1, 1);
    }
    return out;
}

PsiInfo build_psi(const Grid& grid, const Point& x0) {
    // Distance from x0 to the closed box.
    Point gap = Point::Zero();
    for (int a = 0; a < grid.dim; ++a) gap[a] = std::max({0.0, -x0[a], x0[a] - grid.length[a]});
    const double dist = gap.norm();
    if (dist == 0.0) fail("critical point inside domain");

    PsiInfo info;
    info.spec.x0 = x0;
    info.values.resize(grid.size());
    info.min = std::numeric_limits<double>::infinity();
    info.max = -info.min;
    for (int node = 0; node < grid.size(); ++node) {
        const double v = info.spec.at(grid.point(node), grid.dim);
        info.values[node] = v;
        info.min = std::min(info.min, v);
        info.max = std::max(info.max, v);
    }
    info.min_grad = 2.0 * dist;
    info.no_critical_point = true;
    info.vanishes_on_boundary = false;
    return info;
}

namespace {

// Matrix of the pseudoconvexity form at x:
// D_jk = sum_{j'k'} 2 b^{jk'} (b^{j'k} psi_{j'})_{k'} - b^{jk}_{k'} b^{j'k'} psi_{j'}.
Eigen::Matrix2d pseudoconvexity_matrix(const TensorField& b, const PsiSpec& psi, const Point& x, int dim) {
    const JetPoint p = jet_point(0.0, x[0], x[1]);
    const JetD psi_j = psi(p.x1, p.x2, dim);
    JetD bj[2][2] = {{eval(b.b11, p), eval(b.b12, p)}, {eval(b.b12, p), eval(b.b22, p)}};
    std::array<JetD, 2> dpsi{psi_j.d(1), psi_j.d(2)};
    Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) {
            double s = 0.0;
            for (int jp = 0; jp < dim; ++jp)
                for (int kp = 0; kp < dim; ++kp) {
                    s += 2.0 * bj[j][kp].value() * (bj[jp][k] * dpsi[jp]).d(1 + kp).value();
                    s -= bj[j][k].d(1 + kp).value() * bj[jp][kp].value() * dpsi[jp].value();
                }
            D(j, k) = s;
        }
    return D;
}

}  // namespace

PseudoconvexityReport check_pseudoconvexity(const Grid& grid, const TensorField& b, const PsiSpec& psi,
                                            std::uint64_t probe_seed) {
    PseudoconvexityReport r;
    r.mu0 = std::numeric_limits<double>::infinity();
    r.min_grad = std::numeric_limits<double>::infinity();
    const int dim = grid.dim;

    std::vector<Point> probes{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    std::mt19937_64 rng(probe_seed);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 32; ++i) probes.push_back({normal(rng), normal(rng)});
    for (auto& xi : probes) {
        if (dim == 1) xi = {1.0, 0.0};
        xi.normalize();
    }

    for (int node = 0; node < grid.size(); ++node) {
        const Point x = grid.point(node);
        const double g = psi.grad(x, dim).norm();
        if (g < r.min_grad) r.min_grad = g;

        const Eigen::Matrix2d B = b.at(x, dim);
        Eigen::Matrix2d D = pseudoconvexity_matrix(b, psi, x, dim);
        D = 0.5 * (D + D.transpose()).eval();
        double mu;
        Point dir{1.0, 0.0};
        if (dim == 1) {
            mu = D(0, 0) / B(0, 0);
        } else {
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(D, B);
            mu = es.eigenvalues()[0];
            dir = es.eigenvectors().col(0).normalized();
        }
        for (const auto& xi : probes) {
            const double q = xi.dot(B * xi);
            mu = std::min(mu, xi.dot(D * xi) / q);
        }
        if (mu < r.mu0) {
            r.mu0 = mu;
            r.node = node;
            r.direction = dir;
        }
    }
    if (!(r.min_grad > 0.0)) {
        r.ok = false;
        r.mu0 = std::max(r.mu0, 0.0);
        r.message = "psi has a critical point";
        return r;
    }
    if (!(r.mu0 > 0.0)) {
        r.ok = false;
        r.mu0 = 0.0;
        r.message = "pseudoconvexity form not positive";
        return r;
    }
    r.ok = true;
    return r;
}

namespace {

struct Extremes {
    double q_min = std::numeric_limits<double>::infinity();  // b(grad psi, grad psi)
    double q_max = 0.0;
    double psi_min = std::numeric_limits<double>::infinity();
    double psi_max = -std::numeric_limits<double>::infinity();
};

Extremes extremes(const Grid& grid, const TensorField& b, const PsiSpec& psi) {
    Extremes e;
    for (int node = 0; node < grid.size(); ++node) {
        const Point x = grid.point(node);
        const Point g = psi.grad(x, grid.dim);
        const double q = g.dot(b.at(x, grid.dim) * g);
        e.q_min = std::min(e.q_min, q);
        e.q_max = std::max(e.q_max, q);
        e.psi_min = std::min(e.psi_min, psi.at(x, grid.dim));
        e.psi_max = std::max(e.psi_max, psi.at(x, grid.dim));
    }
    return e;
}

Calibration try_observability(const Extremes& e, double mu0, double a, const CalibrationOptions& o) {
    Calibration c;
    c.mode = CalibrationMode::observability;
    c.a = a;
    c.shift = o.shift;
    c.mu0 = a * mu0;
    const double psi_max = a * e.psi_max + o.shift, psi_min = a * e.psi_min + o.shift;
    c.R1 = std::sqrt(std::max(psi_max, 0.0));
    c.R0 = std::sqrt(std::max(psi_min, 0.0));
    c.T = o.T ? *o.T : o.T_margin * 2.0 * c.R1;
    const double ratio = 2.0 * c.R1 / c.T;
    c.c1 = std::sqrt(ratio * ratio * ratio);  // geometric mean of the c1 interval ends
    c.c0 = 0.5 * (c.mu0 - 4.0 * c.c1);
    c.certificate = {
        {"1/4 b(grad psi, grad psi) >= R1^2", 0.25 * a * a * e.q_min, psi_max},
        {"R1^2 >= R0^2", psi_max, psi_min},
        {"T > T0 = 2 R1", c.T, 2.0 * c.R1},
        {"c1 > (2 R1 / T)^2", c.c1, ratio * ratio},
        {"c1 < 2 R1 / T", ratio, c.c1},
        {"c0 > 0", c.c0, 0.0},
        {"mu0 - 4 c1 - c0 > 0", c.mu0 - 4.0 * c.c1 - c.c0, 0.0},
    };
    return c;
}

Calibration try_source(const Extremes& e, double mu0, double a, const CalibrationOptions& o) {
    Calibration c;
    c.mode = CalibrationMode::source;
    c.a = a;
    c.shift = o.shift;
    c.mu0 = a * mu0;
    c.R1 = std::sqrt(std::max(a * e.psi_max + o.shift, 0.0));
    c.R0 = std::sqrt(std::max(a * e.psi_min + o.shift, 0.0));
    c.c1 = std::min(0.1, c.mu0 / 10.0);
    c.c0 = c.c1;
    const double q_min = a * a * e.q_min, q_max = a * a * e.q_max;
    const double upper = c.mu0 / (8.0 * c.c1 + c.c0) * q_min;
    if (o.T) {
        c.T = *o.T;
    } else {
        const double X = std::sqrt(std::max(upper, 0.0) * q_max);  // target for 4 c1^2 T^2
        c.T = std::sqrt(X) / (2.0 * c.c1);
    }
    const double X = 4.0 * c.c1 * c.c1 * c.T * c.T;
    c.certificate = {
        {"c1 > 0", c.c1, 0.0},
        {"c0 > 0", c.c0, 0.0},
        {"mu0 - 4 c1 - c0 > 0", c.mu0 - 4.0 * c.c1 - c.c0, 0.0},
        {"mu0 / (8 c1 + c0) min b(grad psi, grad psi) > 4 c1^2 T^2", upper, X},
        {"4 c1^2 T^2 > max b(grad psi, grad psi)", X, q_max},
    };
    return c;
}

}  // namespace

Calibration calibrate_hyperbolic(const Grid& grid, const TensorField& b, const PsiSpec& psi, CalibrationMode mode,
                                 const CalibrationOptions& options) {
    require(options.a_min >= 1.0 && options.a_max >= options.a_min, "calibration needs 1 <= a_min <= a_max");
    require(options.shift >= 0.0, "calibration shift must be nonnegative");
    if (options.T) require(*options.T > 0.0, "calibration horizon must be positive");

    const PseudoconvexityReport pc = check_pseudoconvexity(grid, b, psi);
    if (!pc.ok) {
        Calibration c;
        c.mode = mode;
        c.failure = "pseudoconvexity: " + pc.message;
        return c;
    }
    const Extremes e = extremes(grid, b, psi);

    Calibration best;
    int best_progress = -1;
    const int samples = std::max(1, options.a_samples);
    for (int i = 0; i < samples; ++i) {
        const double a = samples == 1
                             ? options.a_min
                             : options.a_min * std::pow(options.a_max / options.a_min, double(i) / (samples - 1));
        Calibration c = mode == CalibrationMode::observability ? try_observability(e, pc.mu0, a, options)
                                                               : try_source(e, pc.mu0, a, options);
        int progress = 0;
        while (progress < static_cast<int>(c.certificate.size()) && c.certificate[progress].slack() > 0.0)
            ++progress;
        if (progress == static_cast<int>(c.certificate.size())) {
            c.ok = true;
            return c;
        }
        if (progress > best_progress) {
            best_progress = progress;
            c.failure = c.certificate[progress].name;
            best = c;
        }
    }
    return best;
}

std::vector<int> observation_boundary(const Grid& grid, const TensorField& b, const PsiSpec& psi) {
    return select_boundary(grid, [&](int node) {
        const Point x = grid.point(node);
        const Point g = psi.grad(x, grid.dim);
        return g.dot(b.at(x, grid.dim) * grid.normal[node]) > 0.0;
    });
}

void check_aniso_parameters(const WeightSpec& spec, const Grid& grid) {
    require(spec.variant == WeightVariant::hyperbolic_aniso, "not an anisotropic weight");
    validate_weight(spec);
    require(grid.dim == 2, "hyperbolic_aniso needs two dimensions");
    const double reach = std::max(std::abs(0.0 - spec.x0[1]), std::abs(grid.length[1] - spec.x0[1]));
    if (!(spec.m > reach + spec.beta * grid.length[0])) fail("hyperbolic_aniso needs m > max|x' - x0'| + beta l");
}

}  // namespace spde
