#include "spdelab/carleman/identity.hpp"

#include <cmath>

#include "spdelab/operators.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/stats.hpp"

namespace spde {

namespace {

using J = JetD;
using J2 = std::array<std::array<J, 2>, 2>;

J2 tensor_jets(const TensorField& b, const JetPoint& p, int dim) {
    J2 m;
    m[0][0] = eval(b.b11, p);
    m[0][1] = m[1][0] = dim == 2 ? eval(b.b12, p) : J(0.0);
    m[1][1] = dim == 2 ? eval(b.b22, p) : J(0.0);
    if (dim == 2 && b.b21) {
        const J b21 = eval(b.b21, p);
        if (std::abs(b21.value() - m[0][1].value()) > 1e-14 * (1.0 + std::abs(m[0][1].value())))
            fail("symmetry required");
    }
    return m;
}

J div_b_grad(const J2& b, const J& f, int dim) {
    J out(0.0);
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) out += (b[j][k] * f.d(1 + j)).d(1 + k);
    return out;
}

// Shared weight terms at one point.
struct Frame {
    int dim = 1;
    J2 b;
    J ell, theta, lt, psi, phi;
    std::array<J, 2> lx;
    J A, B;
    J2 c;
};

J lx_form(const Frame& f) {
    // sum_jk b lx_j lx_k - b_{x_k} lx_j - b ell_{x_j x_k}
    J s(0.0);
    for (int j = 0; j < f.dim; ++j)
        for (int k = 0; k < f.dim; ++k)
            s += f.b[j][k] * f.lx[j] * f.lx[k] - f.b[j][k].d(1 + k) * f.lx[j] - f.b[j][k] * f.lx[j].d(1 + k);
    return s;
}

Frame base_frame(const IdentityCase& c, const JetPoint& p) {
    Frame f;
    f.dim = c.dim;
    f.b = tensor_jets(c.b, p, c.dim);
    f.ell = eval(c.ell, p);
    f.theta = exp(f.ell);
    f.lt = f.ell.d(0);
    f.lx = {f.ell.d(1), c.dim == 2 ? f.ell.d(2) : J(0.0)};
    f.phi = c.phi ? eval(c.phi, p) : J(1.0);
    return f;
}

Frame parabolic_frame(const IdentityCase& c, const JetPoint& p) {
    Frame f = base_frame(c, p);
    const int n = c.dim;
    f.psi = eval(c.psi ? c.psi : default_parabolic_psi(c.b, c.ell, n), p);
    f.A = -lx_form(f) - f.psi - f.lt;
    J div(0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) div += (f.A * f.b[j][k] * f.lx[j]).d(1 + k);
    f.B = 2.0 * (f.A * f.psi - div) - f.A.d(0) - div_b_grad(f.b, f.psi, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            J s(0.0);
            for (int jp = 0; jp < n; ++jp)
                for (int kp = 0; kp < n; ++kp)
                    s += 2.0 * f.b[j][kp] * (f.b[jp][k] * f.lx[jp]).d(1 + kp) -
                         (f.b[j][k] * f.b[jp][kp] * f.lx[jp]).d(1 + kp);
            f.c[j][k] = s - 0.5 * f.b[j][k].d(0) + f.psi * f.b[j][k];
        }
    return f;
}

Frame hyperbolic_frame(const IdentityCase& c, const JetPoint& p) {
    Frame f = base_frame(c, p);
    const int n = c.dim;
    f.psi = eval(c.psi ? c.psi : default_hyperbolic_psi(c.b, c.ell, n, c.c0_lambda), p);
    f.A = f.phi * (f.lt * f.lt - f.lt.d(0)) - lx_form(f) - f.psi;
    J div(0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) div += (f.A * f.b[j][k] * f.lx[j]).d(1 + k);
    const J phipsi = f.phi * f.psi;
    f.B = f.A * f.psi + (f.phi * f.A * f.lt).d(0) - div +
          0.5 * (phipsi.d(0).d(0) - div_b_grad(f.b, f.psi, n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            J s(0.0);
            for (int jp = 0; jp < n; ++jp)
                for (int kp = 0; kp < n; ++kp)
                    s += 2.0 * f.b[j][kp] * (f.b[jp][k] * f.lx[jp]).d(1 + kp) -
                         (f.b[j][k] * f.b[jp][kp] * f.lx[jp]).d(1 + kp);
            f.c[j][k] = (f.phi * f.b[j][k] * f.lt).d(0) + s + f.psi * f.b[j][k];
        }
    return f;
}

// Coefficients of the parabolic identity for u and the du-coefficient du:
//   LHS = lhs_du * [du] + lhs_dt dt,  RHS = rhs_dt dt + rhs_dd [du]^2 + d(energy).
// The dt part of dw is theta_t u dt, which lives in lhs_dt.
struct ParabolicTerms {
    J lhs_du, lhs_dt, rhs_dt, rhs_dd, energy;
};

ParabolicTerms parabolic_terms(const Frame& f, const J& u, const J& du) {
    const int n = f.dim;
    const J w = f.theta * u;
    const std::array<J, 2> wx{w.d(1), n == 2 ? w.d(2) : J(0.0)};
    const J I = -div_b_grad(f.b, w, n) + f.A * w;
    const J dw_du = f.theta * du;
    const J dw_dt = f.theta.d(0) * u;

    ParabolicTerms t;
    J flux_du(0.0), flux_dt(0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            flux_du += (f.b[j][k] * wx[j] * dw_du).d(1 + k);
            J inner(0.0);
            for (int jp = 0; jp < n; ++jp)
                for (int kp = 0; kp < n; ++kp)
                    inner += 2.0 * f.b[j][k] * f.b[jp][kp] * f.lx[jp] * wx[j] * wx[kp] -
                             f.b[j][k] * f.b[jp][kp] * f.lx[j] * wx[jp] * wx[kp];
            inner += f.psi * f.b[j][k] * wx[j] * w - f.b[j][k] * (f.A * f.lx[j] + 0.5 * f.psi.d(1 + j)) * w * w;
            flux_dt += (f.b[j][k] * wx[j] * dw_dt + inner).d(1 + k);
        }
    t.lhs_du = 2.0 * f.theta * I * du + 2.0 * flux_du;
    t.lhs_dt = -2.0 * f.theta * I * div_b_grad(f.b, u, n) + 2.0 * flux_dt;

    J quad(0.0), grad_sq(0.0), qv(0.0);
    const std::array<J, 2> dux{du.d(1), n == 2 ? du.d(2) : J(0.0)};
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            quad += f.c[j][k] * wx[j] * wx[k];
            grad_sq += f.b[j][k] * wx[j] * wx[k];
            qv += f.b[j][k] * (dux[j] + f.lx[j] * du) * (dux[k] + f.lx[k] * du);
        }
    t.rhs_dt = 2.0 * quad + f.B * w * w + 2.0 * I * I;
    const J th2 = f.theta * f.theta;
    t.rhs_dd = -th2 * f.A * du * du - th2 * qv;
    t.energy = grad_sq + f.A * w * w;
    return t;
}

// Hyperbolic identity for u, u_t and the du_t-coefficient dut:
//   LHS = lhs_dut [du_t] + lhs_dt dt + d(energy),  RHS = rhs_dt dt + rhs_dd [du_t]^2.
struct HyperbolicTerms {
    J lhs_dut, lhs_dt, rhs_dt, rhs_dd, energy;
};

HyperbolicTerms hyperbolic_terms(const Frame& f, const J& u, const J& ut, const J& dut) {
    const int n = f.dim;
    const J w = f.theta * u;
    const J wt = f.theta * (f.lt * u + ut);
    const std::array<J, 2> wx{w.d(1), n == 2 ? w.d(2) : J(0.0)};

    J blw(0.0);  // sum b^{jk} ell_{x_j} w_{x_k}
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) blw += f.b[j][k] * f.lx[j] * wx[k];
    const J I = -2.0 * f.phi * f.lt * wt + 2.0 * blw + f.psi * w;

    HyperbolicTerms t;
    t.lhs_dut = f.theta * I * f.phi * dut;

    J flux(0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            J inner(0.0);
            for (int jp = 0; jp < n; ++jp)
                for (int kp = 0; kp < n; ++kp)
                    inner += 2.0 * f.b[j][k] * f.b[jp][kp] * f.lx[jp] * wx[j] * wx[kp] -
                             f.b[j][k] * f.b[jp][kp] * f.lx[j] * wx[jp] * wx[kp];
            inner += -2.0 * f.phi * f.b[j][k] * f.lt * wx[j] * wt + f.phi * f.b[j][k] * f.lx[j] * wt * wt +
                     f.psi * f.b[j][k] * wx[j] * w - (f.A * f.lx[j] + 0.5 * f.psi.d(1 + j)) * f.b[j][k] * w * w;
            flux += inner.d(1 + k);
        }
    t.lhs_dt = -f.theta * I * div_b_grad(f.b, u, n) + flux;

    J grad_sq(0.0), quad(0.0), div_phi(0.0), cross(0.0);
    const J philt = f.phi * f.lt;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            grad_sq += f.b[j][k] * wx[j] * wx[k];
            quad += f.c[j][k] * wx[j] * wx[k];
            div_phi += (f.phi * f.b[j][k] * f.lx[j]).d(1 + k);
            cross += ((f.phi * f.b[j][k] * f.lx[k]).d(0) + f.b[j][k] * philt.d(1 + k)) * wx[j] * wt;
        }
    const J phipsi = f.phi * f.psi;
    t.energy = f.phi * f.lt * grad_sq - 2.0 * f.phi * blw * wt + f.phi * f.phi * f.lt * wt * wt -
               phipsi * wt * w + (f.phi * f.A * f.lt + 0.5 * phipsi.d(0)) * w * w;
    t.rhs_dt = ((f.phi * f.phi * f.lt).d(0) + div_phi - phipsi) * wt * wt - 2.0 * cross + quad + f.B * w * w + I * I;
    t.rhs_dd = f.phi * f.phi * f.theta * f.theta * f.lt * dut * dut;
    return t;
}

void require_fields(const IdentityCase& c) {
    require(c.dim == 1 || c.dim == 2, "identity dimension must be 1 or 2");
    require(static_cast<bool>(c.ell), "identity case needs a weight");
    require(static_cast<bool>(c.b.b11), "identity case needs b");
}

}  // namespace

JetField default_parabolic_psi(const TensorField& b, const JetField& ell, int dim) {
    return [b, ell, dim](const J& t, const J& x1, const J& x2) {
        const JetPoint p{t, x1, x2};
        const J2 bj = tensor_jets(b, p, dim);
        const J l = eval(ell, p);
        J s(0.0);
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k) s += bj[j][k] * l.d(1 + j).d(1 + k);
        return 2.0 * s;
    };
}

JetField default_hyperbolic_psi(const TensorField& b, const JetField& ell, int dim, double c0_lambda) {
    return [b, ell, dim, c0_lambda](const J& t, const J& x1, const J& x2) {
        const JetPoint p{t, x1, x2};
        const J l = eval(ell, p);
        return l.d(0).d(0) + div_b_grad(tensor_jets(b, p, dim), l, dim) - c0_lambda;
    };
}

std::vector<SamplePoint> cylinder_points(int dim, double T, const std::array<double, 2>& length, int nt, int nx) {
    std::vector<SamplePoint> pts;
    for (int a = 1; a <= nt; ++a) {
        const double t = T * a / (nt + 1);
        for (int i = 1; i <= nx; ++i) {
            const double x1 = length[0] * i / (nx + 1);
            if (dim == 1) {
                pts.push_back({t, x1, 0.0});
                continue;
            }
            for (int j = 1; j <= nx; ++j) pts.push_back({t, x1, length[1] * j / (nx + 1)});
        }
    }
    return pts;
}

PointwiseResidual parabolic_identity_residual(const IdentityCase& c, const std::vector<SamplePoint>& points) {
    require_fields(c);
    require(static_cast<bool>(c.u), "identity case needs u");
    PointwiseResidual r;
    for (const auto& s : points) {
        const JetPoint p = jet_point(s[0], s[1], s[2]);
        const Frame f = parabolic_frame(c, p);
        const J u = eval(c.u, p);
        const ParabolicTerms t = parabolic_terms(f, u, u.d(0));
        const double lhs = (t.lhs_du + t.lhs_dt).value();
        const double rhs = (t.rhs_dt + t.energy.d(0)).value();
        r.max_abs = std::max(r.max_abs, std::abs(lhs - rhs));
        r.max_scale = std::max({r.max_scale, std::abs(lhs), std::abs(rhs)});
        r.lhs.push_back(lhs);
        r.rhs.push_back(rhs);
        ++r.samples;
    }
    return r;
}

PointwiseResidual hyperbolic_identity_residual(const IdentityCase& c, const std::vector<SamplePoint>& points) {
    require_fields(c);
    require(static_cast<bool>(c.u), "identity case needs u");
    PointwiseResidual r;
    for (const auto& s : points) {
        const JetPoint p = jet_point(s[0], s[1], s[2]);
        const Frame f = hyperbolic_frame(c, p);
        const J u = eval(c.u, p);
        const J ut = u.d(0);
        const HyperbolicTerms t = hyperbolic_terms(f, u, ut, ut.d(0));
        const double lhs = (t.lhs_dut + t.lhs_dt + t.energy.d(0)).value();
        const double rhs = t.rhs_dt.value();
        r.max_abs = std::max(r.max_abs, std::abs(lhs - rhs));
        r.max_scale = std::max({r.max_scale, std::abs(lhs), std::abs(rhs)});
        r.lhs.push_back(lhs);
        r.rhs.push_back(rhs);
        ++r.samples;
    }
    return r;
}

namespace {

// Quadratic form a Y^2 + b Y Z + c Z^2.
struct Quad {
    double yy = 0.0, yz = 0.0, zz = 0.0;
    double operator()(double y, double z) const { return yy * y * y + yz * y * z + zz * z * z; }
    Quad& add(const Quad& o, double w) {
        yy += w * o.yy;
        yz += w * o.yz;
        zz += w * o.zz;
        return *this;
    }
};

template <class F>
Quad polarize(F&& f) {
    Quad q;
    q.yy = f(1.0, 0.0);
    q.zz = f(0.0, 1.0);
    q.yz = f(1.0, 1.0) - q.yy - q.zz;
    return q;
}

void finish(StochasticResidual& r, const Vec& lhs, const Vec& rhs) {
    r.gaps = lhs - rhs;
    r.lhs_mean = lhs.mean();
    r.rhs_mean = rhs.mean();
    std::vector<double> g(r.gaps.data(), r.gaps.data() + r.gaps.size());
    const MeanError me = mean_and_stderr(g);
    r.gap_mean = me.mean;
    r.gap_stderr = me.stderr_;
}

// Exact geometric Brownian path.
Vec gbm_path(const StochasticIdentityCase& c, const Vec& dW, double dt) {
    Vec Z(dW.size() + 1);
    Z[0] = c.z0;
    const double a = (c.drift - 0.5 * c.sigma * c.sigma) * dt;
    for (Eigen::Index k = 0; k < dW.size(); ++k) Z[k + 1] = Z[k] * std::exp(a + c.sigma * dW[k]);
    return Z;
}

}  // namespace

StochasticResidual parabolic_identity_residual(const StochasticIdentityCase& c, const Grid& grid,
                                               const BrownianEnsemble& ens) {
    require_fields(c.base);
    require(static_cast<bool>(c.profile), "stochastic identity needs a profile");
    require(grid.dim == c.base.dim, "grid mismatch");
    const TimeGrid& time = ens.time();
    const int N = time.steps;
    const double dt = time.dt();
    const Vec mass = mass_weights(grid);

    // Space-integrated coefficients per time node; everything is Z^2 times
    // these, except the dZ term which is Z dZ times cdu.
    Vec cdu = Vec::Zero(N + 1), cl = Vec::Zero(N + 1), cr = Vec::Zero(N + 1), cd = Vec::Zero(N + 1),
        ce = Vec::Zero(N + 1);
    parallel_for(static_cast<std::size_t>(N + 1), [&](std::size_t k) {
        for (int node = 0; node < grid.size(); ++node) {
            const Point x = grid.point(node);
            const JetPoint p = jet_point(time.t(static_cast<int>(k)), x[0], x[1]);
            const Frame f = parabolic_frame(c.base, p);
            const J prof = eval(c.profile, p);
            const ParabolicTerms t = parabolic_terms(f, prof, prof);
            const double m = mass[node];
            cdu[k] += m * t.lhs_du.value();
            cl[k] += m * t.lhs_dt.value();
            cr[k] += m * t.rhs_dt.value();
            cd[k] += m * t.rhs_dd.value();
            ce[k] += m * t.energy.value();
        }
    });

    const int M = ens.paths();
    Vec lhs(M), rhs(M);
    const double s2 = c.sigma * c.sigma;
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        const Vec Z = gbm_path(c, ens.increments(p), dt);
        const Vec dW = ens.increments(p);
        double l = 0.0, r = 0.0;
        for (int k = 0; k < N; ++k) {
            const double z2 = Z[k] * Z[k], z2n = Z[k + 1] * Z[k + 1];
            l += cdu[k] * z2 * c.sigma * dW[k];
            l += 0.5 * dt * ((cl[k] + c.drift * cdu[k]) * z2 + (cl[k + 1] + c.drift * cdu[k + 1]) * z2n);
            r += 0.5 * dt * ((cr[k] + s2 * cd[k]) * z2 + (cr[k + 1] + s2 * cd[k + 1]) * z2n);
        }
        r += ce[N] * Z[N] * Z[N] - ce[0] * Z[0] * Z[0];
        lhs[p] = l;
        rhs[p] = r;
    });
    StochasticResidual out;
    finish(out, lhs, rhs);
    return out;
}

StochasticResidual hyperbolic_identity_residual(const StochasticIdentityCase& c, const Grid& grid,
                                                const BrownianEnsemble& ens) {
    require_fields(c.base);
    require(static_cast<bool>(c.profile), "stochastic identity needs a profile");
    require(grid.dim == c.base.dim, "grid mismatch");
    const TimeGrid& time = ens.time();
    const int N = time.steps;
    const double dt = time.dt();
    const Vec mass = mass_weights(grid);

    // lhs_dut is linear in (Y, Z): ay Y + az Z; the rest are quadratic forms.
    Vec ay = Vec::Zero(N + 1), az = Vec::Zero(N + 1), kappa = Vec::Zero(N + 1);
    std::vector<Quad> ql(N + 1), qr(N + 1), qe(N + 1);
    parallel_for(static_cast<std::size_t>(N + 1), [&](std::size_t k) {
        for (int node = 0; node < grid.size(); ++node) {
            const Point x = grid.point(node);
            const JetPoint p = jet_point(time.t(static_cast<int>(k)), x[0], x[1]);
            const Frame f = hyperbolic_frame(c.base, p);
            const J prof = eval(c.profile, p);
            HyperbolicTerms cache[3];
            const double yz[3][2] = {{1, 0}, {0, 1}, {1, 1}};
            for (int i = 0; i < 3; ++i) cache[i] = hyperbolic_terms(f, prof * yz[i][0], prof * yz[i][1], prof);
            auto pick = [&](auto member) {
                return polarize([&](double y, double z) {
                    const int i = y == 1.0 ? (z == 1.0 ? 2 : 0) : 1;
                    return (cache[i].*member).value();
                });
            };
            const double m = mass[node];
            ay[k] += m * cache[0].lhs_dut.value();
            az[k] += m * cache[1].lhs_dut.value();
            kappa[k] += m * cache[0].rhs_dd.value();
            ql[k].add(pick(&HyperbolicTerms::lhs_dt), m);
            qr[k].add(pick(&HyperbolicTerms::rhs_dt), m);
            qe[k].add(pick(&HyperbolicTerms::energy), m);
        }
    });

    const int M = ens.paths();
    Vec lhs(M), rhs(M);
    const double s2 = c.sigma * c.sigma;
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        const Vec Z = gbm_path(c, ens.increments(p), dt);
        Vec Y(N + 1);
        Y[0] = c.y0;
        for (int k = 0; k < N; ++k) Y[k + 1] = Y[k] + 0.5 * dt * (Z[k] + Z[k + 1]);
        const Vec dW = ens.increments(p);
        // lhs_dut times the drift part of dZ, per node
        auto drift_part = [&](int k) { return (ay[k] * Y[k] + az[k] * Z[k]) * c.drift * Z[k]; };
        double l = 0.0, r = 0.0;
        for (int k = 0; k < N; ++k) {
            l += (ay[k] * Y[k] + az[k] * Z[k]) * c.sigma * Z[k] * dW[k];
            l += 0.5 * dt * (ql[k](Y[k], Z[k]) + drift_part(k) + ql[k + 1](Y[k + 1], Z[k + 1]) + drift_part(k + 1));
            r += 0.5 * dt * (qr[k](Y[k], Z[k]) + qr[k + 1](Y[k + 1], Z[k + 1]));
            r += 0.5 * dt * s2 * (kappa[k] * Z[k] * Z[k] + kappa[k + 1] * Z[k + 1] * Z[k + 1]);
        }
        l += qe[N](Y[N], Z[N]) - qe[0](Y[0], Z[0]);
        lhs[p] = l;
        rhs[p] = r;
    });
    StochasticResidual out;
    finish(out, lhs, rhs);
    return out;
}

double expected_gap(const Vec& gaps, int m) {
    require(gaps.size() >= 2 && m >= 1, "expected_gap needs at least two samples");
    const double n = static_cast<double>(gaps.size());
    const double mean = gaps.mean();
    const double var = (gaps.array() - mean).square().sum() / (n - 1.0);
    const double bias2 = std::max(0.0, mean * mean - var / n);
    return std::sqrt(bias2 + var / m);
}

}  // namespace spde
