#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "spdelab/error.hpp"

namespace spde {

// Truncated Taylor polynomial in (t, x1, x2) about a base point, total degree
// <= 4. Coefficients are stored without factorials: f = sum c_a (z - z0)^a.
// `order` is the highest degree that is still exact; differentiation lowers
// it by one, and reading a value from a jet with order < 0 is an error.
namespace jet_detail {

inline constexpr int vars = 3;
inline constexpr int degree = 4;
inline constexpr int terms = 35;

struct Tables {
    std::array<std::array<int, vars>, terms> exponent{};
    std::array<int, terms> total{};
    // Index of exponent + e_v, or -1 past the truncation.
    std::array<std::array<int, vars>, terms> raise{};
    struct Product {
        int a, b, c;
    };
    std::array<Product, 400> product{};
    int products = 0;

    Tables() {
        int k = 0;
        for (int d = 0; d <= degree; ++d)
            for (int i = d; i >= 0; --i)
                for (int j = d - i; j >= 0; --j) {
                    exponent[k] = {i, j, d - i - j};
                    total[k] = d;
                    ++k;
                }
        auto find = [&](const std::array<int, vars>& e) {
            for (int m = 0; m < terms; ++m)
                if (exponent[m] == e) return m;
            return -1;
        };
        for (int m = 0; m < terms; ++m)
            for (int v = 0; v < vars; ++v) {
                auto e = exponent[m];
                ++e[v];
                raise[m][v] = total[m] < degree ? find(e) : -1;
            }
        for (int a = 0; a < terms; ++a)
            for (int b = 0; b < terms; ++b) {
                if (total[a] + total[b] > degree) continue;
                std::array<int, vars> e{};
                for (int v = 0; v < vars; ++v) e[v] = exponent[a][v] + exponent[b][v];
                product[products++] = {a, b, find(e)};
            }
    }
};

inline const Tables& tables() {
    static const Tables t;
    return t;
}

}  // namespace jet_detail

template <class S>
class Jet {
public:
    static constexpr int max_order = jet_detail::degree;

    Jet() { c_.fill(S(0)); }
    Jet(S value) {  // NOLINT: scalars promote to constant jets
        c_.fill(S(0));
        c_[0] = value;
    }
    static Jet variable(S value, int var) {
        Jet j(value);
        j.c_[1 + var] = S(1);
        return j;
    }

    S value() const {
        if (order_ < 0) fail("jet derivative depth exceeded");
        return c_[0];
    }
    int order() const { return order_; }
    const S& coeff(int m) const { return c_[m]; }

    // Partial derivative along variable v (0 = t, 1 = x1, 2 = x2).
    Jet d(int v) const {
        const auto& tb = jet_detail::tables();
        Jet out;
        for (int m = 0; m < jet_detail::terms; ++m) {
            const int up = tb.raise[m][v];
            if (up >= 0) out.c_[m] = c_[up] * S(tb.exponent[up][v]);
        }
        out.order_ = order_ - 1;
        return out;
    }

    Jet& operator+=(const Jet& o) {
        for (int m = 0; m < jet_detail::terms; ++m) c_[m] += o.c_[m];
        order_ = std::min(order_, o.order_);
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int m = 0; m < jet_detail::terms; ++m) c_[m] -= o.c_[m];
        order_ = std::min(order_, o.order_);
        return *this;
    }
    Jet& operator*=(S s) {
        for (auto& x : c_) x *= s;
        return *this;
    }
    Jet operator-() const {
        Jet out = *this;
        for (auto& x : out.c_) x = -x;
        return out;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(const Jet& a, const Jet& b) {
        const auto& tb = jet_detail::tables();
        Jet out;
        for (int i = 0; i < tb.products; ++i) {
            const auto& p = tb.product[i];
            out.c_[p.c] += a.c_[p.a] * b.c_[p.b];
        }
        out.order_ = std::min(a.order_, b.order_);
        return out;
    }
    friend Jet operator*(Jet a, S s) { return a *= s; }
    friend Jet operator*(S s, Jet a) { return a *= s; }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }
    friend Jet operator/(Jet a, S s) { return a *= S(1) / s; }
    friend Jet operator/(S s, const Jet& b) { return b.reciprocal() * s; }

    // h(f) from the derivatives h^(k)(f0), k = 0..4.
    Jet compose(const std::array<S, 5>& h) const {
        Jet g = *this;
        g.c_[0] = S(0);
        Jet out(h[0]), power(S(1));
        S factorial = 1;
        for (int k = 1; k <= max_order; ++k) {
            power = power * g;
            factorial *= S(k);
            out += power * (h[k] / factorial);
        }
        out.order_ = order_;
        return out;
    }

    Jet reciprocal() const {
        const S a = c_[0];
        if (a == S(0)) fail("jet division by zero");
        return compose({S(1) / a, -S(1) / (a * a), S(2) / (a * a * a), -S(6) / (a * a * a * a),
                        S(24) / (a * a * a * a * a)});
    }

private:
    std::array<S, jet_detail::terms> c_;
    int order_ = max_order;
};

template <class S>
Jet<S> exp(const Jet<S>& f) {
    const S e = std::exp(f.coeff(0));
    return f.compose({e, e, e, e, e});
}

template <class S>
Jet<S> log(const Jet<S>& f) {
    const S a = f.coeff(0);
    if (!(a > S(0))) fail("jet log of nonpositive value");
    return f.compose({std::log(a), 1 / a, -1 / (a * a), 2 / (a * a * a), -6 / (a * a * a * a)});
}

template <class S>
Jet<S> sin(const Jet<S>& f) {
    const S s = std::sin(f.coeff(0)), c = std::cos(f.coeff(0));
    return f.compose({s, c, -s, -c, s});
}

template <class S>
Jet<S> cos(const Jet<S>& f) {
    const S s = std::sin(f.coeff(0)), c = std::cos(f.coeff(0));
    return f.compose({c, -s, -c, s, c});
}

// f^p for real p; f must be positive unless p is a nonnegative integer.
template <class S>
Jet<S> pow(const Jet<S>& f, S p) {
    if (p == std::floor(p) && p >= 0 && p <= 8) {
        Jet<S> out(S(1));
        for (int k = 0; k < static_cast<int>(p); ++k) out = out * f;
        return out;
    }
    const S a = f.coeff(0);
    if (!(a > S(0))) fail("jet power of nonpositive value");
    std::array<S, 5> h{};
    S fall = 1;
    for (int k = 0; k < 5; ++k) {
        h[k] = fall * std::pow(a, p - k);
        fall *= p - k;
    }
    return f.compose(h);
}

template <class S>
Jet<S> sqrt(const Jet<S>& f) {
    return pow(f, S(0.5));
}

using JetD = Jet<double>;

// A scalar field of (t, x1, x2) evaluated on jets; x2 is ignored in 1D.
using JetField = std::function<JetD(const JetD& t, const JetD& x1, const JetD& x2)>;

// Jets of the coordinates about (t, x1, x2).
struct JetPoint {
    JetD t, x1, x2;
};
inline JetPoint jet_point(double t, double x1, double x2 = 0.0) {
    return {JetD::variable(t, 0), JetD::variable(x1, 1), JetD::variable(x2, 2)};
}
inline JetD eval(const JetField& f, const JetPoint& p) { return f(p.t, p.x1, p.x2); }

inline JetField constant_field(double c) {
    return [c](const JetD&, const JetD&, const JetD&) { return JetD(c); };
}

}  // namespace spde
