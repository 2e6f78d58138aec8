#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spdelab/grid.hpp"

namespace spde {

using LinearMap = std::function<Vec(const Vec&)>;

// Matrix-free v -> (A*A + reg R) v with an application counter.
class GramOperator {
public:
    GramOperator(Eigen::Index dim, LinearMap apply) : dim_(dim), apply_(std::move(apply)) {}

    Eigen::Index dim() const { return dim_; }
    Vec operator()(const Vec& v) const {
        ++applications_;
        return apply_(v);
    }
    long applications() const { return applications_; }

private:
    Eigen::Index dim_;
    LinearMap apply_;
    mutable long applications_ = 0;
};

struct CgResult {
    Vec x;
    int iterations = 0;
    std::vector<double> residuals;  // |r_i| / |b|, starting with 1
    bool converged = false;
};

// Preconditioned CG from x = 0. Throws "Gram not SPD" on nonpositive
// curvature. An empty preconditioner means the identity.
CgResult cg_solve(const GramOperator& gram, const Vec& rhs, double tol, int max_iter,
                  const LinearMap& preconditioner = {});

// Symmetry and positivity on `pairs` random pairs; throws "Gram not SPD".
void check_gram(const GramOperator& gram, int pairs, std::uint64_t seed, double tol = 1e-10);

// Column-by-column assembly through unit vectors.
Mat assemble(const GramOperator& gram);

// Dense reference: assemble and factor. Throws above `cap` unknowns.
Vec dense_solve(const GramOperator& gram, const Vec& rhs, Eigen::Index cap = 2000);

}  // namespace spde
