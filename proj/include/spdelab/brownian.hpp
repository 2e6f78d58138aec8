#pragma once

#include <cstdint>

#include "spdelab/grid.hpp"

namespace spde {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t path_seed(std::uint64_t master, std::uint64_t path);

// M Brownian paths on a shared time grid. Increments are regenerated on demand
// from (seed, path index), so large ensembles cost no storage.
class BrownianEnsemble {
public:
    BrownianEnsemble() = default;
    BrownianEnsemble(const TimeGrid& time, int paths, std::uint64_t seed);
    // Explicit increments, steps x paths. Used for perturbation studies.
    BrownianEnsemble(const TimeGrid& time, Mat increments);

    const TimeGrid& time() const { return time_; }
    int paths() const { return paths_; }
    std::uint64_t seed() const { return seed_; }

    Vec increments(int path) const;
    Vec path(int path) const;  // W(t_0..t_N), W(t_0) = 0
    Mat materialize() const;   // steps x paths
    // Same paths on a grid with steps/factor steps (increments summed).
    BrownianEnsemble coarsen(int factor) const;

private:
    TimeGrid time_;
    int paths_ = 0;
    std::uint64_t seed_ = 0;
    Mat fixed_;
};

BrownianEnsemble sample_brownian(const TimeGrid& time, int paths, std::uint64_t seed);

// Left-point sum sum_k f(t_k) dW_k. f may carry the unused endpoint value.
double ito_sum(const Vec& f, const Vec& dW);
// Integrand is (steps or steps+1) x paths.
Vec ito_integral(const Mat& integrand, const BrownianEnsemble& ens);

// Integrand generated per path from the path's W values.
template <class F>
Vec ito_integral(const BrownianEnsemble& ens, F&& integrand) {
    Vec out(ens.paths());
    for (int p = 0; p < ens.paths(); ++p) {
        const Vec dW = ens.increments(p);
        Vec W(dW.size() + 1);
        W[0] = 0.0;
        for (Eigen::Index k = 0; k < dW.size(); ++k) W[k + 1] = W[k] + dW[k];
        out[p] = ito_sum(integrand(p, W), dW);
    }
    return out;
}

double quadratic_variation(const Vec& path);

}  // namespace spde
