#include "spdelab/brownian.hpp"

#include <cmath>
#include <random>

#include "spdelab/error.hpp"

namespace spde {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t path) {
    return splitmix64(splitmix64(master) ^ splitmix64(path + 0x632be59bd9b4e019ULL));
}

BrownianEnsemble::BrownianEnsemble(const TimeGrid& time, int paths, std::uint64_t seed)
    : time_(time), paths_(paths), seed_(seed) {
    require(paths >= 1, "empty ensemble");
}

BrownianEnsemble::BrownianEnsemble(const TimeGrid& time, Mat increments)
    : time_(time), paths_(static_cast<int>(increments.cols())), fixed_(std::move(increments)) {
    require(paths_ >= 1, "empty ensemble");
    require(fixed_.rows() == time.steps, "grid mismatch");
}

Vec BrownianEnsemble::increments(int p) const {
    require(p >= 0 && p < paths_, "path index out of range");
    if (fixed_.size() > 0) return fixed_.col(p);
    std::mt19937_64 rng(path_seed(seed_, static_cast<std::uint64_t>(p)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = std::sqrt(time_.dt());
    Vec dW(time_.steps);
    for (int k = 0; k < time_.steps; ++k) dW[k] = s * normal(rng);
    return dW;
}

Vec BrownianEnsemble::path(int p) const {
    const Vec dW = increments(p);
    Vec W(dW.size() + 1);
    W[0] = 0.0;
    for (Eigen::Index k = 0; k < dW.size(); ++k) W[k + 1] = W[k] + dW[k];
    return W;
}

Mat BrownianEnsemble::materialize() const {
    Mat out(time_.steps, paths_);
    for (int p = 0; p < paths_; ++p) out.col(p) = increments(p);
    return out;
}

BrownianEnsemble BrownianEnsemble::coarsen(int factor) const {
    require(factor >= 1 && time_.steps % factor == 0, "grid mismatch");
    const Mat fine = materialize();
    Mat coarse(time_.steps / factor, paths_);
    for (Eigen::Index k = 0; k < coarse.rows(); ++k) coarse.row(k) = fine.middleRows(k * factor, factor).colwise().sum();
    return BrownianEnsemble(TimeGrid(time_.T, time_.steps / factor), std::move(coarse));
}

BrownianEnsemble sample_brownian(const TimeGrid& time, int paths, std::uint64_t seed) {
    return BrownianEnsemble(time, paths, seed);
}

double ito_sum(const Vec& f, const Vec& dW) {
    require(f.size() == dW.size() || f.size() == dW.size() + 1, "grid mismatch");
    return f.head(dW.size()).dot(dW);
}

Vec ito_integral(const Mat& integrand, const BrownianEnsemble& ens) {
    require(integrand.cols() == ens.paths(), "grid mismatch");
    Vec out(ens.paths());
    for (int p = 0; p < ens.paths(); ++p) out[p] = ito_sum(integrand.col(p), ens.increments(p));
    return out;
}

double quadratic_variation(const Vec& path) {
    double q = 0.0;
    for (Eigen::Index k = 0; k + 1 < path.size(); ++k) {
        const double d = path[k + 1] - path[k];
        q += d * d;
    }
    return q;
}

}  // namespace spde
