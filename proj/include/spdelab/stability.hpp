#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/carleman/geometry.hpp"
#include "spdelab/hyperbolic.hpp"
#include "spdelab/measurements.hpp"
#include "spdelab/norms.hpp"
#include "spdelab/parabolic.hpp"
#include "spdelab/stats.hpp"

namespace spde {

using Field = std::function<double(const Point&)>;

// Coefficients as functions of x so that refinement sweeps can resample them.
// Empty fields are zero, except an empty diffusion, which is 1.
struct ParabolicFields {
    Field diffusion;
    std::array<Field, 2> drift;
    Field reaction, noise;
    ParabolicCoefficients sample(const Grid& grid) const;
};

struct HyperbolicFields {
    Field diffusion;
    Field damping;
    std::array<Field, 2> drift;
    Field reaction, noise;
    HyperbolicCoefficients sample(const Grid& grid) const;
};

std::string norm_name(NormKind kind);

struct StabilitySample {
    std::string experiment;
    int mode = 0;
    std::uint64_t seed = 0;
    double eta = 0.0;    // input discrepancy
    double E = 0.0;      // output discrepancy
    double prior = 0.0;  // max of the two initial-data norms
    NormKind eta_norm = NormKind::H1_space;
    NormKind E_norm = NormKind::L2_space;
    NormKind prior_norm = NormKind::L2_space;
};

// Paired solves y0 and y0 + eps_k phi_k with phi_k the k-th sine mode, eps_k
// chosen so the perturbation has norm `epsilon` in the prior norm.
// eta = |diff(T)| and E = |diff(t0)|, both as L2(Omega; .) norms.
struct BackwardSweepConfig {
    GridSpec grid;
    ParabolicFields coeffs;
    Field y0;  // empty means zero
    double T = 0.1;
    int steps = 100;
    double t0 = 0.05;
    std::vector<int> modes{1, 2, 3, 4, 5};
    int paths = 1;
    std::uint64_t seed = 1;
    double epsilon = 1.0;
    NormKind eta_norm = NormKind::H1_space;
    NormKind E_norm = NormKind::L2_space;
    NormKind prior_norm = NormKind::L2_space;
    bool common_random_numbers = true;
};

std::vector<StabilitySample> backward_stability_sweep(const BackwardSweepConfig& cfg);

// log E = gamma log eta + log C over samples with eta, E > 0; needs at least
// three of them spanning two decades in eta.
RateFit fit_holder(const std::vector<StabilitySample>& samples);

struct LogStabilityReport {
    double gamma = 0.0;
    double C = 1.0;
    bool finite = true;
    int binding = -1;  // sample index attaining the bound, -1 if none
};

double log_stability_gamma(double t0, double T);
// Smallest C >= 1 on a grid of 20 points per decade with
//   E^2 <= C eta + C M^2 exp(-3^-gamma ln^gamma(1/eta))
// for every sample; ln(1/eta) is clipped at zero.
LogStabilityReport log_stability_check(const std::vector<StabilitySample>& samples, double M, double t0, double T);

struct RatioRow {
    std::string experiment;
    int nodes = 0;
    double t = 0.0;  // evaluation time (internal) or horizon (boundary)
    double max_ratio = 0.0;
    int samples = 0;
};

// Random pairs of initial data with the difference a random sum of sine modes;
// ratio |diff(t)|_{L2(Omega;L2)} / |diff on G0|_{L2(Omega x (0,T); L2(G0))}.
struct InternalObservabilityConfig {
    GridSpec grid;  // g0 must be marked
    ParabolicFields coeffs;
    double T = 0.2;
    int steps = 100;
    std::vector<double> times{0.02, 0.05, 0.1, 0.2};
    int samples = 6;
    int paths = 8;
    int modes = 5;
    std::uint64_t seed = 1;
};

std::vector<RatioRow> internal_observability_sweep(const InternalObservabilityConfig& cfg);

// Ratio |(z0, z1)|_{H1 x L2} / (|dz/dnu|_{L2(0,T;L2(Gamma0))} + |f| + |g|) over
// random data; gamma0 is taken from observation_boundary and T from the
// calibration unless overridden.
struct BoundaryObservabilityConfig {
    GridSpec grid;
    HyperbolicFields coeffs;
    Point x0{-1.0, -1.0};
    std::optional<Calibration> calibration;
    std::optional<double> T;  // override of the calibrated horizon
    double cfl = 0.5;         // dt = cfl * h
    int samples = 6;
    int paths = 8;
    int modes = 5;
    double source = 0.0;  // amplitude of random f and g
    std::uint64_t seed = 1;
};

RatioRow boundary_observability_sweep(const BoundaryObservabilityConfig& cfg);

enum class RateProblem { terminal, parabolic_cauchy, hyperbolic_cauchy };
std::string rate_problem_name(RateProblem p);

// Synthetic reconstruction experiments on (0,1) with a fixed smooth truth.
// T = 0 selects the problem default; noise defaults to white for the terminal
// problem and to single_mode (k = 1) for the Cauchy problems.
struct RateSweepConfig {
    RateProblem problem = RateProblem::terminal;
    int nodes = 32;
    int steps = 64;
    int paths = 64;
    int seeds = 8;
    double T = 0.0;
    std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
    std::uint64_t seed = 1;
    std::optional<NoiseSpec> noise;
    double t0 = 0.0;          // terminal: error time, default T/2
    double margin = 0.0;      // parabolic Cauchy: epsilon, default T/8
    Box inner{{0.25, 0.0}, {0.75, 0.0}};
};

struct RateRow {
    double delta = 0.0;
    int seed = 0;
    double error = 0.0;
    double secondary = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

struct RateSweep {
    RateProblem problem = RateProblem::terminal;
    std::string error_norm, secondary_norm;
    std::vector<RateRow> rows;
    std::vector<double> deltas, mean_error, mean_secondary;
    RateFit fit;            // of mean_error over the positive deltas
    RateFit secondary_fit;
    bool monotone = false;  // mean error nonincreasing as delta decreases
};

// Errors: terminal, H1 at t0 of the propagated difference; parabolic Cauchy,
// H1 on (eps, T - eps) x inner; hyperbolic Cauchy, L2(0,T;H1) x L2(0,T;L2)
// for (z, z_t), with the full regularization norm as the secondary column.
// Regularization follows tau = delta^2; delta = 0 runs at the floor and is
// left out of the fit.
RateSweep reconstruction_rate_sweep(const RateSweepConfig& cfg);

// CSV writers, one row per sample.
void write_samples_csv(std::ostream& out, const std::vector<StabilitySample>& samples);
void write_ratios_csv(std::ostream& out, const std::vector<RatioRow>& rows);
void write_rate_csv(std::ostream& out, const RateSweep& sweep);

}  // namespace spde
