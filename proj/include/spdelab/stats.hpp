#pragma once

#include <vector>

namespace spde {

// Least-squares line through (log x, log y).
struct RateFit {
    double slope = 0.0;
    double log_constant = 0.0;
    double r2 = 0.0;
    int samples = 0;
};

RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct MeanError {
    double mean = 0.0;
    double stderr_ = 0.0;
};
MeanError mean_and_stderr(const std::vector<double>& xs);

}  // namespace spde
