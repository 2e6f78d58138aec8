#include "spdelab/stats.hpp"

#include <cmath>

#include "spdelab/error.hpp"
#include "spdelab/parallel.hpp"

namespace spde {

RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "degenerate fit");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "degenerate fit");
    RateFit f;
    f.slope = sxy / sxx;
    f.log_constant = my - f.slope * mx;
    f.r2 = syy > 0.0 ? std::min(1.0, sxy * sxy / (sxx * syy)) : 1.0;
    f.samples = static_cast<int>(x.size());
    return f;
}

RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "log fit needs positive samples");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return fit_line(lx, ly);
}

MeanError mean_and_stderr(const std::vector<double>& xs) {
    require(xs.size() >= 2, "need at least two samples");
    const double n = static_cast<double>(xs.size());
    MeanError r;
    r.mean = tree_sum(xs) / n;
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - r.mean) * (xs[i] - r.mean);
    r.stderr_ = std::sqrt(tree_sum(dev) / (n - 1.0) / n);
    return r;
}

}  // namespace spde
