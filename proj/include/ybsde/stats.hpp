#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>

#include "ybsde/errors.hpp"

namespace ybsde {

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;  ///< standard error of the mean
};

inline MeanEstimate mean_and_se(std::span<const double> v) {
    require(!v.empty(), "mean_and_se: empty sample");
    const auto n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {m, std::sqrt(var / n)};
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares of y on x with intercept.
inline LineFit ols(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "ols: need at least 2 matching points");
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "ols: regressor has no spread");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

} // namespace ybsde
