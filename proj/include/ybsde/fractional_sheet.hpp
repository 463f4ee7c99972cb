#pragma once

#include "ybsde/drivers.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ybsde {

/// Fractional Brownian sheet on [0,T] x R^n with Hurst H0 in time and H_i
/// along space axis i, restricted to a tensor grid for sampling.
struct SheetSpec {
    double H0 = 0.5;
    std::vector<double> H;                  ///< one exponent per space axis
    std::vector<double> times;              ///< sampling times in [0, T]
    std::vector<std::vector<double>> axes;  ///< one coordinate list per space axis
    double horizon = 1.0;
    std::size_t max_nodes = 4096;

    std::size_t space_dim() const { return H.size(); }
    std::size_t node_count() const;
    void validate() const;
};

/// E[B(t,x) B(s,y)] = 2^{-(n+1)} (t^{2H0}+s^{2H0}-|t-s|^{2H0}) prod_i (|x_i|^{2H_i}+|y_i|^{2H_i}-|x_i-y_i|^{2H_i})
double sheet_covariance(const SheetSpec& spec, double t, std::span<const double> x, double s, std::span<const double> y);

/// Conservative declared regularity of a sheet realization:
/// tau = H0 - 0.01, lambda = min H - 0.01, beta = max(0, sum H - lambda).
DriverRegularity sheet_regularity(const SheetSpec& spec);

/// Cholesky factor of the grid covariance, shareable across sampling calls.
/// Nodes with zero variance (t = 0 or a zero coordinate) are pinned to 0 and
/// left out of the factorization.
class SheetSampler {
public:
    /// Escalates the diagonal jitter 0 (or `initial_jitter`), 1e-12, x10 ... 1e-8,
    /// each relative to trace/size, and throws NumericalError when all fail.
    explicit SheetSampler(SheetSpec spec, double initial_jitter = 0.0);

    const SheetSpec& spec() const { return spec_; }
    /// Absolute jitter that was added to the diagonal.
    double jitter() const { return jitter_; }
    /// Jitter relative to trace/size.
    double relative_jitter() const { return relative_jitter_; }

    /// Node values of draw `index` under `seed`: rows = times, cols = space nodes.
    Eigen::MatrixXd draw(std::uint64_t seed, std::uint64_t index = 0) const;
    GridField draw_field(std::uint64_t seed, std::uint64_t index = 0) const;

    /// Covariance between flattened grid nodes (time-major).
    const Eigen::MatrixXd& covariance() const { return full_cov_; }

private:
    SheetSpec spec_;
    std::vector<Eigen::Index> active_;
    Eigen::MatrixXd factor_;
    Eigen::MatrixXd full_cov_;
    double jitter_ = 0.0;
    double relative_jitter_ = 0.0;
};

/// One realization as a driver (multilinear interpolation, kind sampled_sheet).
SpaceTimeDriver sample_sheet(const SheetSpec& spec, std::uint64_t seed, double jitter = 0.0);

/// H0 + H/2 > 1 and d H < 2 H0 - 1, both strict; false outside (0,1)^2.
bool hurst_admissible(double H0, double H, int d);

struct HurstRegionRow {
    double H;
    double H0;
    bool admissible;
};

/// resolution x resolution table over [0,1]^2 (H inner, H0 outer); points on
/// the boundary of the unit square are never admissible.
std::vector<HurstRegionRow> hurst_region_grid(int d, int resolution);

} // namespace ybsde
