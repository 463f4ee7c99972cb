#pragma once

#include "ybsde/paths.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ybsde {

/// dX = b(t,X) dt + sigma(t,X) dW with |sigma|, |b| <= L (Frobenius/Euclidean).
struct DiffusionSpec {
    using SigmaFn = std::function<void(double t, std::span<const double> x, std::span<double> sigma)>;  ///< d x d column-major
    using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> b)>;

    std::size_t dim = 1;
    SigmaFn sigma;
    DriftFn drift;
    double bound = 1.0;       ///< L
    double lipschitz = 1.0;   ///< declared, not verified
    double ellipticity = 0.0; ///< nu; 0 means not asserted
    std::string name = "custom";

    void validate() const;
};

/// Constant coefficients sigma = s * I, b = mu * 1 (each coordinate).
DiffusionSpec constant_diffusion(std::size_t dim, double sigma, double mu, std::string name = "constant");

/// Read-only view of one simulated path: (points x dim) states and
/// (points-1 x dim) Brownian increments, both row-major.
struct PathView {
    std::span<const double> states;
    std::span<const double> increments;
    std::size_t dim = 1;
    std::size_t points = 0;
    const TimeGrid* grid = nullptr;

    std::span<const double> x(std::size_t i) const { return states.subspan(i * dim, dim); }
    std::span<const double> dw(std::size_t i) const { return increments.subspan(i * dim, dim); }
};

/// Euler-Maruyama for S independent samples. Sample i uses the counter-based
/// stream derived from (seed, i) only, and visit(i, path) runs on the worker
/// that simulated it. Coefficient bounds are checked at every visited point.
void for_each_path(const DiffusionSpec& spec, const Eigen::VectorXd& x0, const TimeGrid& grid, std::size_t samples,
                   std::uint64_t seed, std::size_t workers, const std::function<void(std::size_t, const PathView&)>& visit);

/// Stored batch. states(s, i*d + k) is coordinate k of sample s at grid
/// index i; increments likewise with i < steps.
struct PathBatch {
    TimeGrid grid;
    std::size_t dim = 1;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd states;
    Eigen::MatrixXd increments;

    double x(std::size_t s, std::size_t i, std::size_t k = 0) const {
        return states(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i * dim + k));
    }
    /// S x d block of states at grid index i.
    Eigen::MatrixXd states_at(std::size_t i) const {
        return states.middleCols(static_cast<Eigen::Index>(i * dim), static_cast<Eigen::Index>(dim));
    }
    std::vector<double> path_states(std::size_t s) const;
    std::vector<double> path_increments(std::size_t s) const;
    PathView view(std::size_t s, std::vector<double>& states_buf, std::vector<double>& inc_buf) const;

    /// CSV (sample, time_index, time, x0..x{d-1}); refuses more than max_rows rows.
    std::string to_csv(std::size_t max_rows = 1'000'000) const;
};

PathBatch simulate(const DiffusionSpec& spec, const Eigen::VectorXd& x0, const TimeGrid& grid, std::size_t samples,
                   std::uint64_t seed, std::size_t workers = 1);

struct ExitReport {
    static constexpr std::size_t no_exit = std::numeric_limits<std::size_t>::max();

    double radius = 0.0;
    std::vector<std::size_t> exit_index;  ///< first index with |X| > radius, or no_exit
    std::vector<double> exit_time;        ///< T_n = min(grid time of exit, T)
    double probability = 0.0;             ///< empirical P(T_n < T)
    double se = 0.0;
    std::size_t exits = 0;                ///< samples with any exit, including at T

    /// Terminal grid index for sample s: exit index, or the last index.
    std::size_t stop_index(std::size_t s, std::size_t last) const {
        return exit_index[s] == no_exit ? last : exit_index[s];
    }
};

ExitReport first_exit(const PathBatch& batch, double radius);

struct ExitDecayReport {
    std::vector<double> radii;          ///< radii kept in the fit
    std::vector<double> probabilities;  ///< P(T_n < T) per kept radius
    std::vector<double> standard_errors;
    std::vector<double> dropped_radii;  ///< zero empirical probability
    double slope = 0.0;                 ///< d log P / d (n - |x0|)^2
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<std::string> warnings;
};

/// OLS of log P(T_n < T) against (n - |x0|)^2 from one batch of running maxima.
ExitDecayReport exit_tail_decay(const DiffusionSpec& spec, const Eigen::VectorXd& x0, const std::vector<double>& radii,
                                const TimeGrid& grid, std::size_t samples, std::uint64_t seed, std::size_t workers = 1);

/// Sample mean of ||X||_{p-var}^q over a batch (surrogate for m_{p,q}).
double mean_pvar_moment(const PathBatch& batch, double p, double q);

} // namespace ybsde
