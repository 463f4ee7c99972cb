#pragma once

#include "ybsde/diffusion.hpp"
#include "ybsde/drivers.hpp"
#include "ybsde/regression.hpp"
#include "ybsde/young_calculus.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ybsde {

// ---------------------------------------------------------------------------
// Girsanov weights
// ---------------------------------------------------------------------------

/// G(t, x) in R^d, evaluated at the left point of each step.
using GirsanovFn = std::function<void(double t, std::span<const double> x, std::span<double> g)>;

/// log M_{t_i} = sum_{j<i} G_j . dW_j - 1/2 sum_{j<i} |G_j|^2 dt_j along one path.
std::vector<double> girsanov_log_weights(const PathView& path, const GirsanovFn& G);

/// M_{t_i} for every sample and grid index (S x points). Throws NumericalError
/// when a weight leaves the representable range.
Eigen::MatrixXd girsanov_weight(const PathBatch& batch, const GirsanovFn& G);

// ---------------------------------------------------------------------------
// Linear BSDE by the flow representation
// ---------------------------------------------------------------------------

/// Y_t = xi + sum_i int alpha^i Y eta_i(dr, X) + int (Z G + f) dr - int Z dW.
/// Coefficients are functions of (t, X_t); xi is a functional of the path.
struct LinearBsdeSpec {
    std::size_t N = 1;
    /// alpha(t, x) flattened as M*N*N (channel-major, column-major matrices)
    std::function<void(double t, std::span<const double> x, std::span<double> alpha)> alpha;
    /// f(t, x) in R^N; empty means zero
    std::function<void(double t, std::span<const double> x, std::span<double> f)> f;
    /// G(t, x) in R^d; empty means zero
    GirsanovFn G;
    /// terminal xi(path) in R^N
    std::function<void(const PathView& path, std::span<double> xi)> xi;
    SpaceTimeDriver driver;
    DiffusionSpec diffusion;
    Eigen::VectorXd x0;
};

struct LinearBsdeConfig {
    TimeGrid grid;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    std::vector<double> eval_times{0.0};
    int degree = 2;
    double ridge = 1e-8;
    std::size_t workers = 1;
    double overflow_guard = 1e12;
};

struct LinearBsdeEstimate {
    double time = 0.0;
    std::size_t grid_index = 0;
    Eigen::VectorXd mean;  ///< mean of Y_t over samples (equals Y_0 at t = 0)
    Eigen::VectorXd se;
    RegressionModel model; ///< Y_t as a function of X_t
};

struct LinearBsdeResult {
    std::vector<LinearBsdeEstimate> estimates;
    double girsanov_mean = 1.0;  ///< sample mean of M_T
    double girsanov_se = 0.0;
};

/// Y_t = E_t[((Gamma^t_T)^T xi + int_t^T (Gamma^t_s)^T f_s ds) M_T] / M_t with Gamma
/// from solve_flow (exact exponential when N = M = 1). Conditional
/// expectations at t > 0 use regression on X_t. Z is not produced.
LinearBsdeResult solve_linear_bsde(const LinearBsdeSpec& spec, const LinearBsdeConfig& cfg);

// ---------------------------------------------------------------------------
// Tower rule check
// ---------------------------------------------------------------------------

/// Process value at grid index r for one path (may look ahead along the path).
using PathProcess = std::function<double(const PathView& path, std::size_t r)>;

struct TowerRuleReport {
    double lhs = 0.0;  ///< E[ sum A_r B_r d_eta ]
    double rhs = 0.0;  ///< E[ sum E_r[A_r] B_r d_eta ], E_r by regression on X_r
    double lhs_se = 0.0;
    double rhs_se = 0.0;
    double combined_se = 0.0;  ///< sqrt(lhs_se^2 + rhs_se^2)
    double defect = 0.0;       ///< |lhs - rhs|
};

/// Both sides of the tower rule from grid index t_index to the end, averaged
/// over the batch (first driver channel).
TowerRuleReport tower_rule_defect(const PathProcess& A, const PathProcess& B, const SpaceTimeDriver& driver,
                                  const PathBatch& batch, std::size_t t_index, int degree = 2);

// ---------------------------------------------------------------------------
// Localized nonlinear BSDE (scalar Y)
// ---------------------------------------------------------------------------

/// Y_t = Xi_{T_n} + int f(r, X, Y, Z) dr + sum_i int g_i(Y) eta_i(dr, X) - int Z dW on [0, T_n].
struct BsdeProblem {
    /// f(t, x, y, z); empty means zero
    std::function<double(double t, std::span<const double> x, double y, std::span<const double> z)> f;
    /// g(y) in R^M; empty means zero (the driver is then never evaluated)
    std::function<void(double y, std::span<double> g)> g;
    /// h(x); terminal value at the stopping index
    std::function<double(std::span<const double> x)> h;
    /// optional path functional Xi(path, index) replacing h
    std::function<double(const PathView& path, std::size_t index)> terminal_process;
    SpaceTimeDriver driver;
    DiffusionSpec diffusion;
    Eigen::VectorXd x0;

    // growth / regularity metadata
    double lambda = 1.0;
    double beta = 0.0;
    double epsilon = 1.0;
    double C1 = 1.0;
    double lipschitz = 1.0;
};

struct BsdeSolverConfig {
    TimeGrid grid;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    int degree = 2;
    double ridge = 1e-8;
    double picard_tolerance = 1e-6;
    int picard_max_iterations = 50;
    std::size_t workers = 1;
    /// Optional S x (steps*M) driver increments from driver_increments() for
    /// this batch and driver; computed on demand when null.
    const Eigen::MatrixXd* increments = nullptr;
};

/// eta(t_{i+1}, X_i) - eta(t_i, X_i) for every sample and step, channel
/// k of step i in column i*M + k.
Eigen::MatrixXd driver_increments(const SpaceTimeDriver& driver, const PathBatch& batch, std::size_t workers = 1);

struct BsdeSolution {
    TimeGrid grid;
    double radius = 0.0;
    double y0 = 0.0;
    double y0_se = 0.0;
    Eigen::VectorXd z0;
    std::vector<RegressionModel> y_models;  ///< per step i < last
    std::vector<RegressionModel> z_models;
    Eigen::MatrixXd Y;                      ///< S x points, per-sample Y estimates
    std::vector<double> y0_targets;         ///< per-sample step-0 regression targets (mean = y0)
    std::vector<std::size_t> stop_index;    ///< exit index or last index, per sample
    std::size_t exits = 0;
    int picard_iterations = 0;
    std::vector<double> picard_gaps;
    bool converged = false;
    double terminal_defect = 0.0;
    double martingale_residual = 0.0;       ///< max_i |mean residual_i| / SE(Z_i dW_i)
    double max_abs_y = 0.0;                 ///< over in-domain samples
};

/// Backward least-squares Monte Carlo on a given batch, absorbing samples at
/// their first exit from the ball of radius n (frozen at Xi there). The
/// Young term and f use the previous Picard iterate of Y; the first sweep
/// uses E[Y_{i+1} | X_i] as that iterate.
BsdeSolution solve_localized_bsde(const BsdeProblem& problem, double radius, const PathBatch& batch,
                                  const BsdeSolverConfig& cfg);

/// Simulates the batch from (problem.diffusion, x0, cfg) and solves.
BsdeSolution solve_localized_bsde(const BsdeProblem& problem, double radius, const BsdeSolverConfig& cfg);

struct LocalizationSchedule {
    std::vector<double> radii;  ///< strictly increasing, all > |x0|
    void validate(double x0_norm) const;
};

struct LocalizationRow {
    double radius = 0.0;
    double y0 = 0.0;
    double y0_se = 0.0;
    double gap_to_last = 0.0;  ///< |Y0^{n_k} - Y0^{n_K}|
    double gap_se = 0.0;       ///< paired SE of the difference
    std::size_t exits = 0;
    double max_abs_y = 0.0;
};

struct LocalizationResult {
    BsdeSolution finest;
    std::vector<LocalizationRow> table;
};

/// One shared path batch (common random numbers) for every radius.
LocalizationResult solve_bsde_with_localization(const BsdeProblem& problem, const LocalizationSchedule& schedule,
                                                const BsdeSolverConfig& cfg);

// ---------------------------------------------------------------------------
// Exponential moment diagnostic
// ---------------------------------------------------------------------------

struct ExponentialMomentReport {
    std::vector<double> log_values;  ///< log E[exp{q int_{t^T_n}^{T_n} alpha eta(dr,X)}] per grid time
    double log_max = 0.0;
    double max_time = 0.0;
    double value() const;            ///< exp(log_max), may be +inf
};

ExponentialMomentReport exponential_moment_diagnostic(
    const std::function<double(double t, std::span<const double> x)>& alpha, const SpaceTimeDriver& driver,
    const PathBatch& batch, double q, double radius);

} // namespace ybsde
