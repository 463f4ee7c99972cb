#pragma once

#include "ybsde/bsde_solver.hpp"
#include "ybsde/diffusion.hpp"
#include "ybsde/drivers.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ybsde {

using ScalarField = std::function<double(std::span<const double> x)>;

struct PdePoint {
    double t = 0.0;
    Eigen::VectorXd x;
};

struct PdeSolutionRow {
    double t = 0.0;
    Eigen::VectorXd x;
    double u = 0.0;
    double se = 0.0;
    double radius = std::numeric_limits<double>::infinity();  ///< inf: whole space
    double delta = 0.0;                                       ///< 0: raw driver
    std::size_t samples = 0;
};

struct PdeSolutionTable {
    std::vector<PdeSolutionRow> rows;
    /// Columns t, x0..x{d-1}, u, se, n, delta, samples.
    std::string to_csv() const;
};

/// Seed of the common random numbers used at evaluation point (t, x).
std::uint64_t point_seed(std::uint64_t seed, double t, std::span<const double> x);

// ---------------------------------------------------------------------------
// Linear Cauchy problem
// ---------------------------------------------------------------------------

struct LinearPdeConfig {
    double horizon = 1.0;
    std::size_t steps = 200;  ///< Euler steps on [0, T]; shorter intervals use proportionally fewer
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

/// u(t,x) = E[u_T(X^{t,x}_T) exp{ int_t^T eta(dr, X_r) }], one fresh batch per point.
PdeSolutionTable solve_linear_young_pde(const ScalarField& terminal, const DiffusionSpec& diffusion,
                                        const SpaceTimeDriver& driver, const std::vector<PdePoint>& points,
                                        const LinearPdeConfig& cfg);

/// Residual of the weak formulation at time t for d = 1:
///   int u(t)phi - int u_T phi - int_t^T int u L*phi dx ds - int int u phi eta(ds, x) dx
/// with u tabulated on a (time x space) GridField, L*phi = 1/2 (sigma^2 phi)'' - (b phi)'
/// by fourth-order differences. phi must vanish at both ends of the space axis.
double weak_solution_residual(const GridField& u, const std::function<double(double)>& terminal,
                              const std::function<double(double)>& phi, const DiffusionSpec& diffusion,
                              const SpaceTimeDriver& driver, double t);

// ---------------------------------------------------------------------------
// Nonlinear problem by double approximation
// ---------------------------------------------------------------------------

struct PdeProblem {
    std::function<double(double t, std::span<const double> x, double u, std::span<const double> z)> f;
    std::function<void(double u, std::span<double> g)> g;
    ScalarField h;
    SpaceTimeDriver driver;
    DiffusionSpec diffusion;
    double horizon = 1.0;
};

struct DoubleApproxConfig {
    std::vector<double> deltas;  ///< strictly decreasing, >= 0 (0 = raw driver)
    std::vector<double> radii;   ///< strictly increasing
    std::vector<PdePoint> points;
    std::size_t steps = 100;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    int degree = 2;
    std::size_t workers = 1;
};

struct DoubleApproxResult {
    PdeSolutionTable finest;  ///< (largest radius, smallest delta)
    PdeSolutionTable all;     ///< every (radius, delta, point), radius-major
    std::vector<double> radius_gaps;  ///< max_x |u^{k,M} - u^{k+1,M}| per k
    std::vector<double> delta_gaps;   ///< max_x |u^{K,m} - u^{K,m+1}| per m
    std::vector<double> gap_to_finest; ///< max_x |u^{k,m} - u^{K,M}|, same order as `all` blocks
    bool radius_gaps_shrink = true;   ///< at most one increase
    bool delta_gaps_shrink = true;
};

DoubleApproxResult solve_young_pde_double_approximation(const PdeProblem& problem, const DoubleApproxConfig& cfg);

struct ScheduleComparison {
    double max_gap = 0.0;
    double max_z = 0.0;  ///< max |u_a - u_b| / sqrt(se_a^2 + se_b^2)
};

/// Pointwise comparison of two finest tables over the same points.
ScheduleComparison compare_schedules(const PdeSolutionTable& a, const PdeSolutionTable& b);

// ---------------------------------------------------------------------------
// Localization error
// ---------------------------------------------------------------------------

struct LocalizationExperimentConfig {
    std::vector<double> radii;  ///< strictly increasing; the last is the reference
    std::vector<Eigen::VectorXd> xs;
    double horizon = 1.0;
    std::size_t steps = 200;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    int degree = 2;
    std::size_t workers = 1;
};

struct DecayFit {
    Eigen::VectorXd x;
    std::vector<double> radii;      ///< every radius except the reference
    std::vector<double> errors;     ///< u^{n_k}(0,x) - u^{n_K}(0,x)
    std::vector<double> ses;        ///< paired SE
    std::vector<std::size_t> exits;
    std::vector<char> saturated;    ///< no exits and error exactly 0
    std::vector<double> fit_radii;  ///< radii used in the OLS
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool fitted = false;
    bool reference_saturated = false;
    std::vector<std::string> warnings;
};

struct LocalizationExperimentReport {
    std::vector<DecayFit> fits;
    bool slopes_negative = false;
    /// Intercepts ordered by |x|^2 are increasing (only meaningful with >= 2 points).
    bool intercept_increases_with_x2 = true;
    std::string fits_csv() const;
    std::string errors_csv() const;
};

LocalizationExperimentReport localization_error_experiment(const PdeProblem& problem, const LocalizationExperimentConfig& cfg);

} // namespace ybsde
