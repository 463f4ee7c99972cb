#pragma once

#include "ybsde/drivers.hpp"
#include "ybsde/paths.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ybsde {

/// Where the space argument of eta is frozen on each Riemann interval.
enum class SpaceEvaluation { left, midpoint };

struct YoungIntegralOptions {
    double abs_tolerance = 1e-8;
    double rel_tolerance = 1e-6;
    int max_levels = 16;  ///< level 1 is the input grid itself
    SpaceEvaluation space = SpaceEvaluation::left;
};

struct YoungIntegralResult {
    Eigen::VectorXd value;
    int levels = 0;
    double cauchy_gap = 0.0;
    bool converged = false;
    std::vector<double> gaps;  ///< inter-level gaps, gaps[k] between levels k+1 and k+2
};

/// Left-point Riemann sum of y_r eta(dr, x_r) over the grid points of
/// [a, b] (endpoints snapped), refined dyadically with y and x interpolated
/// linearly until successive levels agree. A scalar y multiplies every
/// channel of eta; a y of dimension M is contracted against the channels.
YoungIntegralResult nonlinear_young_integral(const SamplePath& y, const SamplePath& x, const SpaceTimeDriver& driver,
                                             double a, double b, const YoungIntegralOptions& opts = {});

/// Fixed-partition sum over grid indices [first, last], each interval split
/// into `subdivisions` equal pieces.
Eigen::VectorXd young_riemann_sum(const SamplePath& y, const SamplePath& x, const SpaceTimeDriver& driver,
                                  std::size_t first, std::size_t last, std::size_t subdivisions = 1,
                                  SpaceEvaluation space = SpaceEvaluation::left);

/// Per-time coefficient matrices alpha^i_r, stored flattened on a SamplePath:
/// dimension M*N*N, channel-major, each matrix column-major.
struct FlowCoefficients {
    SamplePath path;
    std::size_t N = 1;
    std::size_t M = 1;

    FlowCoefficients() = default;
    FlowCoefficients(SamplePath p, std::size_t n, std::size_t m);

    /// Constant alpha on a grid.
    static FlowCoefficients constant(const TimeGrid& grid, const std::vector<Eigen::MatrixXd>& per_channel);

    Eigen::Map<const Eigen::MatrixXd> matrix(std::size_t time_index, std::size_t channel) const;
};

/// Gamma^t_s on the grid s >= t, with Gamma^t_t = I.
struct FlowPath {
    double base_time = 0.0;
    TimeGrid grid;
    std::vector<Eigen::MatrixXd> values;
    std::size_t N = 1;
    double richardson_error = -1.0;  ///< max |Gamma_h - Gamma_{h/2}|, or -1 if not computed

    const Eigen::MatrixXd& at(std::size_t i) const { return values[i]; }
    const Eigen::MatrixXd& terminal() const { return values.back(); }
};

enum class FlowMode {
    euler,       ///< Gamma_{i+1} = Gamma_i + sum_k (alpha^k_i)^T Gamma_i d_eta_k
    exact_scalar ///< N = M = 1: Gamma = exp(integral of alpha against eta)
};

struct FlowOptions {
    FlowMode mode = FlowMode::euler;
    bool richardson = false;
    double overflow_guard = 1e12;
};

/// Solves dGamma = sum_k (alpha^k)^T Gamma eta_k(ds, x_s) on grid indices
/// [first, grid end]. alpha and x must live on the same grid.
FlowPath solve_flow(const FlowCoefficients& alpha, const SpaceTimeDriver& driver, const SamplePath& x,
                    std::size_t first = 0, const FlowOptions& opts = {});

/// Per-time matrix inverse; throws NumericalError when the condition number
/// exceeds `max_condition`.
FlowPath flow_inverse(const FlowPath& flow, double max_condition = 1e12);

/// max_s |inv_s - (I - sum_{r<s} inv_r (alpha_r)^T d_eta_r)| for an inverse flow.
double adjoint_residual(const FlowPath& inverse, const FlowCoefficients& alpha, const SpaceTimeDriver& driver,
                        const SamplePath& x);

/// |Gamma^t_T - Gamma^s_T Gamma^t_s| (max entry); `from_s` must start on a
/// grid point of `from_t` and both must end at the same time.
double flow_product_defect(const FlowPath& from_t, const FlowPath& from_s);

} // namespace ybsde
