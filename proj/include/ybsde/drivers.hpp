#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ybsde {

/// Declared (tau, lambda, beta) of a driver in C^{tau,lambda;beta}.
struct DriverRegularity {
    double tau = 1.0;
    double lambda = 1.0;
    double beta = 0.0;
};

enum class DriverKind { analytic_separable, mollified, sampled_sheet, custom };

/// Space-time field eta(t, x) with values in R^M, normalized so eta(0, x) = 0.
///
/// The raw evaluator writes M values for (t, x) into `out`. Normalization
/// subtracts raw(0, x) unless the constructor is told the raw field already
/// vanishes at t = 0. Increments in time at a frozen x do not need the
/// normalization and skip it.
class SpaceTimeDriver {
public:
    using RawEval = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

    SpaceTimeDriver() = default;
    SpaceTimeDriver(RawEval raw, std::size_t channels, std::size_t space_dim, double horizon, DriverRegularity reg,
                    bool smooth_in_time, DriverKind kind, bool raw_vanishes_at_zero = false);

    std::size_t channels() const { return channels_; }
    std::size_t space_dim() const { return space_dim_; }
    double horizon() const { return horizon_; }
    const DriverRegularity& regularity() const { return reg_; }
    bool smooth_in_time() const { return smooth_; }
    DriverKind kind() const { return kind_; }

    void eval_into(double t, std::span<const double> x, std::span<double> out) const;
    Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const;
    /// First channel; convenience for M = 1.
    double scalar(double t, std::span<const double> x) const;

    /// eta(t1, x) - eta(t0, x) at frozen x.
    void increment_into(double t0, double t1, std::span<const double> x, std::span<double> out) const;
    /// First-channel increment.
    double scalar_increment(double t0, double t1, std::span<const double> x) const;

    const RawEval& raw() const { return raw_; }

private:
    RawEval raw_;
    std::size_t channels_ = 1;
    std::size_t space_dim_ = 1;
    double horizon_ = 1.0;
    DriverRegularity reg_{};
    bool smooth_ = false;
    DriverKind kind_ = DriverKind::custom;
    bool vanishes_ = false;
};

/// eta(t, x) = v(x) a(t).
SpaceTimeDriver make_separable_driver(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> v,
                                      std::function<double(double)> a, std::size_t channels, std::size_t space_dim,
                                      double horizon, DriverRegularity reg, bool a_differentiable);

/// Scalar-space, scalar-valued shortcut: eta(t, x) = v(x_0) a(t).
SpaceTimeDriver make_separable_driver(std::function<double(double)> v, std::function<double(double)> a, double horizon,
                                      DriverRegularity reg, bool a_differentiable);

/// Standard bump rho(u) = c exp(-1/(1-u^2)) on (-1, 1), unit mass.
double mollifier(double u);

/// Time convolution with rho_delta. Quadrature is composite Simpson with
/// `quadrature_points` (odd, >= 3) nodes on the kernel support; the field is
/// extended past 0 and T by point reflection.
SpaceTimeDriver mollify_time(const SpaceTimeDriver& driver, double delta, std::size_t quadrature_points = 65);

struct SeminormEstimate {
    double tau_lambda_beta = 0.0;  ///< sum of the three weighted suprema
    double tau_lambda = 0.0;       ///< same, unweighted
    double rect_weighted = 0.0;
    double time_weighted = 0.0;
    double space_weighted = 0.0;
    std::vector<double> time_grid;
    std::size_t space_points = 0;
    std::size_t pairs_sampled = 0;
};

/// Sampled lower bound of ||eta||_{tau,lambda;beta} and ||eta||_{tau,lambda}
/// over (time grid) x (space points). When the pair count exceeds
/// `pair_budget`, pairs are drawn uniformly with a fixed seed.
SeminormEstimate estimate_seminorm(const SpaceTimeDriver& driver, std::span<const double> times,
                                   const std::vector<Eigen::VectorXd>& space_points, double beta, double tau,
                                   double lambda, std::size_t pair_budget = 1'000'000, std::uint64_t seed = 0);

/// Scalar field tabulated on (time grid) x (tensor space grid), evaluated by
/// multilinear interpolation with clamping outside the grid.
class GridField {
public:
    GridField(std::vector<double> times, std::vector<std::vector<double>> axes, Eigen::MatrixXd values);

    const std::vector<double>& times() const { return times_; }
    const std::vector<std::vector<double>>& axes() const { return axes_; }
    /// rows = times, cols = flattened space nodes (last axis fastest).
    const Eigen::MatrixXd& values() const { return values_; }
    std::size_t space_dim() const { return axes_.size(); }
    std::size_t space_nodes() const { return static_cast<std::size_t>(values_.cols()); }

    double operator()(double t, std::span<const double> x) const;

    /// Coordinates of flattened space node k.
    Eigen::VectorXd node(std::size_t k) const;

    SpaceTimeDriver as_driver(double horizon, DriverRegularity reg, DriverKind kind = DriverKind::sampled_sheet) const;

    /// Header line `grid,d=<n>,times=<t;..>,axis0=<x;..>,...` then one CSV row per time.
    void write_csv(std::ostream& os) const;
    static GridField read_csv(std::istream& is);

private:
    std::vector<double> times_;
    std::vector<std::vector<double>> axes_;
    Eigen::MatrixXd values_;
    std::vector<std::size_t> strides_;
};

} // namespace ybsde
