#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ybsde {

/// Strictly increasing sample times inside [0, horizon].
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(std::vector<double> times, double horizon);

    /// n equal steps on [t0, t1]; horizon defaults to t1.
    static TimeGrid uniform(double t0, double t1, std::size_t steps);
    static TimeGrid uniform(double t0, double t1, std::size_t steps, double horizon);

    std::size_t size() const { return times_.size(); }
    std::size_t steps() const { return times_.empty() ? 0 : times_.size() - 1; }
    double operator[](std::size_t i) const { return times_[i]; }
    double front() const { return times_.front(); }
    double back() const { return times_.back(); }
    double horizon() const { return horizon_; }
    double dt(std::size_t i) const { return times_[i + 1] - times_[i]; }
    const std::vector<double>& times() const { return times_; }

    /// Index of the grid time closest to t (ties go to the earlier point).
    std::size_t nearest_index(double t) const;

    /// Inserts the midpoint of every interval.
    TimeGrid refined() const;

    bool operator==(const TimeGrid& other) const = default;

private:
    std::vector<double> times_;
    double horizon_ = 0.0;
};

/// d-dimensional path sampled on a TimeGrid; row i holds the value at grid[i].
struct SamplePath {
    TimeGrid grid;
    Eigen::MatrixXd values;

    SamplePath() = default;
    SamplePath(TimeGrid g, Eigen::MatrixXd v);

    std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
    std::size_t size() const { return grid.size(); }
    Eigen::VectorXd at(std::size_t i) const { return values.row(static_cast<Eigen::Index>(i)).transpose(); }

    /// Piecewise-linear value at an arbitrary time in [grid.front(), grid.back()].
    Eigen::VectorXd interpolate(double t) const;

    /// Same path with midpoints inserted by linear interpolation.
    SamplePath refined() const;

    /// Sub-path on [s, t] with both endpoints snapped to the nearest grid points.
    SamplePath restricted(double s, double t) const;
};

/// Scalar path from a function of time.
template <class F>
SamplePath sample_function(const TimeGrid& grid, F&& fn) {
    Eigen::MatrixXd v(grid.size(), 1);
    for (std::size_t i = 0; i < grid.size(); ++i) v(static_cast<Eigen::Index>(i), 0) = fn(grid[i]);
    return SamplePath(grid, std::move(v));
}

enum class PVarMode { exact, refinement_limit };

/// p-variation over sub-partitions of the grid. Exact mode runs an O(m^2)
/// dynamic program over partition end indices.
double p_variation(const SamplePath& path, double p, PVarMode mode = PVarMode::exact);

/// max_{i<j} |g_j - g_i| / (t_j - t_i)^gamma
double holder_norm(const SamplePath& path, double gamma);

/// max_i |g_i| (Euclidean in the path dimension).
double uniform_norm(const SamplePath& path);

struct NormReport {
    double p_variation = 0.0;
    double holder = 0.0;
    double uniform = 0.0;
    double p = 1.0;
    double gamma = 1.0;
};

NormReport path_norms(const SamplePath& path, double p, double gamma);

} // namespace ybsde
