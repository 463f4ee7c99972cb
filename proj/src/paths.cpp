#include "ybsde/paths.hpp"

#include "ybsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ybsde {

TimeGrid::TimeGrid(std::vector<double> times, double horizon) : times_(std::move(times)), horizon_(horizon) {
    require(!times_.empty(), "TimeGrid: empty time sequence");
    require(horizon_ > 0.0, "TimeGrid: horizon must be positive");
    require(times_.front() >= 0.0, "TimeGrid: negative time");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i)
        require(times_[i] < times_[i + 1], "TimeGrid: times must be strictly increasing (index " + std::to_string(i) + ")");
    require(times_.back() <= horizon_ * (1.0 + 1e-14), "TimeGrid: last time exceeds horizon");
}

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t steps) { return uniform(t0, t1, steps, t1); }

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t steps, double horizon) {
    require(steps >= 1, "TimeGrid::uniform: need at least one step");
    require(t1 > t0, "TimeGrid::uniform: empty interval");
    std::vector<double> t(steps + 1);
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = t0 + h * static_cast<double>(i);
    t.back() = t1;
    return TimeGrid(std::move(t), horizon);
}

std::size_t TimeGrid::nearest_index(double t) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0;
    if (it == times_.end()) return times_.size() - 1;
    const auto hi = static_cast<std::size_t>(it - times_.begin());
    return (t - times_[hi - 1] <= times_[hi] - t) ? hi - 1 : hi;
}

TimeGrid TimeGrid::refined() const {
    std::vector<double> t;
    t.reserve(2 * times_.size());
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
        t.push_back(times_[i]);
        t.push_back(0.5 * (times_[i] + times_[i + 1]));
    }
    t.push_back(times_.back());
    return TimeGrid(std::move(t), horizon_);
}

SamplePath::SamplePath(TimeGrid g, Eigen::MatrixXd v) : grid(std::move(g)), values(std::move(v)) {
    require(static_cast<std::size_t>(values.rows()) == grid.size(), "SamplePath: value count differs from grid length");
    require(values.cols() >= 1, "SamplePath: dimension must be positive");
    require(values.allFinite(), "SamplePath: non-finite value");
}

Eigen::VectorXd SamplePath::interpolate(double t) const {
    const auto& ts = grid.times();
    require(t >= ts.front() - 1e-14 && t <= ts.back() + 1e-14, "SamplePath::interpolate: time outside grid");
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    if (it == ts.end()) return at(ts.size() - 1);
    const auto hi = static_cast<std::size_t>(it - ts.begin());
    if (hi == 0) return at(0);
    const double w = (t - ts[hi - 1]) / (ts[hi] - ts[hi - 1]);
    return ((1.0 - w) * values.row(static_cast<Eigen::Index>(hi - 1)) + w * values.row(static_cast<Eigen::Index>(hi))).transpose();
}

SamplePath SamplePath::refined() const {
    const auto m = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd v(2 * m - 1, values.cols());
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        v.row(2 * i) = values.row(i);
        v.row(2 * i + 1) = 0.5 * (values.row(i) + values.row(i + 1));
    }
    v.row(2 * m - 2) = values.row(m - 1);
    return SamplePath(grid.refined(), std::move(v));
}

SamplePath SamplePath::restricted(double s, double t) const {
    require(s <= t, "SamplePath::restricted: s > t");
    const std::size_t a = grid.nearest_index(s);
    const std::size_t b = grid.nearest_index(t);
    std::vector<double> ts(grid.times().begin() + static_cast<std::ptrdiff_t>(a), grid.times().begin() + static_cast<std::ptrdiff_t>(b) + 1);
    return SamplePath(TimeGrid(std::move(ts), grid.horizon()),
                      values.middleRows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b - a + 1)));
}

double p_variation(const SamplePath& path, double p, PVarMode mode) {
    require(path.size() >= 2, "p_variation: need at least 2 points");
    require(p >= 1.0, "p_variation: p must be >= 1");
    const auto m = static_cast<Eigen::Index>(path.size());
    const auto& g = path.values;
    if (mode == PVarMode::refinement_limit) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i + 1 < m; ++i) sum += std::pow((g.row(i + 1) - g.row(i)).norm(), p);
        return std::pow(sum, 1.0 / p);
    }
    // best[j]: largest sum of |increment|^p over partitions of [t_0, t_j] that
    // use grid points only. Appending a point never lowers the sum, so the
    // optimum over sub-partitions ends at the last index.
    std::vector<double> best(static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index j = 1; j < m; ++j) {
        double b = 0.0;
        for (Eigen::Index i = 0; i < j; ++i)
            b = std::max(b, best[static_cast<std::size_t>(i)] + std::pow((g.row(j) - g.row(i)).norm(), p));
        best[static_cast<std::size_t>(j)] = b;
    }
    return std::pow(best.back(), 1.0 / p);
}

double holder_norm(const SamplePath& path, double gamma) {
    require(path.size() >= 2, "holder_norm: need at least 2 points");
    require(gamma > 0.0 && gamma <= 1.0, "holder_norm: gamma must lie in (0,1]");
    const auto m = static_cast<Eigen::Index>(path.size());
    double h = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double dt = path.grid[static_cast<std::size_t>(j)] - path.grid[static_cast<std::size_t>(i)];
            h = std::max(h, (path.values.row(j) - path.values.row(i)).norm() / std::pow(dt, gamma));
        }
    return h;
}

double uniform_norm(const SamplePath& path) {
    require(path.size() >= 1, "uniform_norm: empty path");
    return path.values.rowwise().norm().maxCoeff();
}

NormReport path_norms(const SamplePath& path, double p, double gamma) {
    return {p_variation(path, p), holder_norm(path, gamma), uniform_norm(path), p, gamma};
}

} // namespace ybsde
