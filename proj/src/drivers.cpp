#include "ybsde/drivers.hpp"

#include "ybsde/csv.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace ybsde {

SpaceTimeDriver::SpaceTimeDriver(RawEval raw, std::size_t channels, std::size_t space_dim, double horizon,
                                 DriverRegularity reg, bool smooth_in_time, DriverKind kind, bool raw_vanishes_at_zero)
    : raw_(std::move(raw)), channels_(channels), space_dim_(space_dim), horizon_(horizon), reg_(reg),
      smooth_(smooth_in_time), kind_(kind), vanishes_(raw_vanishes_at_zero) {
    require(static_cast<bool>(raw_), "SpaceTimeDriver: missing evaluator");
    require(channels_ >= 1 && space_dim_ >= 1, "SpaceTimeDriver: channel count and space dimension must be positive");
    require(horizon_ > 0.0, "SpaceTimeDriver: horizon must be positive");
    require(reg_.tau > 0.0 && reg_.tau <= 1.0 && reg_.lambda > 0.0 && reg_.lambda <= 1.0 && reg_.beta >= 0.0,
            "SpaceTimeDriver: regularity must satisfy tau, lambda in (0,1], beta >= 0");
}

void SpaceTimeDriver::eval_into(double t, std::span<const double> x, std::span<double> out) const {
    raw_(t, x, out);
    if (vanishes_) return;
    double zero[16];
    if (channels_ <= 16) {
        raw_(0.0, x, std::span<double>(zero, channels_));
        for (std::size_t k = 0; k < channels_; ++k) out[k] -= zero[k];
    } else {
        std::vector<double> z(channels_);
        raw_(0.0, x, z);
        for (std::size_t k = 0; k < channels_; ++k) out[k] -= z[k];
    }
}

Eigen::VectorXd SpaceTimeDriver::operator()(double t, const Eigen::VectorXd& x) const {
    require(static_cast<std::size_t>(x.size()) == space_dim_, "SpaceTimeDriver: wrong space dimension");
    Eigen::VectorXd out(static_cast<Eigen::Index>(channels_));
    eval_into(t, std::span<const double>(x.data(), space_dim_), std::span<double>(out.data(), channels_));
    return out;
}

double SpaceTimeDriver::scalar(double t, std::span<const double> x) const {
    double buf[16];
    if (channels_ <= 16) {
        eval_into(t, x, std::span<double>(buf, channels_));
        return buf[0];
    }
    std::vector<double> v(channels_);
    eval_into(t, x, v);
    return v[0];
}

void SpaceTimeDriver::increment_into(double t0, double t1, std::span<const double> x, std::span<double> out) const {
    double buf[16];
    std::vector<double> heap;
    std::span<double> lo(buf, std::min<std::size_t>(channels_, 16));
    if (channels_ > 16) {
        heap.resize(channels_);
        lo = heap;
    }
    raw_(t1, x, out);
    raw_(t0, x, lo);
    for (std::size_t k = 0; k < channels_; ++k) out[k] -= lo[k];
}

double SpaceTimeDriver::scalar_increment(double t0, double t1, std::span<const double> x) const {
    if (channels_ == 1) {
        double a = 0.0, b = 0.0;
        raw_(t1, x, std::span<double>(&b, 1));
        raw_(t0, x, std::span<double>(&a, 1));
        return b - a;
    }
    std::vector<double> v(channels_);
    increment_into(t0, t1, x, v);
    return v[0];
}

SpaceTimeDriver make_separable_driver(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> v,
                                      std::function<double(double)> a, std::size_t channels, std::size_t space_dim,
                                      double horizon, DriverRegularity reg, bool a_differentiable) {
    require(static_cast<bool>(v) && static_cast<bool>(a), "make_separable_driver: missing factor");
    const bool vanishes = a(0.0) == 0.0;
    auto raw = [v = std::move(v), a = std::move(a), channels, space_dim](double t, std::span<const double> x,
                                                                         std::span<double> out) {
        const Eigen::VectorXd vx = v(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(space_dim)));
        if (static_cast<std::size_t>(vx.size()) != channels) throw DomainError("separable driver: v returned wrong channel count");
        const double at = a(t);
        for (std::size_t k = 0; k < channels; ++k) out[k] = vx(static_cast<Eigen::Index>(k)) * at;
    };
    return SpaceTimeDriver(std::move(raw), channels, space_dim, horizon, reg, a_differentiable,
                           DriverKind::analytic_separable, vanishes);
}

SpaceTimeDriver make_separable_driver(std::function<double(double)> v, std::function<double(double)> a, double horizon,
                                      DriverRegularity reg, bool a_differentiable) {
    require(static_cast<bool>(v) && static_cast<bool>(a), "make_separable_driver: missing factor");
    const bool vanishes = a(0.0) == 0.0;
    auto raw = [v = std::move(v), a = std::move(a)](double t, std::span<const double> x, std::span<double> out) {
        out[0] = v(x[0]) * a(t);
    };
    return SpaceTimeDriver(std::move(raw), 1, 1, horizon, reg, a_differentiable, DriverKind::analytic_separable,
                           vanishes);
}

namespace {

double bump(double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }

// Composite Simpson weights for `n` (odd) nodes on [-1, 1].
std::vector<double> simpson_weights(std::size_t n) {
    std::vector<double> w(n);
    const double h = 2.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) w[i] = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (auto& x : w) x *= h / 3.0;
    return w;
}

double bump_mass() {
    static const double mass = [] {
        constexpr std::size_t n = 129;
        const auto w = simpson_weights(n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * bump(-1.0 + 2.0 * static_cast<double>(i) / (n - 1));
        return s;
    }();
    return mass;
}

} // namespace

double mollifier(double u) { return bump(u) / bump_mass(); }

SpaceTimeDriver mollify_time(const SpaceTimeDriver& driver, double delta, std::size_t quadrature_points) {
    const double T = driver.horizon();
    require(delta > 0.0, "mollify_time: delta must be positive");
    require(delta < T, "mollify_time: delta must be smaller than the horizon");
    require(quadrature_points >= 3 && quadrature_points % 2 == 1, "mollify_time: quadrature_points must be odd and >= 3");

    // Nodes u_j in (-1, 1) with weights w_j rho(u_j), renormalized to unit sum.
    const auto w = simpson_weights(quadrature_points);
    std::vector<double> nodes, weights;
    double total = 0.0;
    for (std::size_t j = 0; j < quadrature_points; ++j) {
        const double u = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(quadrature_points - 1);
        const double k = w[j] * bump(u);
        if (k <= 0.0) continue;
        nodes.push_back(u);
        weights.push_back(k);
        total += k;
    }
    for (auto& k : weights) k /= total;

    const std::size_t M = driver.channels();
    auto inner = driver;
    auto raw = [inner, nodes, weights, delta, T, M](double t, std::span<const double> x, std::span<double> out) {
        double tmp_buf[16], edge_buf[16];
        std::vector<double> tmp_heap, edge_heap;
        std::span<double> tmp(tmp_buf, std::min<std::size_t>(M, 16)), edge(edge_buf, std::min<std::size_t>(M, 16));
        if (M > 16) {
            tmp_heap.resize(M);
            edge_heap.resize(M);
            tmp = tmp_heap;
            edge = edge_heap;
        }
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            double s = t - delta * nodes[j];
            // point reflection about the endpoint values keeps affine-in-time fields exact
            if (s < 0.0) {
                inner.eval_into(-s, x, tmp);
                inner.eval_into(0.0, x, edge);
                for (std::size_t k = 0; k < M; ++k) tmp[k] = 2.0 * edge[k] - tmp[k];
            } else if (s > T) {
                inner.eval_into(2.0 * T - s, x, tmp);
                inner.eval_into(T, x, edge);
                for (std::size_t k = 0; k < M; ++k) tmp[k] = 2.0 * edge[k] - tmp[k];
            } else {
                inner.eval_into(s, x, tmp);
            }
            for (std::size_t k = 0; k < M; ++k) out[k] += weights[j] * tmp[k];
        }
    };
    return SpaceTimeDriver(std::move(raw), M, driver.space_dim(), T, driver.regularity(), true, DriverKind::mollified,
                           false);
}

SeminormEstimate estimate_seminorm(const SpaceTimeDriver& driver, std::span<const double> times,
                                   const std::vector<Eigen::VectorXd>& space_points, double beta, double tau,
                                   double lambda, std::size_t pair_budget, std::uint64_t seed) {
    require(times.size() >= 2, "estimate_seminorm: time grid needs at least 2 points");
    require(space_points.size() >= 2, "estimate_seminorm: space grid needs at least 2 points");
    require(tau > 0.0 && tau <= 1.0 && lambda > 0.0 && lambda <= 1.0, "estimate_seminorm: tau, lambda must lie in (0,1]");
    require(beta >= 0.0, "estimate_seminorm: beta must be nonnegative");
    require(pair_budget >= 1, "estimate_seminorm: pair budget must be positive");

    const std::size_t nt = times.size(), nx = space_points.size(), M = driver.channels();
    std::vector<Eigen::MatrixXd> table(nt, Eigen::MatrixXd(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(nx)));
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t j = 0; j < nx; ++j) table[i].col(static_cast<Eigen::Index>(j)) = driver(times[i], space_points[j]);

    std::vector<double> norm_x(nx);
    for (std::size_t j = 0; j < nx; ++j) norm_x[j] = space_points[j].norm();
    auto w2 = [&](std::size_t a, std::size_t b) { return 1.0 + std::pow(norm_x[a], beta) + std::pow(norm_x[b], beta); };

    SeminormEstimate est;
    est.time_grid.assign(times.begin(), times.end());
    est.space_points = nx;
    double rect_u = 0.0, time_u = 0.0, space_u = 0.0;

    // time quotient: all (s < t, x)
    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = a + 1; b < nt; ++b) {
            const double dt = std::pow(std::abs(times[b] - times[a]), tau);
            for (std::size_t j = 0; j < nx; ++j) {
                const double q = (table[b].col(j) - table[a].col(j)).norm() / dt;
                time_u = std::max(time_u, q);
                est.time_weighted = std::max(est.time_weighted, q / (1.0 + std::pow(norm_x[j], beta + lambda)));
            }
        }
    // space quotient: all (t, x != y)
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t a = 0; a < nx; ++a)
            for (std::size_t b = a + 1; b < nx; ++b) {
                const double dx = (space_points[b] - space_points[a]).norm();
                if (dx == 0.0) continue;
                const double q = (table[i].col(b) - table[i].col(a)).norm() / std::pow(dx, lambda);
                space_u = std::max(space_u, q);
                est.space_weighted = std::max(est.space_weighted, q / w2(a, b));
            }

    // rectangular quotient: (s < t) x (x != y), subsampled beyond the budget
    const std::size_t tpairs = nt * (nt - 1) / 2, xpairs = nx * (nx - 1) / 2;
    auto rect = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        const double dx = (space_points[d] - space_points[c]).norm();
        if (dx == 0.0) return;
        const double num = (table[a].col(c) - table[b].col(c) - table[a].col(d) + table[b].col(d)).norm();
        const double q = num / (std::pow(std::abs(times[b] - times[a]), tau) * std::pow(dx, lambda));
        rect_u = std::max(rect_u, q);
        est.rect_weighted = std::max(est.rect_weighted, q / w2(c, d));
    };
    if (static_cast<double>(tpairs) * static_cast<double>(xpairs) <= static_cast<double>(pair_budget)) {
        for (std::size_t a = 0; a < nt; ++a)
            for (std::size_t b = a + 1; b < nt; ++b)
                for (std::size_t c = 0; c < nx; ++c)
                    for (std::size_t d = c + 1; d < nx; ++d) rect(a, b, c, d);
        est.pairs_sampled = tpairs * xpairs;
    } else {
        Philox rng = Philox::stream(seed, 0, StreamTag::pilot);
        auto pick = [&](std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))); };
        for (std::size_t k = 0; k < pair_budget; ++k) {
            std::size_t a = pick(nt), b = pick(nt), c = pick(nx), d = pick(nx);
            if (a == b || c == d) continue;
            if (a > b) std::swap(a, b);
            if (c > d) std::swap(c, d);
            rect(a, b, c, d);
        }
        est.pairs_sampled = pair_budget;
    }

    est.tau_lambda_beta = est.rect_weighted + est.time_weighted + est.space_weighted;
    est.tau_lambda = rect_u + time_u + space_u;
    return est;
}

GridField::GridField(std::vector<double> times, std::vector<std::vector<double>> axes, Eigen::MatrixXd values)
    : times_(std::move(times)), axes_(std::move(axes)), values_(std::move(values)) {
    require(!times_.empty(), "GridField: empty time grid");
    require(!axes_.empty(), "GridField: no space axes");
    auto increasing = [](const std::vector<double>& v) {
        for (std::size_t i = 0; i + 1 < v.size(); ++i)
            if (!(v[i] < v[i + 1])) return false;
        return !v.empty();
    };
    require(increasing(times_), "GridField: times must be strictly increasing");
    std::size_t nodes = 1;
    for (const auto& ax : axes_) {
        require(increasing(ax), "GridField: space axes must be strictly increasing");
        nodes *= ax.size();
    }
    require(static_cast<std::size_t>(values_.rows()) == times_.size() && static_cast<std::size_t>(values_.cols()) == nodes,
            "GridField: value table shape does not match grids");
    strides_.assign(axes_.size(), 1);
    for (std::size_t k = axes_.size(); k-- > 1;) strides_[k - 1] = strides_[k] * axes_[k].size();
}

namespace {

// Bracketing index and weight along one axis, clamped to the ends.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double v) {
    if (axis.size() == 1 || v <= axis.front()) return {0, 0.0};
    if (v >= axis.back()) return {axis.size() - 2, 1.0};
    const auto hi = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), v) - axis.begin());
    return {hi - 1, (v - axis[hi - 1]) / (axis[hi] - axis[hi - 1])};
}

} // namespace

double GridField::operator()(double t, std::span<const double> x) const {
    const std::size_t n = axes_.size();
    auto [ti, tw] = locate(times_, t);
    std::size_t idx[8];
    double wt[8];
    require(n <= 8, "GridField: at most 8 space dimensions");
    for (std::size_t k = 0; k < n; ++k) std::tie(idx[k], wt[k]) = locate(axes_[k], x[k]);
    const std::size_t corners = std::size_t{1} << n;
    double result = 0.0;
    for (int dt = 0; dt < 2; ++dt) {
        const double wtime = dt ? tw : 1.0 - tw;
        if (wtime == 0.0 || (dt && times_.size() == 1)) continue;
        const auto row = static_cast<Eigen::Index>(ti + static_cast<std::size_t>(dt));
        for (std::size_t c = 0; c < corners; ++c) {
            double w = wtime;
            std::size_t flat = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t bit = (c >> k) & 1u;
                if (bit && axes_[k].size() == 1) { w = 0.0; break; }
                w *= bit ? wt[k] : 1.0 - wt[k];
                flat += (idx[k] + bit) * strides_[k];
            }
            if (w != 0.0) result += w * values_(row, static_cast<Eigen::Index>(flat));
        }
    }
    return result;
}

Eigen::VectorXd GridField::node(std::size_t k) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(axes_.size()));
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        x(static_cast<Eigen::Index>(a)) = axes_[a][(k / strides_[a]) % axes_[a].size()];
    }
    return x;
}

SpaceTimeDriver GridField::as_driver(double horizon, DriverRegularity reg, DriverKind kind) const {
    auto field = std::make_shared<const GridField>(*this);
    auto raw = [field](double t, std::span<const double> x, std::span<double> out) { out[0] = (*field)(t, x); };
    const bool vanishes = times_.front() == 0.0 && values_.row(0).isZero(0.0);
    return SpaceTimeDriver(std::move(raw), 1, axes_.size(), horizon, reg, false, kind, vanishes);
}

void GridField::write_csv(std::ostream& os) const {
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v[i]);
        return s;
    };
    os << "grid,d=" << axes_.size() << ",times=" << list(times_);
    for (std::size_t k = 0; k < axes_.size(); ++k) os << ",axis" << k << '=' << list(axes_[k]);
    os << '\n';
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        for (Eigen::Index j = 0; j < values_.cols(); ++j) os << (j ? "," : "") << format_double(values_(i, j));
        os << '\n';
    }
}

GridField GridField::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("GridField::read_csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split(line, ',');
    if (fields.size() < 3 || fields[0] != "grid") throw DomainError("GridField::read_csv: bad header");
    auto value_of = [&](std::string_view f, std::string_view key) {
        if (f.substr(0, key.size() + 1) != std::string(key) + "=") throw DomainError("GridField::read_csv: expected " + std::string(key));
        return f.substr(key.size() + 1);
    };
    auto parse_list = [](std::string_view s) {
        std::vector<double> v;
        for (auto p : split(s, ';')) v.push_back(parse_double(p));
        return v;
    };
    const auto d = static_cast<std::size_t>(parse_double(value_of(fields[1], "d")));
    if (fields.size() != 3 + d) throw DomainError("GridField::read_csv: header axis count differs from d");
    auto times = parse_list(value_of(fields[2], "times"));
    std::vector<std::vector<double>> axes;
    std::size_t nodes = 1;
    for (std::size_t k = 0; k < d; ++k) {
        axes.push_back(parse_list(value_of(fields[3 + k], "axis" + std::to_string(k))));
        nodes *= axes.back().size();
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(nodes));
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::getline(is, line)) throw DomainError("GridField::read_csv: missing data row");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto cells = split(line, ',');
        if (cells.size() != nodes) throw DomainError("GridField::read_csv: row width differs from space grid");
        for (std::size_t j = 0; j < nodes; ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(cells[j]);
    }
    return GridField(std::move(times), std::move(axes), std::move(values));
}

} // namespace ybsde
