#include "ybsde/young_calculus.hpp"

#include "ybsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ybsde {

namespace {

void check_compatible(const SamplePath& y, const SamplePath& x, const SpaceTimeDriver& driver) {
    require(y.grid == x.grid, "Young integral: integrand and space path must share a grid");
    require(x.dim() == driver.space_dim(), "Young integral: space path dimension differs from driver");
    require(y.dim() == 1 || y.dim() == driver.channels(),
            "Young integral: integrand must be scalar or have one component per driver channel");
}

} // namespace

Eigen::VectorXd young_riemann_sum(const SamplePath& y, const SamplePath& x, const SpaceTimeDriver& driver,
                                  std::size_t first, std::size_t last, std::size_t subdivisions, SpaceEvaluation space) {
    check_compatible(y, x, driver);
    require(first <= last && last < y.size(), "young_riemann_sum: bad index range");
    require(subdivisions >= 1, "young_riemann_sum: subdivisions must be positive");
    const std::size_t M = driver.channels(), d = x.dim(), ny = y.dim();
    const bool contract = ny > 1;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(contract ? 1 : static_cast<Eigen::Index>(M));
    std::vector<double> xs(d), inc(M);
    Eigen::VectorXd yv(static_cast<Eigen::Index>(ny));
    const double inv = 1.0 / static_cast<double>(subdivisions);
    for (std::size_t i = first; i < last; ++i) {
        const double t0 = y.grid[i], t1 = y.grid[i + 1], h = (t1 - t0) * inv;
        const auto r0 = static_cast<Eigen::Index>(i), r1 = r0 + 1;
        for (std::size_t j = 0; j < subdivisions; ++j) {
            const double w = static_cast<double>(j) * inv;
            const double wx = space == SpaceEvaluation::left ? w : w + 0.5 * inv;
            const double u0 = t0 + static_cast<double>(j) * h;
            const double u1 = j + 1 == subdivisions ? t1 : u0 + h;
            yv = (1.0 - w) * y.values.row(r0).transpose() + w * y.values.row(r1).transpose();
            for (std::size_t k = 0; k < d; ++k)
                xs[k] = (1.0 - wx) * x.values(r0, static_cast<Eigen::Index>(k)) + wx * x.values(r1, static_cast<Eigen::Index>(k));
            driver.increment_into(u0, u1, xs, inc);
            if (contract) {
                for (std::size_t k = 0; k < M; ++k) acc(0) += yv(static_cast<Eigen::Index>(k)) * inc[k];
            } else {
                for (std::size_t k = 0; k < M; ++k) acc(static_cast<Eigen::Index>(k)) += yv(0) * inc[k];
            }
        }
    }
    return acc;
}

YoungIntegralResult nonlinear_young_integral(const SamplePath& y, const SamplePath& x, const SpaceTimeDriver& driver,
                                             double a, double b, const YoungIntegralOptions& opts) {
    check_compatible(y, x, driver);
    require(a <= b, "nonlinear_young_integral: a > b");
    require(opts.max_levels >= 1, "nonlinear_young_integral: max_levels must be >= 1");
    require(opts.max_levels <= 30, "nonlinear_young_integral: max_levels too large");
    const std::size_t first = y.grid.nearest_index(a), last = y.grid.nearest_index(b);

    YoungIntegralResult res;
    res.value = young_riemann_sum(y, x, driver, first, last, 1, opts.space);
    res.levels = 1;
    if (first == last) {
        res.converged = true;
        return res;
    }
    for (int level = 2; level <= opts.max_levels; ++level) {
        Eigen::VectorXd next = young_riemann_sum(y, x, driver, first, last, std::size_t{1} << (level - 1), opts.space);
        res.cauchy_gap = (next - res.value).cwiseAbs().maxCoeff();
        res.gaps.push_back(res.cauchy_gap);
        res.value = std::move(next);
        res.levels = level;
        if (res.cauchy_gap <= opts.abs_tolerance + opts.rel_tolerance * res.value.cwiseAbs().maxCoeff()) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

FlowCoefficients::FlowCoefficients(SamplePath p, std::size_t n, std::size_t m) : path(std::move(p)), N(n), M(m) {
    require(N >= 1 && M >= 1, "FlowCoefficients: N and M must be positive");
    require(path.dim() == N * N * M, "FlowCoefficients: path dimension must equal M*N*N");
}

FlowCoefficients FlowCoefficients::constant(const TimeGrid& grid, const std::vector<Eigen::MatrixXd>& per_channel) {
    require(!per_channel.empty(), "FlowCoefficients::constant: no channels");
    const auto n = per_channel.front().rows();
    Eigen::VectorXd flat(static_cast<Eigen::Index>(per_channel.size()) * n * n);
    for (std::size_t k = 0; k < per_channel.size(); ++k) {
        require(per_channel[k].rows() == n && per_channel[k].cols() == n, "FlowCoefficients::constant: matrices must be N x N");
        flat.segment(static_cast<Eigen::Index>(k) * n * n, n * n) = per_channel[k].reshaped();
    }
    Eigen::MatrixXd v = flat.transpose().replicate(static_cast<Eigen::Index>(grid.size()), 1);
    return FlowCoefficients(SamplePath(grid, std::move(v)), static_cast<std::size_t>(n), per_channel.size());
}

Eigen::Map<const Eigen::MatrixXd> FlowCoefficients::matrix(std::size_t time_index, std::size_t channel) const {
    // values is column-major, so a row is strided; copy-free access needs a row-major view.
    thread_local Eigen::VectorXd scratch;
    scratch = path.values.row(static_cast<Eigen::Index>(time_index)).transpose();
    const auto nn = static_cast<Eigen::Index>(N * N);
    return Eigen::Map<const Eigen::MatrixXd>(scratch.data() + static_cast<Eigen::Index>(channel) * nn,
                                             static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
}

namespace {

FlowPath euler_flow(const FlowCoefficients& alpha, const SpaceTimeDriver& driver, const SamplePath& x, std::size_t first,
                    double guard) {
    const std::size_t N = alpha.N, M = alpha.M, m = x.size();
    FlowPath flow;
    flow.N = N;
    flow.base_time = x.grid[first];
    flow.grid = TimeGrid(std::vector<double>(x.grid.times().begin() + static_cast<std::ptrdiff_t>(first), x.grid.times().end()),
                         x.grid.horizon());
    flow.values.reserve(m - first);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    flow.values.push_back(gamma);
    std::vector<double> xs(x.dim()), inc(M);
    Eigen::MatrixXd step(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t i = first; i + 1 < m; ++i) {
        for (std::size_t k = 0; k < x.dim(); ++k) xs[k] = x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        driver.increment_into(x.grid[i], x.grid[i + 1], xs, inc);
        step.setZero();
        const Eigen::VectorXd row = alpha.path.values.row(static_cast<Eigen::Index>(i)).transpose();
        const auto nn = static_cast<Eigen::Index>(N * N);
        for (std::size_t k = 0; k < M; ++k) {
            Eigen::Map<const Eigen::MatrixXd> a(row.data() + static_cast<Eigen::Index>(k) * nn, static_cast<Eigen::Index>(N),
                                                static_cast<Eigen::Index>(N));
            step.noalias() += inc[k] * a.transpose();
        }
        gamma = gamma + step * gamma;
        if (!(gamma.cwiseAbs().maxCoeff() <= guard)) {
            std::ostringstream os;
            os << "solve_flow: |Gamma| exceeded " << guard << " at t = " << x.grid[i + 1] << "; reduce the step size";
            throw NumericalError(os.str());
        }
        flow.values.push_back(gamma);
    }
    return flow;
}

SamplePath refine_on(const SamplePath& p) { return p.refined(); }

} // namespace

FlowPath solve_flow(const FlowCoefficients& alpha, const SpaceTimeDriver& driver, const SamplePath& x, std::size_t first,
                    const FlowOptions& opts) {
    require(alpha.path.grid == x.grid, "solve_flow: alpha and x must share a grid");
    require(alpha.M == driver.channels(), "solve_flow: alpha channel count differs from driver");
    require(x.dim() == driver.space_dim(), "solve_flow: path dimension differs from driver");
    require(first < x.size(), "solve_flow: base index outside grid");

    if (opts.mode == FlowMode::exact_scalar) {
        require(alpha.N == 1 && alpha.M == 1, "solve_flow: exact mode needs N = M = 1");
        FlowPath flow;
        flow.N = 1;
        flow.base_time = x.grid[first];
        flow.grid = TimeGrid(std::vector<double>(x.grid.times().begin() + static_cast<std::ptrdiff_t>(first), x.grid.times().end()),
                             x.grid.horizon());
        double integral = 0.0;
        flow.values.push_back(Eigen::MatrixXd::Identity(1, 1));
        std::vector<double> xs(x.dim());
        for (std::size_t i = first; i + 1 < x.size(); ++i) {
            for (std::size_t k = 0; k < x.dim(); ++k) xs[k] = x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            integral += alpha.path.values(static_cast<Eigen::Index>(i), 0) * driver.scalar_increment(x.grid[i], x.grid[i + 1], xs);
            const double g = std::exp(integral);
            if (!(g <= opts.overflow_guard)) throw NumericalError("solve_flow: exponential flow overflow");
            flow.values.push_back(Eigen::MatrixXd::Constant(1, 1, g));
        }
        return flow;
    }

    FlowPath flow = euler_flow(alpha, driver, x, first, opts.overflow_guard);
    if (opts.richardson) {
        const FlowCoefficients fine_alpha(refine_on(alpha.path), alpha.N, alpha.M);
        const FlowPath fine = euler_flow(fine_alpha, driver, refine_on(x), 2 * first, opts.overflow_guard);
        double err = 0.0;
        for (std::size_t i = 0; i < flow.values.size(); ++i)
            err = std::max(err, (flow.values[i] - fine.values[2 * i]).cwiseAbs().maxCoeff());
        flow.richardson_error = err;
    }
    return flow;
}

FlowPath flow_inverse(const FlowPath& flow, double max_condition) {
    FlowPath inv = flow;
    inv.richardson_error = -1.0;
    for (std::size_t i = 0; i < flow.values.size(); ++i) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(flow.values[i]);
        const auto& sv = svd.singularValues();
        const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
        if (!(cond <= max_condition)) {
            std::ostringstream os;
            os << "flow_inverse: condition number " << cond << " at t = " << flow.grid[i];
            throw NumericalError(os.str());
        }
        inv.values[i] = flow.values[i].inverse();
    }
    return inv;
}

double adjoint_residual(const FlowPath& inverse, const FlowCoefficients& alpha, const SpaceTimeDriver& driver,
                        const SamplePath& x) {
    const std::size_t first = x.grid.nearest_index(inverse.base_time);
    const std::size_t N = alpha.N, M = alpha.M;
    require(inverse.values.size() == x.size() - first, "adjoint_residual: inverse flow grid does not match path grid");
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    std::vector<double> xs(x.dim()), inc(M);
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < inverse.values.size(); ++j) {
        const std::size_t i = first + j;
        for (std::size_t k = 0; k < x.dim(); ++k) xs[k] = x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        driver.increment_into(x.grid[i], x.grid[i + 1], xs, inc);
        for (std::size_t k = 0; k < M; ++k) rhs -= inc[k] * inverse.values[j] * alpha.matrix(i, k).transpose();
        worst = std::max(worst, (inverse.values[j + 1] - rhs).cwiseAbs().maxCoeff());
    }
    return worst;
}

double flow_product_defect(const FlowPath& from_t, const FlowPath& from_s) {
    require(from_t.N == from_s.N, "flow_product_defect: flows have different dimensions");
    require(from_s.base_time >= from_t.base_time, "flow_product_defect: need t <= s");
    const std::size_t k = from_t.grid.nearest_index(from_s.base_time);
    require(std::abs(from_t.grid[k] - from_s.base_time) <= 1e-12 * std::max(1.0, from_t.grid.back()),
            "flow_product_defect: s is not a grid point of the flow from t");
    require(std::abs(from_t.grid.back() - from_s.grid.back()) <= 1e-12 * std::max(1.0, from_t.grid.back()),
            "flow_product_defect: flows end at different times");
    return (from_t.terminal() - from_s.terminal() * from_t.values[k]).cwiseAbs().maxCoeff();
}

} // namespace ybsde
