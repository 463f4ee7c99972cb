#include "ybsde/fractional_sheet.hpp"

#include "ybsde/errors.hpp"
#include "ybsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ybsde {

std::size_t SheetSpec::node_count() const {
    std::size_t n = times.size();
    for (const auto& a : axes) n *= a.size();
    return n;
}

void SheetSpec::validate() const {
    require(!H.empty(), "SheetSpec: need at least one space axis");
    require(axes.size() == H.size(), "SheetSpec: one axis per spatial Hurst exponent");
    require(H0 > 0.0 && H0 < 1.0, "SheetSpec: H0 must lie in (0,1)");
    for (double h : H) require(h > 0.0 && h < 1.0, "SheetSpec: spatial Hurst exponents must lie in (0,1)");
    require(!times.empty(), "SheetSpec: empty time grid");
    require(horizon > 0.0, "SheetSpec: horizon must be positive");
    for (double t : times) require(t >= 0.0 && t <= horizon, "SheetSpec: times must lie in [0, T]");
    for (const auto& a : axes) require(!a.empty(), "SheetSpec: empty space axis");
}

double sheet_covariance(const SheetSpec& spec, double t, std::span<const double> x, double s, std::span<const double> y) {
    const std::size_t n = spec.H.size();
    auto factor = [](double a, double b, double h) {
        return std::pow(std::abs(a), 2 * h) + std::pow(std::abs(b), 2 * h) - std::pow(std::abs(a - b), 2 * h);
    };
    double c = factor(t, s, spec.H0);
    for (std::size_t i = 0; i < n; ++i) c *= factor(x[i], y[i], spec.H[i]);
    return std::ldexp(c, -static_cast<int>(n + 1));
}

DriverRegularity sheet_regularity(const SheetSpec& spec) {
    const double lambda = std::max(1e-3, *std::min_element(spec.H.begin(), spec.H.end()) - 0.01);
    double sum = 0.0;
    for (double h : spec.H) sum += h;
    return {std::max(1e-3, spec.H0 - 0.01), lambda, std::max(0.0, sum - lambda)};
}

namespace {

std::vector<Eigen::VectorXd> space_nodes(const SheetSpec& spec) {
    std::vector<Eigen::VectorXd> nodes(1, Eigen::VectorXd(0));
    for (const auto& axis : spec.axes) {
        std::vector<Eigen::VectorXd> next;
        next.reserve(nodes.size() * axis.size());
        for (const auto& prefix : nodes)
            for (double v : axis) {
                Eigen::VectorXd x(prefix.size() + 1);
                x << prefix, v;
                next.push_back(std::move(x));
            }
        nodes = std::move(next);
    }
    return nodes;
}

} // namespace

SheetSampler::SheetSampler(SheetSpec spec, double initial_jitter) : spec_(std::move(spec)) {
    spec_.validate();
    require(initial_jitter >= 0.0, "SheetSampler: jitter must be nonnegative");
    const std::size_t total = spec_.node_count();
    if (total > spec_.max_nodes)
        throw ResourceError("SheetSampler: grid has " + std::to_string(total) + " nodes, limit is " +
                            std::to_string(spec_.max_nodes));

    const auto xs = space_nodes(spec_);
    const auto nx = xs.size();
    full_cov_.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
    for (std::size_t a = 0; a < total; ++a)
        for (std::size_t b = a; b < total; ++b) {
            const auto& x = xs[a % nx];
            const auto& y = xs[b % nx];
            const double c = sheet_covariance(spec_, spec_.times[a / nx], std::span<const double>(x.data(), x.size()),
                                              spec_.times[b / nx], std::span<const double>(y.data(), y.size()));
            full_cov_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c;
            full_cov_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = c;
        }

    for (Eigen::Index k = 0; k < full_cov_.rows(); ++k)
        if (full_cov_(k, k) > 0.0) active_.push_back(k);
    if (active_.empty()) return;

    const auto m = static_cast<Eigen::Index>(active_.size());
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) cov(i, j) = full_cov_(active_[static_cast<std::size_t>(i)], active_[static_cast<std::size_t>(j)]);
    const double scale = cov.trace() / static_cast<double>(m);

    std::vector<double> schedule{initial_jitter};
    for (double j = 1e-12; j <= 1e-8 * (1 + 1e-9); j *= 10.0)
        if (j > initial_jitter) schedule.push_back(j);
    for (double rel : schedule) {
        Eigen::MatrixXd a = cov;
        a.diagonal().array() += rel * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            jitter_ = rel * scale;
            relative_jitter_ = rel;
            return;
        }
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    std::ostringstream os;
    os << "SheetSampler: Cholesky failed up to jitter 1e-8 * trace/size; smallest eigenvalue estimate " << min_eig;
    throw NumericalError(os.str());
}

Eigen::MatrixXd SheetSampler::draw(std::uint64_t seed, std::uint64_t index) const {
    const std::size_t nt = spec_.times.size();
    const std::size_t nx = spec_.node_count() / nt;
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nt * nx));
    if (!active_.empty()) {
        Philox rng = Philox::stream(seed, index, StreamTag::sheet);
        Eigen::VectorXd z(factor_.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        const Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>() * z;
        for (std::size_t k = 0; k < active_.size(); ++k) flat(active_[k]) = v(static_cast<Eigen::Index>(k));
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nx));
    for (std::size_t i = 0; i < nt; ++i)
        out.row(static_cast<Eigen::Index>(i)) = flat.segment(static_cast<Eigen::Index>(i * nx), static_cast<Eigen::Index>(nx)).transpose();
    return out;
}

GridField SheetSampler::draw_field(std::uint64_t seed, std::uint64_t index) const {
    return GridField(spec_.times, spec_.axes, draw(seed, index));
}

SpaceTimeDriver sample_sheet(const SheetSpec& spec, std::uint64_t seed, double jitter) {
    SheetSampler sampler(spec, jitter);
    return sampler.draw_field(seed).as_driver(spec.horizon, sheet_regularity(spec));
}

bool hurst_admissible(double H0, double H, int d) {
    if (!(H0 > 0.0 && H0 < 1.0 && H > 0.0 && H < 1.0) || d < 1) return false;
    return H0 + H / 2.0 > 1.0 && static_cast<double>(d) * H < 2.0 * H0 - 1.0;
}

std::vector<HurstRegionRow> hurst_region_grid(int d, int resolution) {
    require(resolution >= 2, "hurst_region_grid: resolution must be >= 2");
    require(d >= 1, "hurst_region_grid: dimension must be >= 1");
    std::vector<HurstRegionRow> rows;
    rows.reserve(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));
    const double denom = resolution - 1;
    for (int j = 0; j < resolution; ++j) {
        const double H0 = j / denom;
        for (int i = 0; i < resolution; ++i) {
            const double H = i / denom;
            rows.push_back({H, H0, hurst_admissible(H0, H, d)});
        }
    }
    return rows;
}

} // namespace ybsde
