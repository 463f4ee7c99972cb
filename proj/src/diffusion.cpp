#include "ybsde/diffusion.hpp"

#include "ybsde/errors.hpp"
#include "ybsde/parallel.hpp"
#include "ybsde/rng.hpp"
#include "ybsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ybsde/csv.hpp"

namespace ybsde {

void DiffusionSpec::validate() const {
    require(dim >= 1, "DiffusionSpec: dimension must be positive");
    require(static_cast<bool>(sigma) && static_cast<bool>(drift), "DiffusionSpec: missing coefficient");
    require(bound > 0.0, "DiffusionSpec: bound L must be positive");
    require(lipschitz > 0.0, "DiffusionSpec: Lipschitz constant must be positive");
    require(ellipticity >= 0.0, "DiffusionSpec: ellipticity must be nonnegative");
}

DiffusionSpec constant_diffusion(std::size_t dim, double sigma, double mu, std::string name) {
    DiffusionSpec spec;
    spec.dim = dim;
    spec.sigma = [dim, sigma](double, std::span<const double>, std::span<double> s) {
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) s[k * dim + k] = sigma;
    };
    spec.drift = [mu](double, std::span<const double>, std::span<double> b) { std::fill(b.begin(), b.end(), mu); };
    const double d = static_cast<double>(dim);
    spec.bound = std::max({std::abs(sigma) * std::sqrt(d), std::abs(mu) * std::sqrt(d), 1e-300});
    spec.lipschitz = 1.0;
    spec.ellipticity = sigma * sigma;
    spec.name = std::move(name);
    return spec;
}

namespace {

[[noreturn]] void bound_violation(const char* what, double value, double L, double t) {
    std::ostringstream os;
    os << "diffusion coefficient bound violated: |" << what << "| = " << value << " > L = " << L << " at t = " << t
       << " (coefficients must be bounded by L)";
    throw ContractError(os.str());
}

} // namespace

void for_each_path(const DiffusionSpec& spec, const Eigen::VectorXd& x0, const TimeGrid& grid, std::size_t samples,
                   std::uint64_t seed, std::size_t workers, const std::function<void(std::size_t, const PathView&)>& visit) {
    spec.validate();
    require(samples >= 1, "simulate: need at least one sample");
    require(static_cast<std::size_t>(x0.size()) == spec.dim, "simulate: x0 dimension differs from spec");
    require(grid.size() >= 1, "simulate: empty grid");
    const std::size_t d = spec.dim, m = grid.size();
    const double L = spec.bound * (1.0 + 1e-12);
    const double nu = spec.ellipticity;

    parallel_for(samples, workers, [&](std::size_t s) {
        thread_local std::vector<double> states, incs, sig, drift, z;
        states.assign(m * d, 0.0);
        incs.assign((m - 1) * d, 0.0);
        sig.resize(d * d);
        drift.resize(d);
        z.resize(d);
        Philox rng = Philox::stream(seed, s);
        for (std::size_t k = 0; k < d; ++k) states[k] = x0(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double t = grid[i], h = grid.dt(i), sq = std::sqrt(h);
            std::span<const double> x(states.data() + i * d, d);
            spec.sigma(t, x, sig);
            spec.drift(t, x, drift);
            double sn = 0.0, bn = 0.0;
            for (double v : sig) sn += v * v;
            for (double v : drift) bn += v * v;
            if (sn > L * L) bound_violation("sigma", std::sqrt(sn), spec.bound, t);
            if (bn > L * L) bound_violation("b", std::sqrt(bn), spec.bound, t);
            if (nu > 0.0 && s == 0) {
                Eigen::Map<const Eigen::MatrixXd> S(sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                const double lo = d == 1 ? sig[0] * sig[0]
                                         : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S * S.transpose(), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
                if (lo < nu * (1.0 - 1e-12)) {
                    std::ostringstream os;
                    os << "diffusion ellipticity violated: min eig(sigma sigma^T) = " << lo << " < nu = " << nu << " at t = " << t;
                    throw ContractError(os.str());
                }
            }
            for (std::size_t k = 0; k < d; ++k) z[k] = rng.normal() * sq;
            for (std::size_t k = 0; k < d; ++k) {
                double v = states[i * d + k] + drift[k] * h;
                for (std::size_t j = 0; j < d; ++j) v += sig[j * d + k] * z[j];
                states[(i + 1) * d + k] = v;
                incs[i * d + k] = z[k];
            }
        }
        visit(s, PathView{states, incs, d, m, &grid});
    });
}

PathBatch simulate(const DiffusionSpec& spec, const Eigen::VectorXd& x0, const TimeGrid& grid, std::size_t samples,
                   std::uint64_t seed, std::size_t workers) {
    PathBatch batch;
    batch.grid = grid;
    batch.dim = spec.dim;
    batch.samples = samples;
    batch.seed = seed;
    const std::size_t d = spec.dim, m = grid.size();
    batch.states.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(m * d));
    batch.increments.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>((m - 1) * d));
    for_each_path(spec, x0, grid, samples, seed, workers, [&](std::size_t s, const PathView& p) {
        const auto row = static_cast<Eigen::Index>(s);
        for (std::size_t j = 0; j < m * d; ++j) batch.states(row, static_cast<Eigen::Index>(j)) = p.states[j];
        for (std::size_t j = 0; j < (m - 1) * d; ++j) batch.increments(row, static_cast<Eigen::Index>(j)) = p.increments[j];
    });
    return batch;
}

std::vector<double> PathBatch::path_states(std::size_t s) const {
    const auto row = states.row(static_cast<Eigen::Index>(s));
    return std::vector<double>(row.begin(), row.end());
}

std::vector<double> PathBatch::path_increments(std::size_t s) const {
    const auto row = increments.row(static_cast<Eigen::Index>(s));
    return std::vector<double>(row.begin(), row.end());
}

PathView PathBatch::view(std::size_t s, std::vector<double>& states_buf, std::vector<double>& inc_buf) const {
    const auto r = static_cast<Eigen::Index>(s);
    states_buf.resize(static_cast<std::size_t>(states.cols()));
    inc_buf.resize(static_cast<std::size_t>(increments.cols()));
    for (Eigen::Index j = 0; j < states.cols(); ++j) states_buf[static_cast<std::size_t>(j)] = states(r, j);
    for (Eigen::Index j = 0; j < increments.cols(); ++j) inc_buf[static_cast<std::size_t>(j)] = increments(r, j);
    return PathView{states_buf, inc_buf, dim, grid.size(), &grid};
}

std::string PathBatch::to_csv(std::size_t max_rows) const {
    if (samples * grid.size() > max_rows)
        throw ResourceError("PathBatch::to_csv: " + std::to_string(samples * grid.size()) + " rows exceed limit " + std::to_string(max_rows));
    std::vector<std::string> header{"sample", "time_index", "time"};
    for (std::size_t k = 0; k < dim; ++k) header.push_back("x" + std::to_string(k));
    CsvTable table(header);
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> row{static_cast<double>(s), static_cast<double>(i), grid[i]};
            for (std::size_t k = 0; k < dim; ++k) row.push_back(x(s, i, k));
            table.add_row(row);
        }
    return table.str();
}

ExitReport first_exit(const PathBatch& batch, double radius) {
    require(radius > 0.0, "first_exit: radius must be positive");
    ExitReport rep;
    rep.radius = radius;
    rep.exit_index.assign(batch.samples, ExitReport::no_exit);
    rep.exit_time.assign(batch.samples, batch.grid.back());
    const std::size_t m = batch.grid.size(), d = batch.dim;
    const double r2 = radius * radius;
    std::size_t early = 0;
    for (std::size_t s = 0; s < batch.samples; ++s) {
        for (std::size_t i = 0; i < m; ++i) {
            double n2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) n2 += batch.x(s, i, k) * batch.x(s, i, k);
            if (n2 > r2) {
                rep.exit_index[s] = i;
                rep.exit_time[s] = std::min(batch.grid[i], batch.grid.back());
                ++rep.exits;
                if (i + 1 < m) ++early;
                break;
            }
        }
    }
    const double n = static_cast<double>(batch.samples);
    rep.probability = static_cast<double>(early) / n;
    rep.se = std::sqrt(rep.probability * (1.0 - rep.probability) / n);
    return rep;
}

ExitDecayReport exit_tail_decay(const DiffusionSpec& spec, const Eigen::VectorXd& x0, const std::vector<double>& radii,
                                const TimeGrid& grid, std::size_t samples, std::uint64_t seed, std::size_t workers) {
    const double r0 = x0.norm();
    require(radii.size() >= 3, "exit_tail_decay: need at least 3 radii");
    for (double n : radii) require(n >= r0, "exit_tail_decay: radii must satisfy n >= |x0|");

    // running max of |X| over all grid points before the horizon
    std::vector<double> peak(samples, 0.0);
    const std::size_t m = grid.size(), d = spec.dim;
    for_each_path(spec, x0, grid, samples, seed, workers, [&](std::size_t s, const PathView& p) {
        double best = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            double n2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) n2 += p.states[i * d + k] * p.states[i * d + k];
            best = std::max(best, n2);
        }
        peak[s] = std::sqrt(best);
    });

    ExitDecayReport rep;
    std::vector<double> xs, ys;
    const double n = static_cast<double>(samples);
    for (double radius : radii) {
        const auto hits = static_cast<double>(std::count_if(peak.begin(), peak.end(), [&](double v) { return v > radius; }));
        const double prob = hits / n;
        if (hits == 0.0) {
            rep.dropped_radii.push_back(radius);
            rep.warnings.push_back("radius " + format_double(radius) + " dropped: no exits observed");
            continue;
        }
        rep.radii.push_back(radius);
        rep.probabilities.push_back(prob);
        rep.standard_errors.push_back(std::sqrt(prob * (1.0 - prob) / n));
        xs.push_back((radius - r0) * (radius - r0));
        ys.push_back(std::log(prob));
    }
    if (xs.size() < 3) throw DomainError("exit_tail_decay: fewer than 3 radii with nonzero exit probability (degenerate input)");
    const auto fit = ols(xs, ys);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.r2 = fit.r2;
    return rep;
}

double mean_pvar_moment(const PathBatch& batch, double p, double q) {
    double acc = 0.0;
    const std::size_t m = batch.grid.size(), d = batch.dim;
    for (std::size_t s = 0; s < batch.samples; ++s) {
        Eigen::MatrixXd v(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < d; ++k) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = batch.x(s, i, k);
        acc += std::pow(p_variation(SamplePath(batch.grid, std::move(v)), p), q);
    }
    return acc / static_cast<double>(batch.samples);
}

} // namespace ybsde
