#include "ybsde/pde_fk.hpp"

#include "ybsde/csv.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/parallel.hpp"
#include "ybsde/rng.hpp"
#include "ybsde/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ybsde {

namespace {

std::vector<std::string> table_header(std::size_t d, std::vector<std::string> tail) {
    std::vector<std::string> h{"t"};
    for (std::size_t k = 0; k < d; ++k) h.push_back("x" + std::to_string(k));
    for (auto& s : tail) h.push_back(std::move(s));
    return h;
}

TimeGrid point_grid(double t, double horizon, std::size_t steps) {
    require(t >= 0.0 && t < horizon, "evaluation time must lie in [0, T)");
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(steps) * (horizon - t) / horizon)));
    return TimeGrid::uniform(t, horizon, n, horizon);
}

} // namespace

std::string PdeSolutionTable::to_csv() const {
    const std::size_t d = rows.empty() ? 1 : static_cast<std::size_t>(rows.front().x.size());
    CsvTable t(table_header(d, {"u", "se", "n", "delta", "samples"}));
    for (const auto& r : rows) {
        std::vector<double> row{r.t};
        for (double v : r.x) row.push_back(v);
        row.insert(row.end(), {r.u, r.se, r.radius, r.delta, static_cast<double>(r.samples)});
        t.add_row(row);
    }
    return t.str();
}

std::uint64_t point_seed(std::uint64_t seed, double t, std::span<const double> x) {
    std::uint64_t h = hash64(seed, std::bit_cast<std::uint64_t>(t));
    for (double v : x) h = hash64(h, std::bit_cast<std::uint64_t>(v));
    return h;
}

PdeSolutionTable solve_linear_young_pde(const ScalarField& terminal, const DiffusionSpec& diffusion,
                                        const SpaceTimeDriver& driver, const std::vector<PdePoint>& points,
                                        const LinearPdeConfig& cfg) {
    require(static_cast<bool>(terminal), "solve_linear_young_pde: missing terminal function");
    require(driver.channels() == 1, "solve_linear_young_pde: scalar driver required");
    require(driver.space_dim() == diffusion.dim, "solve_linear_young_pde: driver and diffusion dimensions differ");
    require(cfg.horizon > 0.0 && cfg.steps >= 1 && cfg.samples >= 2, "solve_linear_young_pde: invalid configuration");
    PdeSolutionTable table;
    std::vector<double> payoff(cfg.samples);
    for (const auto& pt : points) {
        require(static_cast<std::size_t>(pt.x.size()) == diffusion.dim, "solve_linear_young_pde: point dimension differs");
        const TimeGrid grid = point_grid(pt.t, cfg.horizon, cfg.steps);
        const auto seed = point_seed(cfg.seed, pt.t, std::span<const double>(pt.x.data(), diffusion.dim));
        for_each_path(diffusion, pt.x, grid, cfg.samples, seed, cfg.workers, [&](std::size_t s, const PathView& p) {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < p.points; ++i) acc += driver.scalar_increment(grid[i], grid[i + 1], p.x(i));
            const double v = terminal(p.x(p.points - 1)) * std::exp(acc);
            if (!std::isfinite(v)) throw NumericalError("solve_linear_young_pde: non-finite payoff");
            payoff[s] = v;
        });
        const auto ms = mean_and_se(payoff);
        PdeSolutionRow row;
        row.t = pt.t;
        row.x = pt.x;
        row.u = ms.mean;
        row.se = ms.se;
        row.samples = cfg.samples;
        table.rows.push_back(std::move(row));
    }
    return table;
}

double weak_solution_residual(const GridField& u, const std::function<double(double)>& terminal,
                              const std::function<double(double)>& phi, const DiffusionSpec& diffusion,
                              const SpaceTimeDriver& driver, double t) {
    require(u.space_dim() == 1 && diffusion.dim == 1, "weak_solution_residual: only d = 1 is supported");
    require(driver.channels() == 1, "weak_solution_residual: scalar driver required");
    require(static_cast<bool>(phi) && static_cast<bool>(terminal), "weak_solution_residual: missing function");
    const auto& xs = u.axes()[0];
    const auto& ts = u.times();
    require(xs.size() >= 3 && ts.size() >= 2, "weak_solution_residual: table too small");

    double peak = 0.0;
    std::vector<double> ph(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        ph[k] = phi(xs[k]);
        peak = std::max(peak, std::abs(ph[k]));
    }
    if (!(peak > 0.0)) throw DomainError("weak_solution_residual: test function is identically zero");
    if (std::abs(ph.front()) > 1e-10 * peak || std::abs(ph.back()) > 1e-10 * peak)
        throw DomainError("weak_solution_residual: test function support reaches the edge of the table");

    auto it = std::lower_bound(ts.begin(), ts.end(), t - 1e-12);
    require(it != ts.end() && std::abs(*it - t) <= 1e-12 * std::max(1.0, std::abs(t)), "weak_solution_residual: t is not a table time");
    const std::size_t j0 = static_cast<std::size_t>(it - ts.begin());
    const std::size_t nt = ts.size();

    auto trapz_x = [&](auto&& fn) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < xs.size(); ++k) acc += 0.5 * (fn(k) + fn(k + 1)) * (xs[k + 1] - xs[k]);
        return acc;
    };
    auto uat = [&](std::size_t j, std::size_t k) { return u.values()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)); };

    // L* phi = 1/2 (sigma^2 phi)'' - (b phi)' by five-point stencils
    const double hfd = 1e-3 * std::max(1.0, xs.back() - xs.front()) / 8.0;
    auto adjoint = [&](double s, double x) {
        auto q = [&](double y) {
            double sg, b;
            const std::span<const double> ys(&y, 1);
            diffusion.sigma(s, ys, std::span<double>(&sg, 1));
            diffusion.drift(s, ys, std::span<double>(&b, 1));
            return std::pair{sg * sg * phi(y), b * phi(y)};
        };
        const auto m2 = q(x - 2 * hfd), m1 = q(x - hfd), c = q(x), p1 = q(x + hfd), p2 = q(x + 2 * hfd);
        const double d2 = (-m2.first + 16 * m1.first - 30 * c.first + 16 * p1.first - p2.first) / (12 * hfd * hfd);
        const double d1 = (m2.second - 8 * m1.second + 8 * p1.second - p2.second) / (12 * hfd);
        return 0.5 * d2 - d1;
    };

    const double lhs = trapz_x([&](std::size_t k) { return uat(j0, k) * ph[k]; });
    const double term = trapz_x([&](std::size_t k) { return terminal(xs[k]) * ph[k]; });

    std::vector<double> inner(nt, 0.0);
    for (std::size_t j = j0; j < nt; ++j) inner[j] = trapz_x([&](std::size_t k) { return uat(j, k) * adjoint(ts[j], xs[k]); });
    double gen = 0.0;
    for (std::size_t j = j0; j + 1 < nt; ++j) gen += 0.5 * (inner[j] + inner[j + 1]) * (ts[j + 1] - ts[j]);

    const double young = trapz_x([&](std::size_t k) {
        const double x = xs[k];
        double acc = 0.0;
        for (std::size_t j = j0; j + 1 < nt; ++j) acc += uat(j, k) * driver.scalar_increment(ts[j], ts[j + 1], std::span<const double>(&x, 1));
        return acc * ph[k];
    });
    return lhs - term - gen - young;
}

DoubleApproxResult solve_young_pde_double_approximation(const PdeProblem& problem, const DoubleApproxConfig& cfg) {
    require(static_cast<bool>(problem.h), "double approximation: missing terminal function");
    require(!cfg.deltas.empty() && !cfg.radii.empty() && !cfg.points.empty(), "double approximation: empty schedule");
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        require(cfg.deltas[k] >= 0.0, "double approximation: negative mollification width");
        if (k) require(cfg.deltas[k] < cfg.deltas[k - 1], "double approximation: deltas must decrease strictly");
    }
    LocalizationSchedule{cfg.radii}.validate(0.0);
    for (const auto& pt : cfg.points)
        require(cfg.radii.front() > pt.x.norm(), "double approximation: every radius must exceed |x|");

    std::vector<SpaceTimeDriver> drivers;
    for (double dl : cfg.deltas) drivers.push_back(dl > 0.0 ? mollify_time(problem.driver, dl) : problem.driver);

    const std::size_t K = cfg.radii.size(), Mm = cfg.deltas.size(), P = cfg.points.size();
    // u[(k * Mm + m) * P + p]
    std::vector<PdeSolutionRow> rows(K * Mm * P);
    for (std::size_t p = 0; p < P; ++p) {
        const auto& pt = cfg.points[p];
        const std::size_t d = problem.diffusion.dim;
        require(static_cast<std::size_t>(pt.x.size()) == d, "double approximation: point dimension differs");
        BsdeSolverConfig sc;
        sc.grid = point_grid(pt.t, problem.horizon, cfg.steps);
        sc.samples = cfg.samples;
        sc.seed = point_seed(cfg.seed, pt.t, std::span<const double>(pt.x.data(), d));
        sc.degree = cfg.degree;
        sc.workers = cfg.workers;
        const PathBatch batch = simulate(problem.diffusion, pt.x, sc.grid, sc.samples, sc.seed, sc.workers);
        for (std::size_t m = 0; m < Mm; ++m) {
            BsdeProblem bp;
            bp.f = problem.f;
            bp.g = problem.g;
            bp.h = problem.h;
            bp.driver = drivers[m];
            bp.diffusion = problem.diffusion;
            bp.x0 = pt.x;
            Eigen::MatrixXd inc;
            BsdeSolverConfig shared = sc;
            if (bp.g) {
                inc = driver_increments(bp.driver, batch, sc.workers);
                shared.increments = &inc;
            }
            for (std::size_t k = 0; k < K; ++k) {
                const auto sol = solve_localized_bsde(bp, cfg.radii[k], batch, shared);
                auto& r = rows[(k * Mm + m) * P + p];
                r.t = pt.t;
                r.x = pt.x;
                r.u = sol.y0;
                r.se = sol.y0_se;
                r.radius = cfg.radii[k];
                r.delta = cfg.deltas[m];
                r.samples = cfg.samples;
            }
        }
    }

    DoubleApproxResult out;
    out.all.rows = rows;
    auto at = [&](std::size_t k, std::size_t m, std::size_t p) -> const PdeSolutionRow& { return rows[(k * Mm + m) * P + p]; };
    for (std::size_t p = 0; p < P; ++p) out.finest.rows.push_back(at(K - 1, Mm - 1, p));
    auto count_increases = [](const std::vector<double>& g) {
        std::size_t c = 0;
        for (std::size_t i = 1; i < g.size(); ++i) c += g[i] > g[i - 1];
        return c;
    };
    for (std::size_t k = 0; k + 1 < K; ++k) {
        double g = 0.0;
        for (std::size_t p = 0; p < P; ++p) g = std::max(g, std::abs(at(k, Mm - 1, p).u - at(k + 1, Mm - 1, p).u));
        out.radius_gaps.push_back(g);
    }
    for (std::size_t m = 0; m + 1 < Mm; ++m) {
        double g = 0.0;
        for (std::size_t p = 0; p < P; ++p) g = std::max(g, std::abs(at(K - 1, m, p).u - at(K - 1, m + 1, p).u));
        out.delta_gaps.push_back(g);
    }
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t m = 0; m < Mm; ++m) {
            double g = 0.0;
            for (std::size_t p = 0; p < P; ++p) g = std::max(g, std::abs(at(k, m, p).u - at(K - 1, Mm - 1, p).u));
            out.gap_to_finest.push_back(g);
        }
    out.radius_gaps_shrink = count_increases(out.radius_gaps) <= 1;
    out.delta_gaps_shrink = count_increases(out.delta_gaps) <= 1;
    return out;
}

ScheduleComparison compare_schedules(const PdeSolutionTable& a, const PdeSolutionTable& b) {
    require(a.rows.size() == b.rows.size(), "compare_schedules: tables differ in size");
    ScheduleComparison c;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& ra = a.rows[i];
        const auto& rb = b.rows[i];
        require(ra.t == rb.t && ra.x == rb.x, "compare_schedules: evaluation points differ");
        const double gap = std::abs(ra.u - rb.u);
        const double se = std::hypot(ra.se, rb.se);
        c.max_gap = std::max(c.max_gap, gap);
        if (se > 0.0) c.max_z = std::max(c.max_z, gap / se);
        else if (gap > 0.0) c.max_z = std::numeric_limits<double>::infinity();
    }
    return c;
}

LocalizationExperimentReport localization_error_experiment(const PdeProblem& problem, const LocalizationExperimentConfig& cfg) {
    require(static_cast<bool>(problem.h), "localization_error_experiment: missing terminal function");
    require(cfg.radii.size() >= 3, "localization_error_experiment: need at least two radii plus the reference");
    require(!cfg.xs.empty(), "localization_error_experiment: no evaluation points");
    LocalizationExperimentReport rep;
    rep.slopes_negative = true;
    for (const auto& x : cfg.xs) {
        LocalizationSchedule{cfg.radii}.validate(x.norm());
        BsdeProblem bp;
        bp.f = problem.f;
        bp.g = problem.g;
        bp.h = problem.h;
        bp.driver = problem.driver;
        bp.diffusion = problem.diffusion;
        bp.x0 = x;
        BsdeSolverConfig sc;
        sc.grid = TimeGrid::uniform(0.0, cfg.horizon, cfg.steps, cfg.horizon);
        sc.samples = cfg.samples;
        sc.seed = point_seed(cfg.seed, 0.0, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
        sc.degree = cfg.degree;
        sc.workers = cfg.workers;
        const auto loc = solve_bsde_with_localization(bp, LocalizationSchedule{cfg.radii}, sc);

        DecayFit fit;
        fit.x = x;
        fit.reference_saturated = loc.table.back().exits == 0;
        if (!fit.reference_saturated)
            fit.warnings.push_back("reference radius " + format_double(cfg.radii.back()) + " is not saturated");
        std::vector<double> fx, fy;
        for (std::size_t k = 0; k + 1 < loc.table.size(); ++k) {
            const auto& row = loc.table[k];
            const double err = row.y0 - loc.table.back().y0;
            fit.radii.push_back(row.radius);
            fit.errors.push_back(err);
            fit.ses.push_back(row.gap_se);
            fit.exits.push_back(row.exits);
            const bool sat = row.exits == 0 && err == 0.0;
            fit.saturated.push_back(sat);
            if (err == 0.0) continue;
            if (std::abs(err) <= 2.0 * row.gap_se) {
                fit.warnings.push_back("radius " + format_double(row.radius) + " dropped: error within 2 SE of zero");
                continue;
            }
            fit.fit_radii.push_back(row.radius);
            fx.push_back(row.radius * row.radius);
            fy.push_back(std::log(std::abs(err)));
        }
        if (fx.size() >= 2) {
            const auto lf = ols(fx, fy);
            fit.slope = lf.slope;
            fit.intercept = lf.intercept;
            fit.r2 = lf.r2;
            fit.fitted = true;
        } else {
            fit.warnings.push_back("fewer than two radii left for the fit");
        }
        rep.slopes_negative = rep.slopes_negative && fit.fitted && fit.slope < 0.0;
        rep.fits.push_back(std::move(fit));
    }
    std::vector<std::size_t> order(rep.fits.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rep.fits[a].x.squaredNorm() < rep.fits[b].x.squaredNorm(); });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& lo = rep.fits[order[i - 1]];
        const auto& hi = rep.fits[order[i]];
        if (lo.fitted && hi.fitted && hi.x.squaredNorm() > lo.x.squaredNorm() && hi.intercept < lo.intercept)
            rep.intercept_increases_with_x2 = false;
    }
    return rep;
}

std::string LocalizationExperimentReport::fits_csv() const {
    const std::size_t d = fits.empty() ? 1 : static_cast<std::size_t>(fits.front().x.size());
    std::vector<std::string> h;
    for (std::size_t k = 0; k < d; ++k) h.push_back("x" + std::to_string(k));
    h.insert(h.end(), {"slope", "intercept", "r2", "fitted", "points"});
    CsvTable t(h);
    for (const auto& f : fits) {
        std::vector<double> row(f.x.data(), f.x.data() + f.x.size());
        row.insert(row.end(), {f.slope, f.intercept, f.r2, f.fitted ? 1.0 : 0.0, static_cast<double>(f.fit_radii.size())});
        t.add_row(row);
    }
    return t.str();
}

std::string LocalizationExperimentReport::errors_csv() const {
    const std::size_t d = fits.empty() ? 1 : static_cast<std::size_t>(fits.front().x.size());
    std::vector<std::string> h;
    for (std::size_t k = 0; k < d; ++k) h.push_back("x" + std::to_string(k));
    h.insert(h.end(), {"n", "error", "se", "exits", "saturated"});
    CsvTable t(h);
    for (const auto& f : fits)
        for (std::size_t k = 0; k < f.radii.size(); ++k) {
            std::vector<double> row(f.x.data(), f.x.data() + f.x.size());
            row.insert(row.end(), {f.radii[k], f.errors[k], f.ses[k], static_cast<double>(f.exits[k]), f.saturated[k] ? 1.0 : 0.0});
            t.add_row(row);
        }
    return t.str();
}

} // namespace ybsde
