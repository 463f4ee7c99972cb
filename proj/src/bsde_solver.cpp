#include "ybsde/bsde_solver.hpp"

#include "ybsde/errors.hpp"
#include "ybsde/parallel.hpp"
#include "ybsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ybsde {

// ---------------------------------------------------------------------------
// Girsanov
// ---------------------------------------------------------------------------

std::vector<double> girsanov_log_weights(const PathView& path, const GirsanovFn& G) {
    std::vector<double> logm(path.points, 0.0);
    if (!G) return logm;
    const std::size_t d = path.dim;
    double g[16];
    std::vector<double> heap;
    std::span<double> gs(g, std::min<std::size_t>(d, 16));
    if (d > 16) {
        heap.resize(d);
        gs = heap;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < path.points; ++i) {
        G((*path.grid)[i], path.x(i), gs);
        const auto dw = path.dw(i);
        double lin = 0.0, sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            lin += gs[k] * dw[k];
            sq += gs[k] * gs[k];
        }
        acc += lin - 0.5 * sq * path.grid->dt(i);
        logm[i + 1] = acc;
    }
    return logm;
}

Eigen::MatrixXd girsanov_weight(const PathBatch& batch, const GirsanovFn& G) {
    const std::size_t m = batch.grid.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(batch.samples), static_cast<Eigen::Index>(m));
    std::vector<double> sb, ib;
    for (std::size_t s = 0; s < batch.samples; ++s) {
        const auto logm = girsanov_log_weights(batch.view(s, sb, ib), G);
        for (std::size_t i = 0; i < m; ++i) {
            const double w = std::exp(logm[i]);
            if (!(w > 0.0) || !std::isfinite(w)) throw NumericalError("girsanov_weight: weight overflow at sample " + std::to_string(s));
            out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = w;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Linear BSDE
// ---------------------------------------------------------------------------

LinearBsdeResult solve_linear_bsde(const LinearBsdeSpec& spec, const LinearBsdeConfig& cfg) {
    require(static_cast<bool>(spec.alpha), "solve_linear_bsde: missing alpha");
    require(static_cast<bool>(spec.xi), "solve_linear_bsde: missing terminal xi");
    require(spec.N >= 1, "solve_linear_bsde: N must be positive");
    require(spec.driver.space_dim() == spec.diffusion.dim, "solve_linear_bsde: driver and diffusion dimensions differ");
    require(!cfg.eval_times.empty(), "solve_linear_bsde: no evaluation times");
    const std::size_t N = spec.N, M = spec.driver.channels(), d = spec.diffusion.dim, m = cfg.grid.size();
    const std::size_t S = cfg.samples;
    const bool scalar = N == 1 && M == 1;

    std::vector<std::size_t> eval_idx;
    for (double t : cfg.eval_times) {
        const std::size_t j = cfg.grid.nearest_index(t);
        require(std::abs(cfg.grid[j] - t) <= 1e-12 * std::max(1.0, cfg.grid.back()), "solve_linear_bsde: evaluation time not on grid");
        eval_idx.push_back(j);
    }
    const std::size_t E = eval_idx.size();
    std::vector<Eigen::MatrixXd> payoff(E, Eigen::MatrixXd(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(N)));
    std::vector<Eigen::MatrixXd> state(E, Eigen::MatrixXd(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(d)));
    std::vector<double> terminal_weight(S);

    for_each_path(spec.diffusion, spec.x0, cfg.grid, S, cfg.seed, cfg.workers, [&](std::size_t s, const PathView& p) {
        const auto logm = girsanov_log_weights(p, spec.G);
        terminal_weight[s] = std::exp(logm.back());

        Eigen::MatrixXd xv(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
        Eigen::MatrixXd av(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(M * N * N));
        Eigen::MatrixXd fv = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(N));
        std::vector<double> abuf(M * N * N), fbuf(N);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < d; ++k) xv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p.x(i)[k];
            spec.alpha(cfg.grid[i], p.x(i), abuf);
            for (std::size_t k = 0; k < abuf.size(); ++k) av(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = abuf[k];
            if (spec.f) {
                spec.f(cfg.grid[i], p.x(i), fbuf);
                for (std::size_t k = 0; k < N; ++k) fv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = fbuf[k];
            }
        }
        const SamplePath xpath(cfg.grid, std::move(xv));
        const FlowCoefficients alpha(SamplePath(cfg.grid, std::move(av)), N, M);
        Eigen::VectorXd xi(static_cast<Eigen::Index>(N));
        spec.xi(p, std::span<double>(xi.data(), N));

        FlowOptions fo;
        fo.mode = scalar ? FlowMode::exact_scalar : FlowMode::euler;
        fo.overflow_guard = cfg.overflow_guard;
        for (std::size_t e = 0; e < E; ++e) {
            const std::size_t j = eval_idx[e];
            const FlowPath flow = solve_flow(alpha, spec.driver, xpath, j, fo);
            Eigen::VectorXd acc = flow.terminal().transpose() * xi;
            if (spec.f)
                for (std::size_t i = j; i + 1 < m; ++i)
                    acc += flow.values[i - j].transpose() * fv.row(static_cast<Eigen::Index>(i)).transpose() * cfg.grid.dt(i);
            const double w = std::exp(logm.back() - logm[j]);
            payoff[e].row(static_cast<Eigen::Index>(s)) = (acc * w).transpose();
            state[e].row(static_cast<Eigen::Index>(s)) = xpath.values.row(static_cast<Eigen::Index>(j));
        }
    });

    LinearBsdeResult res;
    const auto gm = mean_and_se(terminal_weight);
    res.girsanov_mean = gm.mean;
    res.girsanov_se = gm.se;
    for (std::size_t e = 0; e < E; ++e) {
        LinearBsdeEstimate est;
        est.time = cfg.grid[eval_idx[e]];
        est.grid_index = eval_idx[e];
        est.model = RegressionModel::fit(state[e], payoff[e], cfg.degree, cfg.ridge);
        const Eigen::MatrixXd fitted = est.model.predict(state[e]);
        est.mean.resize(static_cast<Eigen::Index>(N));
        est.se.resize(static_cast<Eigen::Index>(N));
        for (std::size_t k = 0; k < N; ++k) {
            const auto col = static_cast<Eigen::Index>(k);
            const Eigen::VectorXd raw = payoff[e].col(col);
            const auto ms = mean_and_se(std::span<const double>(raw.data(), S));
            est.mean(col) = fitted.col(col).mean();
            est.se(col) = ms.se;
        }
        res.estimates.push_back(std::move(est));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Tower rule
// ---------------------------------------------------------------------------

TowerRuleReport tower_rule_defect(const PathProcess& A, const PathProcess& B, const SpaceTimeDriver& driver,
                                  const PathBatch& batch, std::size_t t_index, int degree) {
    require(static_cast<bool>(A) && static_cast<bool>(B), "tower_rule_defect: missing process");
    const std::size_t m = batch.grid.size(), S = batch.samples;
    require(t_index < m, "tower_rule_defect: t outside grid");
    TowerRuleReport rep;
    if (t_index + 1 == m) return rep;
    const std::size_t steps = m - 1 - t_index;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(steps));
    Eigen::MatrixXd bd(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(steps));  // B_r * d_eta_r
    std::vector<double> sb, ib;
    for (std::size_t s = 0; s < S; ++s) {
        const PathView p = batch.view(s, sb, ib);
        for (std::size_t j = 0; j < steps; ++j) {
            const std::size_t r = t_index + j;
            a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = A(p, r);
            bd(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
                B(p, r) * driver.scalar_increment(batch.grid[r], batch.grid[r + 1], p.x(r));
        }
    }
    std::vector<double> lhs(S, 0.0), rhs(S, 0.0);
    for (std::size_t j = 0; j < steps; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const auto model = RegressionModel::fit(batch.states_at(t_index + j), a.col(col), degree);
        const Eigen::VectorXd cond = model.predict(batch.states_at(t_index + j)).col(0);
        for (std::size_t s = 0; s < S; ++s) {
            const auto row = static_cast<Eigen::Index>(s);
            lhs[s] += a(row, col) * bd(row, col);
            rhs[s] += cond(row) * bd(row, col);
        }
    }
    const auto l = mean_and_se(lhs), r = mean_and_se(rhs);
    rep.lhs = l.mean;
    rep.rhs = r.mean;
    rep.lhs_se = l.se;
    rep.rhs_se = r.se;
    rep.combined_se = std::hypot(l.se, r.se);
    rep.defect = std::abs(l.mean - r.mean);
    return rep;
}

// ---------------------------------------------------------------------------
// Localized nonlinear BSDE
// ---------------------------------------------------------------------------

Eigen::MatrixXd driver_increments(const SpaceTimeDriver& driver, const PathBatch& batch, std::size_t workers) {
    require(driver.space_dim() == batch.dim, "driver_increments: driver and path dimensions differ");
    const std::size_t S = batch.samples, last = batch.grid.size() - 1, d = batch.dim, M = driver.channels();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(last * M));
    parallel_for(S, workers, [&](std::size_t s) {
        std::vector<double> x(d), inc(M);
        for (std::size_t i = 0; i < last; ++i) {
            for (std::size_t k = 0; k < d; ++k) x[k] = batch.x(s, i, k);
            driver.increment_into(batch.grid[i], batch.grid[i + 1], x, inc);
            for (std::size_t k = 0; k < M; ++k) out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i * M + k)) = inc[k];
        }
    });
    return out;
}

namespace {

std::vector<std::size_t> stop_indices(const PathBatch& batch, double radius) {
    const auto rep = first_exit(batch, radius);
    std::vector<std::size_t> stop(batch.samples);
    for (std::size_t s = 0; s < batch.samples; ++s) stop[s] = rep.stop_index(s, batch.grid.size() - 1);
    return stop;
}

} // namespace

BsdeSolution solve_localized_bsde(const BsdeProblem& problem, double radius, const PathBatch& batch,
                                  const BsdeSolverConfig& cfg) {
    require(static_cast<bool>(problem.h) || static_cast<bool>(problem.terminal_process), "solve_localized_bsde: missing terminal datum");
    require(radius > problem.x0.norm(), "solve_localized_bsde: radius must exceed |x0|");
    require(batch.grid.size() >= 2, "solve_localized_bsde: grid needs at least one step");
    require(cfg.picard_max_iterations >= 1, "solve_localized_bsde: need at least one Picard iteration");
    const bool young = static_cast<bool>(problem.g);
    if (young) require(problem.driver.space_dim() == batch.dim, "solve_localized_bsde: driver and diffusion dimensions differ");

    const std::size_t S = batch.samples, m = batch.grid.size(), last = m - 1, d = batch.dim;
    const std::size_t M = young ? problem.driver.channels() : 0;
    const auto& grid = batch.grid;

    BsdeSolution sol;
    sol.grid = grid;
    sol.radius = radius;
    sol.stop_index = stop_indices(batch, radius);
    sol.exits = first_exit(batch, radius).exits;

    // terminal data at the stopping index
    std::vector<double> xi(S);
    parallel_for(S, cfg.workers, [&](std::size_t s) {
        const std::size_t k = sol.stop_index[s];
        if (problem.terminal_process) {
            std::vector<double> sb, ib;
            xi[s] = problem.terminal_process(batch.view(s, sb, ib), k);
        } else {
            std::vector<double> xs(d);
            for (std::size_t j = 0; j < d; ++j) xs[j] = batch.x(s, k, j);
            xi[s] = problem.h(xs);
        }
    });

    // driver increments at frozen X_i
    Eigen::MatrixXd own;
    const Eigen::MatrixXd* inc = cfg.increments;
    if (young && !inc) {
        own = driver_increments(problem.driver, batch, cfg.workers);
        inc = &own;
    }
    if (young)
        require(inc->rows() == static_cast<Eigen::Index>(S) && inc->cols() == static_cast<Eigen::Index>(last * M),
                "solve_localized_bsde: precomputed increments do not match the batch");
    const Eigen::MatrixXd& deta = young ? *inc : own;

    Eigen::MatrixXd Y(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(m));
    Eigen::MatrixXd Yprev;
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(last * d));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t i = sol.stop_index[s]; i < m; ++i) Y(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = xi[s];

    const bool depends_on_y = static_cast<bool>(problem.f) || young;
    std::vector<char> active(S);
    std::vector<double> target(S), gbuf_all(S * std::max<std::size_t>(M, 1));
    sol.y_models.assign(last, RegressionModel{});
    sol.z_models.assign(last, RegressionModel{});

    for (int iter = 1; iter <= cfg.picard_max_iterations; ++iter) {
        for (std::size_t ii = last; ii-- > 0;) {
            const std::size_t i = ii;
            const double h = grid.dt(i);
            for (std::size_t s = 0; s < S; ++s) active[s] = sol.stop_index[s] > i;
            const Eigen::MatrixXd Xi = batch.states_at(i);

            // E[Y_{i+1} | X_i] and Z_i = E[Y_{i+1} dW_i | X_i] / h in one fit
            Eigen::MatrixXd zt(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(1 + d));
            for (std::size_t s = 0; s < S; ++s) {
                const auto r = static_cast<Eigen::Index>(s);
                const double y1 = Y(r, static_cast<Eigen::Index>(i + 1));
                zt(r, 0) = y1;
                for (std::size_t k = 0; k < d; ++k)
                    zt(r, static_cast<Eigen::Index>(1 + k)) = y1 * batch.increments(r, static_cast<Eigen::Index>(i * d + k)) / h;
            }
            auto zmodel = RegressionModel::fit(Xi, zt, cfg.degree, cfg.ridge, active);
            const Eigen::MatrixXd zfit = zmodel.predict(Xi);

            parallel_for(S, cfg.workers, [&](std::size_t s) {
                const auto r = static_cast<Eigen::Index>(s);
                for (std::size_t k = 0; k < d; ++k) Z(r, static_cast<Eigen::Index>(i * d + k)) = active[s] ? zfit(r, static_cast<Eigen::Index>(1 + k)) : 0.0;
                if (!active[s]) {
                    target[s] = xi[s];
                    return;
                }
                const double yp = iter == 1 ? zfit(r, 0) : Yprev(r, static_cast<Eigen::Index>(i));
                double t = Y(r, static_cast<Eigen::Index>(i + 1));
                if (problem.f) {
                    thread_local std::vector<double> x, z;
                    x.resize(d);
                    z.resize(d);
                    for (std::size_t k = 0; k < d; ++k) {
                        x[k] = batch.x(s, i, k);
                        z[k] = zfit(r, static_cast<Eigen::Index>(1 + k));
                    }
                    t += problem.f(grid[i], x, yp, z) * h;
                }
                if (young) {
                    std::span<double> g(gbuf_all.data() + s * M, M);
                    problem.g(yp, g);
                    for (std::size_t k = 0; k < M; ++k) t += g[k] * deta(r, static_cast<Eigen::Index>(i * M + k));
                }
                target[s] = t;
            });

            auto ymodel = RegressionModel::fit(Xi, Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(S)),
                                               cfg.degree, cfg.ridge, active);
            const Eigen::VectorXd yfit = ymodel.predict(Xi).col(0);
            for (std::size_t s = 0; s < S; ++s)
                if (active[s]) Y(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = yfit(static_cast<Eigen::Index>(s));
            if (i == 0) {
                sol.y0_targets = target;
                const auto ms = mean_and_se(target);
                sol.y0 = ms.mean;
                sol.y0_se = ms.se;
                sol.z0 = zmodel.predict(std::span<const double>(problem.x0.data(), d)).tail(static_cast<Eigen::Index>(d));
            }
            sol.y_models[i] = std::move(ymodel);
            sol.z_models[i] = std::move(zmodel);
        }
        sol.picard_iterations = iter;
        if (!depends_on_y) {
            sol.converged = true;
            break;
        }
        if (iter > 1) {
            const double gap = (Y - Yprev).cwiseAbs().maxCoeff();
            sol.picard_gaps.push_back(gap);
            if (gap < cfg.picard_tolerance) {
                sol.converged = true;
                break;
            }
        }
        Yprev = Y;
    }

    // diagnostics
    double defect = 0.0, max_y = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        defect = std::max(defect, std::abs(Y(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(sol.stop_index[s])) - xi[s]));
        for (std::size_t i = 0; i < sol.stop_index[s]; ++i) max_y = std::max(max_y, std::abs(Y(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i))));
    }
    sol.terminal_defect = defect;
    sol.max_abs_y = max_y;

    double worst = 0.0;
    std::vector<double> res, incs;
    for (std::size_t i = 0; i < last; ++i) {
        res.clear();
        incs.clear();
        const double h = grid.dt(i);
        for (std::size_t s = 0; s < S; ++s) {
            if (sol.stop_index[s] <= i) continue;
            const auto r = static_cast<Eigen::Index>(s);
            double mart = 0.0;
            for (std::size_t k = 0; k < d; ++k) mart += Z(r, static_cast<Eigen::Index>(i * d + k)) * batch.increments(r, static_cast<Eigen::Index>(i * d + k));
            double drive = Y(r, static_cast<Eigen::Index>(i + 1)) - mart;
            const double y = Y(r, static_cast<Eigen::Index>(i));
            if (problem.f) {
                std::vector<double> x(d), z(d);
                for (std::size_t k = 0; k < d; ++k) {
                    x[k] = batch.x(s, i, k);
                    z[k] = Z(r, static_cast<Eigen::Index>(i * d + k));
                }
                drive += problem.f(grid[i], x, y, z) * h;
            }
            if (young) {
                std::vector<double> g(M);
                problem.g(y, g);
                for (std::size_t k = 0; k < M; ++k) drive += g[k] * deta(r, static_cast<Eigen::Index>(i * M + k));
            }
            res.push_back(y - drive);
            incs.push_back(mart);
        }
        if (res.size() < 2) continue;
        const double mean = mean_and_se(res).mean;
        const double se = mean_and_se(incs).se;
        if (se > 0.0) worst = std::max(worst, std::abs(mean) / se);
    }
    sol.martingale_residual = worst;
    sol.Y = std::move(Y);
    return sol;
}

BsdeSolution solve_localized_bsde(const BsdeProblem& problem, double radius, const BsdeSolverConfig& cfg) {
    const PathBatch batch = simulate(problem.diffusion, problem.x0, cfg.grid, cfg.samples, cfg.seed, cfg.workers);
    return solve_localized_bsde(problem, radius, batch, cfg);
}

void LocalizationSchedule::validate(double x0_norm) const {
    require(!radii.empty(), "LocalizationSchedule: no radii");
    for (std::size_t k = 0; k < radii.size(); ++k) {
        require(radii[k] > x0_norm, "LocalizationSchedule: radii must exceed |x0|");
        if (k) require(radii[k] > radii[k - 1], "LocalizationSchedule: radii must be strictly increasing");
    }
}

LocalizationResult solve_bsde_with_localization(const BsdeProblem& problem, const LocalizationSchedule& schedule,
                                                const BsdeSolverConfig& cfg) {
    schedule.validate(problem.x0.norm());
    const PathBatch batch = simulate(problem.diffusion, problem.x0, cfg.grid, cfg.samples, cfg.seed, cfg.workers);
    Eigen::MatrixXd inc;
    BsdeSolverConfig shared = cfg;
    if (problem.g && !cfg.increments) {
        inc = driver_increments(problem.driver, batch, cfg.workers);
        shared.increments = &inc;
    }
    std::vector<BsdeSolution> sols;
    for (double n : schedule.radii) sols.push_back(solve_localized_bsde(problem, n, batch, shared));
    LocalizationResult out;
    const auto& ref = sols.back();
    for (const auto& s : sols) {
        LocalizationRow row;
        row.radius = s.radius;
        row.y0 = s.y0;
        row.y0_se = s.y0_se;
        row.gap_to_last = std::abs(s.y0 - ref.y0);
        std::vector<double> diff(s.y0_targets.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.y0_targets[i] - ref.y0_targets[i];
        row.gap_se = mean_and_se(diff).se;
        row.exits = s.exits;
        row.max_abs_y = s.max_abs_y;
        out.table.push_back(row);
    }
    out.finest = std::move(sols.back());
    return out;
}

// ---------------------------------------------------------------------------
// Exponential moment diagnostic
// ---------------------------------------------------------------------------

double ExponentialMomentReport::value() const { return std::exp(log_max); }

ExponentialMomentReport exponential_moment_diagnostic(
    const std::function<double(double t, std::span<const double> x)>& alpha, const SpaceTimeDriver& driver,
    const PathBatch& batch, double q, double radius) {
    require(q > 0.0, "exponential_moment_diagnostic: q must be positive");
    require(static_cast<bool>(alpha), "exponential_moment_diagnostic: missing alpha");
    const std::size_t S = batch.samples, m = batch.grid.size();
    const auto stop = stop_indices(batch, radius);
    // cum(s, j) = sum_{i < min(j, stop)} alpha d_eta
    Eigen::MatrixXd cum(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(m));
    std::vector<double> sb, ib;
    for (std::size_t s = 0; s < S; ++s) {
        const PathView p = batch.view(s, sb, ib);
        double acc = 0.0;
        cum(static_cast<Eigen::Index>(s), 0) = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            if (i < stop[s]) acc += alpha(batch.grid[i], p.x(i)) * driver.scalar_increment(batch.grid[i], batch.grid[i + 1], p.x(i));
            cum(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i + 1)) = acc;
        }
    }
    ExponentialMomentReport rep;
    rep.log_values.resize(m);
    rep.log_max = -std::numeric_limits<double>::infinity();
    std::vector<double> e(S);
    for (std::size_t j = 0; j < m; ++j) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < S; ++s) {
            const auto r = static_cast<Eigen::Index>(s);
            e[s] = q * (cum(r, static_cast<Eigen::Index>(m - 1)) - cum(r, static_cast<Eigen::Index>(std::min(j, stop[s]))));
            top = std::max(top, e[s]);
        }
        double acc = 0.0;
        for (double v : e) acc += std::exp(v - top);
        rep.log_values[j] = top + std::log(acc / static_cast<double>(S));
        if (rep.log_values[j] > rep.log_max) {
            rep.log_max = rep.log_values[j];
            rep.max_time = batch.grid[j];
        }
    }
    return rep;
}

} // namespace ybsde
