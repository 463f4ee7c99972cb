#include "ybsde/experiments.hpp"

#include "ybsde/csv.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/fractional_sheet.hpp"
#include "ybsde/pde_fk.hpp"
#include "ybsde/young_calculus.hpp"

#include <cmath>
#include <sstream>

namespace ybsde {

namespace {

using Clock = std::chrono::steady_clock;

class PhaseClock {
public:
    explicit PhaseClock(RunOutcome& out) : out_(out) {}
    void mark(const std::string& name) {
        const auto now = Clock::now();
        out_.phases.push_back({name, std::chrono::duration<double>(now - last_).count()});
        last_ = now;
    }

private:
    RunOutcome& out_;
    Clock::time_point last_ = Clock::now();
};

bool has(const ExperimentConfig& c, const std::string& key) { return c.values().count(key) != 0; }

RegistryParams registry_params(const ExperimentConfig& c) {
    RegistryParams p;
    if (has(c, "dim")) p.dim = c.count("dim");
    if (has(c, "horizon")) p.horizon = c.real("horizon");
    if (has(c, "sigma")) p.sigma = c.real("sigma");
    if (has(c, "mu")) p.mu = c.real("mu");
    if (has(c, "theta")) p.theta = c.real("theta");
    if (has(c, "clip")) p.clip = c.real("clip");
    if (has(c, "c")) p.c = c.real("c");
    if (has(c, "rate")) p.rate = c.real("rate");
    if (has(c, "sheet_H0")) p.sheet_H0 = c.real("sheet_H0");
    if (has(c, "sheet_H")) p.sheet_H = c.real("sheet_H");
    if (has(c, "sheet_times")) p.sheet_times = c.count("sheet_times");
    if (has(c, "sheet_points")) p.sheet_points = c.count("sheet_points");
    if (has(c, "sheet_extent")) p.sheet_extent = c.real("sheet_extent");
    p.seed = c.seed();
    if (p.dim == 0) throw ConfigError("dim must be positive");
    return p;
}

Eigen::VectorXd state(const ExperimentConfig& c, const std::string& key, std::size_t dim) {
    const auto v = c.reals(key);
    if (v.size() != dim)
        throw ConfigError("key '" + key + "' has " + std::to_string(v.size()) + " entries, dim is " + std::to_string(dim));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<Eigen::VectorXd> first_coordinate_points(const ExperimentConfig& c, const std::string& key, std::size_t dim) {
    std::vector<Eigen::VectorXd> out;
    for (double x : c.reals(key)) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        v(0) = x;
        out.push_back(v);
    }
    return out;
}

TimeGrid horizon_grid(const ExperimentConfig& c) {
    const double T = c.real("horizon");
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
    const std::size_t steps = c.count("steps");
    if (steps == 0) throw DomainError("steps must be positive");
    return TimeGrid::uniform(0.0, T, steps);
}

std::size_t positive(const ExperimentConfig& c, const std::string& key) {
    const std::size_t v = c.count(key);
    if (v == 0) throw DomainError("key '" + key + "' must be positive");
    return v;
}

int degree(const ExperimentConfig& c) {
    const long d = c.integer("degree");
    if (d < 0 || d > 6) throw DomainError("degree must lie in [0, 6]");
    return static_cast<int>(d);
}

std::size_t on_grid(const TimeGrid& g, double t, const char* what) {
    const std::size_t i = g.nearest_index(t);
    if (std::abs(g[i] - t) > 1e-12 * std::max(1.0, g.back()))
        throw DomainError(std::string(what) + " " + format_double(t) + " is not a grid time");
    return i;
}

double row_norm(const Eigen::VectorXd& x) { return x.norm(); }

// ---------------------------------------------------------------------------

void simulate_fbs(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    SheetSpec s;
    s.H0 = c.real("H0");
    s.H = c.reals("H");
    s.horizon = c.real("horizon");
    const std::size_t nt = c.count("times"), nx = c.count("points");
    const double extent = c.real("extent");
    if (nt < 2 || nx < 2) throw DomainError("simulate-fbs: times and points must be >= 2");
    if (!(extent > 0.0)) throw DomainError("simulate-fbs: extent must be positive");
    for (std::size_t j = 0; j < nt; ++j) s.times.push_back(s.horizon * static_cast<double>(j) / static_cast<double>(nt - 1));
    std::vector<double> axis;
    for (std::size_t k = 0; k < nx; ++k) axis.push_back(-extent + 2.0 * extent * static_cast<double>(k) / static_cast<double>(nx - 1));
    s.axes.assign(s.H.size(), axis);
    s.validate();
    const std::size_t draws = positive(c, "draws");
    const double jitter = c.real("jitter");
    if (jitter < 0.0) throw DomainError("simulate-fbs: jitter must be nonnegative");
    clock.mark("validate");

    const SheetSampler sampler(s, jitter);
    std::vector<std::string> header{"draw", "t"};
    for (std::size_t k = 0; k < s.space_dim(); ++k) header.push_back("x" + std::to_string(k));
    header.push_back("value");
    CsvTable table(header);
    std::vector<GridField> fields;
    for (std::size_t r = 0; r < draws; ++r) fields.push_back(sampler.draw_field(c.seed(), r));
    for (std::size_t r = 0; r < draws; ++r) {
        const auto& f = fields[r];
        for (std::size_t j = 0; j < f.times().size(); ++j)
            for (std::size_t k = 0; k < f.space_nodes(); ++k) {
                std::vector<double> row{static_cast<double>(r), f.times()[j]};
                const auto node = f.node(k);
                for (Eigen::Index a = 0; a < node.size(); ++a) row.push_back(node(a));
                row.push_back(f.values()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
                table.add_row(row);
            }
    }
    CsvTable info({"nodes", "jitter", "relative_jitter", "tau", "lambda", "beta"});
    const auto reg = sheet_regularity(s);
    info.add_row({static_cast<double>(s.node_count()), sampler.jitter(), sampler.relative_jitter(), reg.tau, reg.lambda, reg.beta});
    clock.mark("compute");
    out.files.push_back({"sheet.csv", table.str()});
    out.files.push_back({"sheet_info.csv", info.str()});
}

void young_integral(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    auto p = registry_params(c);
    p.dim = 1;
    const double a = c.real("a"), b = c.real("b");
    if (!(b > a)) throw DomainError("young-integral: need a < b");
    p.horizon = b;
    const std::size_t steps = positive(c, "steps");
    YoungIntegralOptions opts;
    opts.abs_tolerance = c.real("abs_tol");
    opts.rel_tolerance = c.real("rel_tol");
    opts.max_levels = static_cast<int>(positive(c, "max_levels"));
    const auto& space = c.text("space");
    if (space == "left") opts.space = SpaceEvaluation::left;
    else if (space == "midpoint") opts.space = SpaceEvaluation::midpoint;
    else throw ConfigError("space must be left or midpoint");
    const auto yf = make_path(c.text("y"));
    const auto xf = make_path(c.text("x"));
    const auto driver = make_driver(c.text("driver"), p);
    clock.mark("validate");

    const auto grid = TimeGrid::uniform(a, b, steps);
    const auto r = nonlinear_young_integral(sample_function(grid, yf), sample_function(grid, xf), driver, a, b, opts);
    CsvTable summary({"value", "levels", "cauchy_gap", "converged"});
    summary.add_row({r.value(0), static_cast<double>(r.levels), r.cauchy_gap, r.converged ? 1.0 : 0.0});
    CsvTable gaps({"level", "gap"});
    for (std::size_t k = 0; k < r.gaps.size(); ++k) gaps.add_row({static_cast<double>(k + 2), r.gaps[k]});
    clock.mark("compute");
    out.files.push_back({"young_integral.csv", summary.str()});
    out.files.push_back({"young_integral_gaps.csv", gaps.str()});
    if (!r.converged) {
        out.status = exit_not_converged;
        out.warnings.push_back("young integral did not converge within max_levels; last gap " + format_double(r.cauchy_gap));
    }
}

void flow(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    auto p = registry_params(c);
    p.dim = 1;
    const auto alpha = c.reals("alpha");
    const auto N = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(alpha.size()))));
    if (N == 0 || N * N != alpha.size()) throw ConfigError("alpha must hold N*N entries");
    const auto grid = horizon_grid(c);
    const std::size_t first = on_grid(grid, c.real("base"), "base time");
    FlowOptions opts;
    const auto& mode = c.text("mode");
    if (mode == "euler") opts.mode = FlowMode::euler;
    else if (mode == "exact") opts.mode = FlowMode::exact_scalar;
    else throw ConfigError("mode must be euler or exact");
    opts.richardson = c.flag("richardson");
    const auto driver = make_driver(c.text("driver"), p);
    const auto x = sample_function(grid, make_path(c.text("x")));
    clock.mark("validate");

    Eigen::MatrixXd a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        alpha.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    const auto coeffs = FlowCoefficients::constant(grid, {a});
    const auto f = solve_flow(coeffs, driver, x, first, opts);
    std::vector<std::string> header{"t"};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) header.push_back("g" + std::to_string(i) + std::to_string(j));
    CsvTable table(header);
    for (std::size_t k = 0; k < f.grid.size(); ++k) {
        std::vector<double> row{f.grid[k]};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) row.push_back(f.at(k)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        table.add_row(row);
    }
    CsvTable summary({"base", "steps", "richardson_error"});
    summary.add_row({f.base_time, static_cast<double>(f.grid.steps()), f.richardson_error});
    clock.mark("compute");
    out.files.push_back({"flow.csv", table.str()});
    out.files.push_back({"flow_summary.csv", summary.str()});
}

void linear_bsde(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    const auto p = registry_params(c);
    LinearBsdeSpec spec;
    spec.N = 1;
    spec.alpha = [a = c.real("alpha")](double, std::span<const double>, std::span<double> al) { al[0] = a; };
    spec.G = make_girsanov(c.text("G"), p);
    spec.xi = [h = make_terminal(c.text("h"), p)](const PathView& path, std::span<double> xi) { xi[0] = h(path.x(path.points - 1)); };
    spec.driver = make_driver(c.text("driver"), p);
    spec.diffusion = make_diffusion(c.text("diffusion"), p);
    spec.x0 = state(c, "x0", p.dim);
    LinearBsdeConfig cfg;
    cfg.grid = horizon_grid(c);
    cfg.samples = positive(c, "samples");
    cfg.seed = c.seed();
    cfg.eval_times = c.reals("eval_times");
    for (double t : cfg.eval_times) on_grid(cfg.grid, t, "evaluation time");
    cfg.degree = degree(c);
    cfg.workers = c.workers();
    spec.diffusion.validate();
    clock.mark("validate");

    const auto r = solve_linear_bsde(spec, cfg);
    CsvTable table({"t", "y", "se"});
    for (const auto& e : r.estimates) table.add_row({e.time, e.mean(0), e.se(0)});
    CsvTable g({"girsanov_mean", "girsanov_se"});
    g.add_row({r.girsanov_mean, r.girsanov_se});
    clock.mark("compute");
    out.files.push_back({"linear_bsde.csv", table.str()});
    out.files.push_back({"girsanov.csv", g.str()});
}

BsdeProblem bsde_problem(const ExperimentConfig& c, const RegistryParams& p) {
    BsdeProblem problem;
    problem.f = make_generator(c.text("f"), p);
    problem.g = make_young_coefficient(c.text("g"), p);
    problem.h = make_terminal(c.text("h"), p);
    problem.driver = make_driver(c.text("driver"), p);
    problem.diffusion = make_diffusion(c.text("diffusion"), p);
    problem.diffusion.validate();
    return problem;
}

PdeProblem pde_problem(const ExperimentConfig& c, const RegistryParams& p) {
    const auto b = bsde_problem(c, p);
    PdeProblem problem;
    problem.f = b.f;
    problem.g = b.g;
    problem.h = b.h;
    problem.driver = b.driver;
    problem.diffusion = b.diffusion;
    problem.horizon = p.horizon;
    return problem;
}

void nonlinear_bsde(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    const auto p = registry_params(c);
    auto problem = bsde_problem(c, p);
    problem.x0 = state(c, "x0", p.dim);
    const LocalizationSchedule schedule{c.reals("radii")};
    schedule.validate(row_norm(problem.x0));
    BsdeSolverConfig cfg;
    cfg.grid = horizon_grid(c);
    cfg.samples = positive(c, "samples");
    cfg.seed = c.seed();
    cfg.degree = degree(c);
    cfg.picard_tolerance = c.real("picard_tol");
    if (!(cfg.picard_tolerance > 0.0)) throw DomainError("picard_tol must be positive");
    cfg.picard_max_iterations = static_cast<int>(positive(c, "picard_max"));
    cfg.workers = c.workers();
    clock.mark("validate");

    const auto r = solve_bsde_with_localization(problem, schedule, cfg);
    CsvTable table({"n", "y0", "se", "gap_to_last", "gap_se", "exits", "max_abs_y"});
    for (const auto& row : r.table)
        table.add_row({row.radius, row.y0, row.y0_se, row.gap_to_last, row.gap_se, static_cast<double>(row.exits), row.max_abs_y});
    const auto& f = r.finest;
    CsvTable summary({"n", "y0", "se", "picard_iterations", "converged", "terminal_defect", "martingale_residual"});
    summary.add_row({f.radius, f.y0, f.y0_se, static_cast<double>(f.picard_iterations), f.converged ? 1.0 : 0.0,
                     f.terminal_defect, f.martingale_residual});
    CsvTable picard({"iteration", "gap"});
    for (std::size_t k = 0; k < f.picard_gaps.size(); ++k) picard.add_row({static_cast<double>(k + 1), f.picard_gaps[k]});
    clock.mark("compute");
    out.files.push_back({"localization_table.csv", table.str()});
    out.files.push_back({"bsde_summary.csv", summary.str()});
    out.files.push_back({"picard_gaps.csv", picard.str()});
    if (!f.converged) {
        out.status = exit_not_converged;
        out.warnings.push_back("Picard iteration did not reach picard_tol at the finest radius");
    }
}

void pde_fk(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    const auto p = registry_params(c);
    auto problem = pde_problem(c, p);
    const double t = c.real("t");
    if (!(t >= 0.0 && t < p.horizon)) throw DomainError("pde-fk: t must lie in [0, horizon)");
    std::vector<PdePoint> points;
    for (auto& x : first_coordinate_points(c, "xs", p.dim)) points.push_back({t, x});
    const auto& mode = c.text("mode");
    if (mode == "linear") {
        if (problem.f || problem.g) out.warnings.push_back("linear mode ignores f and g");
        LinearPdeConfig cfg;
        cfg.horizon = p.horizon;
        cfg.steps = positive(c, "steps");
        cfg.samples = positive(c, "samples");
        cfg.seed = c.seed();
        cfg.workers = c.workers();
        clock.mark("validate");
        const auto table = solve_linear_young_pde(problem.h, problem.diffusion, problem.driver, points, cfg);
        clock.mark("compute");
        out.files.push_back({"pde_solution.csv", table.to_csv()});
        return;
    }
    if (mode != "double") throw ConfigError("mode must be linear or double");
    DoubleApproxConfig cfg;
    cfg.deltas = c.reals("deltas");
    cfg.radii = c.reals("radii");
    for (const auto& pt : points) LocalizationSchedule{cfg.radii}.validate(pt.x.norm());
    cfg.points = points;
    cfg.steps = positive(c, "steps");
    cfg.samples = positive(c, "samples");
    cfg.seed = c.seed();
    cfg.degree = degree(c);
    cfg.workers = c.workers();
    clock.mark("validate");
    const auto r = solve_young_pde_double_approximation(problem, cfg);
    CsvTable gaps({"kind", "index", "gap"});
    for (std::size_t k = 0; k < r.radius_gaps.size(); ++k) gaps.add_row({0.0, static_cast<double>(k), r.radius_gaps[k]});
    for (std::size_t k = 0; k < r.delta_gaps.size(); ++k) gaps.add_row({1.0, static_cast<double>(k), r.delta_gaps[k]});
    clock.mark("compute");
    out.files.push_back({"pde_solution.csv", r.finest.to_csv()});
    out.files.push_back({"pde_all.csv", r.all.to_csv()});
    out.files.push_back({"pde_gaps.csv", gaps.str()});
    if (!r.radius_gaps_shrink) out.warnings.push_back("radius gaps increase more than once");
    if (!r.delta_gaps_shrink) out.warnings.push_back("mollification gaps increase more than once");
}

void localization_error(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    const auto p = registry_params(c);
    const auto problem = pde_problem(c, p);
    LocalizationExperimentConfig cfg;
    cfg.radii = c.reals("radii");
    cfg.xs = first_coordinate_points(c, "xs", p.dim);
    for (const auto& x : cfg.xs) LocalizationSchedule{cfg.radii}.validate(x.norm());
    cfg.horizon = p.horizon;
    cfg.steps = positive(c, "steps");
    cfg.samples = positive(c, "samples");
    cfg.seed = c.seed();
    cfg.degree = degree(c);
    cfg.workers = c.workers();
    clock.mark("validate");
    const auto r = localization_error_experiment(problem, cfg);
    clock.mark("compute");
    out.files.push_back({"localization_errors.csv", r.errors_csv()});
    out.files.push_back({"localization_fits.csv", r.fits_csv()});
    for (const auto& f : r.fits)
        for (const auto& w : f.warnings) out.warnings.push_back(w);
}

void hurst_region(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    const long d = c.integer("d"), res = c.integer("resolution");
    if (d < 1) throw DomainError("hurst-region: d must be >= 1");
    if (res < 2) throw DomainError("hurst-region: resolution must be >= 2");
    clock.mark("validate");
    CsvTable table({"H", "H0", "admissible"});
    for (const auto& row : hurst_region_grid(static_cast<int>(d), static_cast<int>(res)))
        table.add_row({row.H, row.H0, row.admissible ? 1.0 : 0.0});
    clock.mark("compute");
    out.files.push_back({"hurst_region.csv", table.str()});
}

void tower_rule(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    auto p = registry_params(c);
    const auto diffusion = make_diffusion(c.text("diffusion"), p);
    diffusion.validate();
    const auto x0 = state(c, "x0", p.dim);
    const auto grid = horizon_grid(c);
    const std::size_t start = on_grid(grid, c.real("t"), "start time");
    const auto samples = positive(c, "samples");
    const int deg = degree(c);
    PathProcess A;
    SpaceTimeDriver driver;
    const auto& kind = c.text("case");
    if (kind == "xt-time") {
        A = [](const PathView& path, std::size_t) { return path.x(path.points - 1)[0]; };
        driver = make_driver("linear-time", p);
    } else if (kind == "xt2-cos") {
        A = [](const PathView& path, std::size_t) {
            const double x = path.x(path.points - 1)[0];
            return x * x;
        };
        driver = make_driver("cos-potential", p);
    } else {
        throw ConfigError("case must be xt-time or xt2-cos");
    }
    const PathProcess B = [](const PathView&, std::size_t) { return 1.0; };
    clock.mark("validate");
    const auto batch = simulate(diffusion, x0, grid, samples, c.seed(), c.workers());
    clock.mark("simulate");
    const auto r = tower_rule_defect(A, B, driver, batch, start, deg);
    CsvTable table({"lhs", "rhs", "lhs_se", "rhs_se", "combined_se", "defect"});
    table.add_row({r.lhs, r.rhs, r.lhs_se, r.rhs_se, r.combined_se, r.defect});
    clock.mark("compute");
    out.files.push_back({"tower_rule.csv", table.str()});
}

void exit_decay(const ExperimentConfig& c, RunOutcome& out, PhaseClock& clock) {
    const auto p = registry_params(c);
    const auto diffusion = make_diffusion(c.text("diffusion"), p);
    diffusion.validate();
    const auto x0 = state(c, "x0", p.dim);
    const auto radii = c.reals("radii");
    LocalizationSchedule{radii}.validate(x0.norm());
    const auto grid = horizon_grid(c);
    const auto samples = positive(c, "samples");
    clock.mark("validate");
    const auto r = exit_tail_decay(diffusion, x0, radii, grid, samples, c.seed(), c.workers());
    CsvTable probs({"n", "probability", "se"});
    for (std::size_t k = 0; k < r.radii.size(); ++k) probs.add_row({r.radii[k], r.probabilities[k], r.standard_errors[k]});
    CsvTable fit({"slope", "intercept", "r2", "kept", "dropped"});
    fit.add_row({r.slope, r.intercept, r.r2, static_cast<double>(r.radii.size()), static_cast<double>(r.dropped_radii.size())});
    clock.mark("compute");
    out.files.push_back({"exit_probabilities.csv", probs.str()});
    out.files.push_back({"exit_fit.csv", fit.str()});
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
}

} // namespace

RunOutcome execute(const ExperimentConfig& config) {
    RunOutcome out;
    PhaseClock clock(out);
    const auto& k = config.kind;
    if (k == "simulate-fbs") simulate_fbs(config, out, clock);
    else if (k == "young-integral") young_integral(config, out, clock);
    else if (k == "flow") flow(config, out, clock);
    else if (k == "linear-bsde") linear_bsde(config, out, clock);
    else if (k == "nonlinear-bsde") nonlinear_bsde(config, out, clock);
    else if (k == "pde-fk") pde_fk(config, out, clock);
    else if (k == "localization-error") localization_error(config, out, clock);
    else if (k == "hurst-region") hurst_region(config, out, clock);
    else if (k == "tower-rule") tower_rule(config, out, clock);
    else if (k == "exit-decay") exit_decay(config, out, clock);
    else throw ConfigError("unknown experiment kind '" + k + "'");
    return out;
}

} // namespace ybsde
