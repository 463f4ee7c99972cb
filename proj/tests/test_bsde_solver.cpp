#include "doctest.h"

#include "ybsde/bsde_solver.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/oracles/oracles.hpp"
#include "ybsde/stats.hpp"

#include <cmath>

using namespace ybsde;

namespace {

const DriverRegularity smooth{1.0, 1.0, 0.0};

SpaceTimeDriver time_driver(double c = 1.0) {
    return make_separable_driver([](double) { return 1.0; }, [c](double t) { return c * t; }, 1.0, smooth, true);
}

SpaceTimeDriver cos_driver() {
    return make_separable_driver([](double x) { return std::cos(x); }, [](double t) { return t; }, 1.0, smooth, true);
}

Eigen::VectorXd vec(double v) { return Eigen::VectorXd::Constant(1, v); }

LinearBsdeSpec scalar_linear(double alpha, SpaceTimeDriver driver, DiffusionSpec diffusion, double x0) {
    LinearBsdeSpec s;
    s.alpha = [alpha](double, std::span<const double>, std::span<double> a) { a[0] = alpha; };
    s.xi = [](const PathView& p, std::span<double> xi) { xi[0] = p.x(p.points - 1)[0]; };
    s.driver = std::move(driver);
    s.diffusion = std::move(diffusion);
    s.x0 = vec(x0);
    return s;
}

LinearBsdeConfig linear_config(std::size_t steps, std::size_t samples, std::uint64_t seed) {
    LinearBsdeConfig c;
    c.grid = TimeGrid::uniform(0, 1, steps);
    c.samples = samples;
    c.seed = seed;
    return c;
}

BsdeProblem brownian_problem(double x0) {
    BsdeProblem p;
    p.h = [](std::span<const double> x) { return x[0]; };
    p.driver = time_driver();
    p.diffusion = constant_diffusion(1, 1.0, 0.0, "brownian");
    p.x0 = vec(x0);
    return p;
}

BsdeSolverConfig solver_config(std::size_t steps, std::size_t samples, std::uint64_t seed) {
    BsdeSolverConfig c;
    c.grid = TimeGrid::uniform(0, 1, steps);
    c.samples = samples;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("Girsanov weights") {
    const auto g = TimeGrid::uniform(0, 1, 10);
    const auto batch = simulate(constant_diffusion(1, 1.0, 0.0), vec(0), g, 100000, 3);
    const auto one = girsanov_weight(batch, nullptr);
    CHECK(one.minCoeff() == 1.0);
    CHECK(one.maxCoeff() == 1.0);

    const GirsanovFn G = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.5; };
    const auto w = girsanov_weight(batch, G);
    const Eigen::VectorXd mT = w.col(10);
    const auto ms = mean_and_se(std::span<const double>(mT.data(), static_cast<std::size_t>(mT.size())));
    CHECK(std::abs(ms.mean - 1.0) <= 3 * ms.se);
    CHECK(w.minCoeff() > 0.0);
    CHECK(girsanov_weight(batch, G) == w);

    // log M_T is Gaussian with mean -1/2 int |G|^2
    std::vector<double> logs(batch.samples);
    for (std::size_t s = 0; s < batch.samples; ++s) logs[s] = std::log(w(static_cast<Eigen::Index>(s), 10));
    const auto lm = mean_and_se(logs);
    CHECK(std::abs(lm.mean + 0.125) <= 3 * lm.se);
}

TEST_CASE("linear BSDE martingale case") {
    auto spec = scalar_linear(0.0, time_driver(), constant_diffusion(1, 1.0, 0.0), 0.7);
    const auto r = solve_linear_bsde(spec, linear_config(10, 20000, 5));
    CHECK(std::abs(r.estimates[0].mean(0) - 0.7) <= 3 * r.estimates[0].se(0));
}

TEST_CASE("linear BSDE with the exponential flow") {
    auto spec = scalar_linear(1.0, time_driver(), constant_diffusion(1, 1.0, 0.0), 0.7);
    const auto cfg = linear_config(10, 5000, 6);
    const auto r = solve_linear_bsde(spec, cfg);
    const auto batch = simulate(spec.diffusion, spec.x0, cfg.grid, cfg.samples, cfg.seed);
    double mean = 0.0;
    for (std::size_t s = 0; s < cfg.samples; ++s) mean += batch.x(s, 10);
    mean /= static_cast<double>(cfg.samples);
    CHECK(r.estimates[0].mean(0) == doctest::Approx(std::exp(1.0) * mean).epsilon(1e-6));
}

TEST_CASE("linear BSDE against the matrix ODE") {
    // dY = -(A Y + c) dt, Y_T = v:  Y_0 = e^{AT} v + int_0^T e^{As} c ds
    Eigen::MatrixXd A(2, 2);
    A << 0.2, 0.9, -0.4, 0.1;
    const Eigen::Vector2d c(0.3, -0.5), v(1.0, 2.0);
    LinearBsdeSpec spec;
    spec.N = 2;
    spec.alpha = [&A](double, std::span<const double>, std::span<double> a) {
        for (int k = 0; k < 4; ++k) a[static_cast<std::size_t>(k)] = A.data()[k];
    };
    spec.f = [&c](double, std::span<const double>, std::span<double> f) { f[0] = c(0), f[1] = c(1); };
    spec.xi = [&v](const PathView&, std::span<double> xi) { xi[0] = v(0), xi[1] = v(1); };
    spec.driver = time_driver();
    spec.diffusion = constant_diffusion(1, 0.0, 0.0);
    spec.x0 = vec(0.0);
    const auto r = solve_linear_bsde(spec, linear_config(4000, 2, 1));

    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(3, 3);
    big.topLeftCorner(2, 2) = A;
    big.topRightCorner(2, 1) = c;
    const Eigen::MatrixXd e = oracles::matrix_exponential(big);
    const Eigen::Vector2d oracle = e.topLeftCorner(2, 2) * v + e.topRightCorner(2, 1);
    CHECK((r.estimates[0].mean - oracle).cwiseAbs().maxCoeff() < 2e-3);
}

TEST_CASE("linear BSDE cos potential against finite differences") {
    auto spec = scalar_linear(1.0, cos_driver(), constant_diffusion(1, 1.0, 0.0), 0.0);
    spec.xi = [](const PathView&, std::span<double> xi) { xi[0] = 1.0; };
    auto cfg = linear_config(100, 20000, 9);
    cfg.eval_times = {0.0, 0.5};
    const auto r = solve_linear_bsde(spec, cfg);
    const auto cn = oracles::crank_nicolson([](double x) { return std::cos(x); }, [](double) { return 1.0; }, 1.0, 0.0, -8, 8, 1.0, 800, 800);
    CHECK(r.estimates[0].mean(0) == doctest::Approx(cn.at(0.0)).epsilon(0.02));
    // interior time: regression on X_{1/2} against the half-horizon solution
    const auto half = oracles::crank_nicolson([](double x) { return std::cos(x); }, [](double) { return 1.0; }, 1.0, 0.0, -8, 8, 0.5, 800, 400);
    const double x = 0.5;
    CHECK(r.estimates[1].model.predict(std::span<const double>(&x, 1))(0) == doctest::Approx(half.at(x)).epsilon(0.03));
}

TEST_CASE("linear BSDE girsanov normalization is reported") {
    auto spec = scalar_linear(0.0, time_driver(), constant_diffusion(1, 1.0, 0.0), 0.0);
    spec.G = [](double, std::span<const double> x, std::span<double> g) { g[0] = 0.5 * std::sin(x[0]); };
    const auto r = solve_linear_bsde(spec, linear_config(20, 20000, 4));
    CHECK(std::abs(r.girsanov_mean - 1.0) <= 3 * r.girsanov_se);
}

TEST_CASE("evaluation times must lie on the grid") {
    auto spec = scalar_linear(0.0, time_driver(), constant_diffusion(1, 1.0, 0.0), 0.0);
    auto cfg = linear_config(10, 10, 1);
    cfg.eval_times = {0.55};
    CHECK_THROWS_AS(solve_linear_bsde(spec, cfg), DomainError);
}

TEST_CASE("tower rule") {
    const auto g = TimeGrid::uniform(0, 1, 20);
    const auto batch = simulate(constant_diffusion(1, 1.0, 0.0), vec(0.3), g, 20000, 8);
    const PathProcess XT = [](const PathView& p, std::size_t) { return p.x(p.points - 1)[0]; };
    const PathProcess one = [](const PathView&, std::size_t) { return 1.0; };
    const PathProcess det = [](const PathView& p, std::size_t r) { return (*p.grid)[r] * 2.0; };

    const auto end = tower_rule_defect(XT, one, time_driver(), batch, 20);
    CHECK(end.lhs == 0.0);
    CHECK(end.rhs == 0.0);

    const auto d = tower_rule_defect(det, one, cos_driver(), batch, 0);
    CHECK(d.defect < 1e-9);

    const auto t = tower_rule_defect(XT, one, time_driver(), batch, 5);
    CHECK(t.defect <= 3 * t.combined_se);
    const PathProcess sq = [](const PathView& p, std::size_t) { const double x = p.x(p.points - 1)[0]; return x * x; };
    const auto q = tower_rule_defect(sq, one, cos_driver(), batch, 0);
    CHECK(q.defect <= 3 * q.combined_se);
}

TEST_CASE("classical linear BSDE through the localized solver") {
    auto p = brownian_problem(1.0);
    p.f = [](double, std::span<const double>, double y, std::span<const double>) { return 0.1 * y; };
    const auto sol = solve_localized_bsde(p, 6.0, solver_config(32, 20000, 2));
    CHECK(sol.y0 == doctest::Approx(std::exp(0.1)).epsilon(0.02));
    CHECK(sol.converged);
    CHECK(sol.terminal_defect == 0.0);
    CHECK(sol.martingale_residual < 4.0);
    for (std::size_t k = 1; k < sol.picard_gaps.size(); ++k) CHECK(sol.picard_gaps[k] <= sol.picard_gaps[k - 1]);
}

TEST_CASE("conditional expectation only") {
    const auto p = brownian_problem(0.2);
    const auto cfg = solver_config(20, 10000, 12);
    const auto batch = simulate(p.diffusion, p.x0, cfg.grid, cfg.samples, cfg.seed);
    const auto sol = solve_localized_bsde(p, 1.0, batch, cfg);
    CHECK(sol.picard_iterations == 1);
    const auto ex = first_exit(batch, 1.0);
    std::vector<double> h(cfg.samples);
    for (std::size_t s = 0; s < cfg.samples; ++s) h[s] = batch.x(s, ex.stop_index(s, 20));
    const auto ms = mean_and_se(h);
    CHECK(std::abs(sol.y0 - ms.mean) <= ms.se);
    for (std::size_t s = 0; s < cfg.samples; ++s)
        CHECK(sol.Y(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(sol.stop_index[s])) == h[s]);
}

TEST_CASE("constant Young coefficient gives the explicit solution") {
    auto p = brownian_problem(0.0);
    p.driver = make_separable_driver([](double x) { return std::abs(x); }, [](double t) { return t; }, 1.0, DriverRegularity{1, 1, 1}, true);
    p.g = [](double, std::span<double> g) { g[0] = 1.0; };
    const auto cfg = solver_config(20, 20000, 13);
    const auto batch = simulate(p.diffusion, p.x0, cfg.grid, cfg.samples, cfg.seed);
    const auto sol = solve_localized_bsde(p, 1.5, batch, cfg);
    const auto ex = first_exit(batch, 1.5);
    std::vector<double> direct(cfg.samples);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
        const std::size_t k = ex.stop_index(s, 20);
        double acc = batch.x(s, k);
        for (std::size_t i = 0; i < k; ++i) acc += std::abs(batch.x(s, i)) * cfg.grid.dt(i);
        direct[s] = acc;
    }
    const auto ms = mean_and_se(direct);
    CHECK(std::abs(sol.y0 - ms.mean) <= 0.2 * ms.se);
    CHECK(sol.converged);
}

TEST_CASE("linear specialization agrees with the flow formula") {
    auto p = brownian_problem(0.4);
    p.driver = cos_driver();
    p.g = [](double y, std::span<double> g) { g[0] = y; };
    p.h = [](std::span<const double> x) { return std::cos(x[0]); };
    const auto sol = solve_localized_bsde(p, 5.0, solver_config(50, 20000, 14));

    auto spec = scalar_linear(1.0, cos_driver(), constant_diffusion(1, 1.0, 0.0), 0.4);
    spec.xi = [](const PathView& path, std::span<double> xi) { xi[0] = std::cos(path.x(path.points - 1)[0]); };
    const auto lin = solve_linear_bsde(spec, linear_config(50, 20000, 15));
    CHECK(std::abs(sol.y0 - lin.estimates[0].mean(0)) <= 3 * std::hypot(sol.y0_se, lin.estimates[0].se(0)) + 0.01);
    CHECK(sol.converged);
}

TEST_CASE("bounded Young coefficient: Picard contraction") {
    auto p = brownian_problem(0.0);
    p.driver = cos_driver();
    p.g = [](double y, std::span<double> g) { g[0] = std::tanh(y); };
    const auto sol = solve_localized_bsde(p, 3.0, solver_config(20, 5000, 16));
    CHECK(sol.converged);
    for (std::size_t k = 1; k < sol.picard_gaps.size(); ++k) CHECK(sol.picard_gaps[k] <= sol.picard_gaps[k - 1]);
}

TEST_CASE("radius preconditions") {
    const auto p = brownian_problem(1.0);
    CHECK_THROWS_AS(solve_localized_bsde(p, 1.0, solver_config(4, 10, 1)), DomainError);
    const LocalizationSchedule decreasing{{2.0, 1.5}}, inside{{0.5, 2.0}}, empty{};
    CHECK_THROWS_AS(decreasing.validate(0.0), DomainError);
    CHECK_THROWS_AS(inside.validate(1.0), DomainError);
    CHECK_THROWS_AS(empty.validate(0.0), DomainError);
}

TEST_CASE("localization is inert when paths never exit") {
    auto p = brownian_problem(0.5);
    p.diffusion = constant_diffusion(1, 0.0, 0.2);
    p.g = [](double, std::span<double> g) { g[0] = 1.0; };
    p.driver = cos_driver();
    const auto r = solve_bsde_with_localization(p, LocalizationSchedule{{1.0, 2.0, 4.0}}, solver_config(10, 50, 1));
    for (const auto& row : r.table) {
        CHECK(row.y0 == r.table.back().y0);
        CHECK(row.exits == 0);
    }
}

TEST_CASE("localization table is deterministic") {
    auto p = brownian_problem(0.0);
    p.g = [](double, std::span<double> g) { g[0] = 1.0; };
    p.driver = make_separable_driver([](double x) { return std::abs(x); }, [](double t) { return t; }, 1.0, DriverRegularity{1, 1, 1}, true);
    auto cfg = solver_config(20, 4000, 21);
    const auto a = solve_bsde_with_localization(p, LocalizationSchedule{{1.0, 1.5, 2.0}}, cfg);
    cfg.workers = 3;
    const auto b = solve_bsde_with_localization(p, LocalizationSchedule{{1.0, 1.5, 2.0}}, cfg);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.table[k].y0 == b.table[k].y0);
        CHECK(a.table[k].gap_se == b.table[k].gap_se);
    }
    CHECK(a.table.back().gap_to_last == 0.0);
}

TEST_CASE("exponential moment diagnostic") {
    const auto batch = simulate(constant_diffusion(1, 1.0, 0.0), vec(0), TimeGrid::uniform(0, 1, 10), 200, 1);
    const auto zero = exponential_moment_diagnostic([](double, std::span<const double>) { return 0.0; }, time_driver(), batch, 2.0, 5.0);
    CHECK(zero.value() == 1.0);
    const auto lin = exponential_moment_diagnostic([](double, std::span<const double>) { return 0.7; }, time_driver(), batch, 2.0, 50.0);
    CHECK(lin.log_max == doctest::Approx(2.0 * 0.7).epsilon(1e-12));
    CHECK(lin.max_time == 0.0);
    CHECK_THROWS_AS(exponential_moment_diagnostic([](double, std::span<const double>) { return 0.0; }, time_driver(), batch, 0.0, 5.0),
                    DomainError);
}
