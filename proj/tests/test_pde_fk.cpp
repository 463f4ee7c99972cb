#include "doctest.h"

#include "ybsde/errors.hpp"
#include "ybsde/oracles/oracles.hpp"
#include "ybsde/pde_fk.hpp"

#include <cmath>

using namespace ybsde;

namespace {

const DriverRegularity smooth{1.0, 1.0, 0.0};

SpaceTimeDriver separable(std::function<double(double)> v, double c = 1.0) {
    return make_separable_driver(std::move(v), [c](double t) { return c * t; }, 1.0, smooth, true);
}

PdePoint point(double t, double x) { return PdePoint{t, Eigen::VectorXd::Constant(1, x)}; }

double bump(double x, double c, double r) {
    const double u = (x - c) / r;
    return std::abs(u) < 1 ? std::exp(-1.0 / (1 - u * u)) : 0.0;
}

/// u(t, x) = exp((c - 1/2)(T - t)) cos x solves  u_t + 1/2 u'' + c u = 0,  u(T) = cos.
GridField heat_table(double c, std::size_t nt, std::size_t nx) {
    std::vector<double> ts, xs;
    for (std::size_t j = 0; j <= nt; ++j) ts.push_back(static_cast<double>(j) / nt);
    for (std::size_t k = 0; k <= nx; ++k) xs.push_back(-4.0 + 8.0 * static_cast<double>(k) / nx);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(ts.size()), static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < ts.size(); ++j)
        for (std::size_t k = 0; k < xs.size(); ++k)
            v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = std::exp((c - 0.5) * (1 - ts[j])) * std::cos(xs[k]);
    return GridField(ts, {xs}, v);
}

} // namespace

TEST_CASE("linear PDE without a driver is the heat semigroup") {
    LinearPdeConfig cfg;
    cfg.steps = 20;
    cfg.samples = 20000;
    const auto t = solve_linear_young_pde([](std::span<const double> x) { return x[0]; }, constant_diffusion(1, 1.0, 0.0),
                                          separable([](double) { return 0.0; }), {point(0.0, 0.3), point(0.5, -1.0)}, cfg);
    CHECK(std::abs(t.rows[0].u - 0.3) <= 3 * t.rows[0].se);
    CHECK(std::abs(t.rows[1].u + 1.0) <= 3 * t.rows[1].se);
}

TEST_CASE("linear PDE with a deterministic exponent") {
    LinearPdeConfig cfg;
    cfg.steps = 50;
    cfg.samples = 100;
    const auto t = solve_linear_young_pde([](std::span<const double>) { return 1.0; }, constant_diffusion(1, 1.0, 0.0),
                                          separable([](double) { return 1.0; }, 0.8), {point(0.0, 0.0), point(0.4, 2.0)}, cfg);
    CHECK(t.rows[0].u == doctest::Approx(std::exp(0.8)).epsilon(1e-12));
    CHECK(t.rows[1].u == doctest::Approx(std::exp(0.8 * 0.6)).epsilon(1e-12));
    CHECK(t.rows[0].se < 1e-12);
}

TEST_CASE("linear PDE cos potential against Crank-Nicolson") {
    LinearPdeConfig cfg;
    cfg.steps = 100;
    cfg.samples = 20000;
    const auto t = solve_linear_young_pde([](std::span<const double>) { return 1.0; }, constant_diffusion(1, 1.0, 0.0),
                                          separable([](double x) { return std::cos(x); }), {point(0.0, -1.0), point(0.0, 2.0)}, cfg);
    const auto cn = oracles::crank_nicolson([](double x) { return std::cos(x); }, [](double) { return 1.0; }, 1.0, 0.0, -8, 8, 1.0, 800, 800);
    CHECK(t.rows[0].u == doctest::Approx(cn.at(-1.0)).epsilon(0.05));
    CHECK(t.rows[1].u == doctest::Approx(cn.at(2.0)).epsilon(0.05));
}

TEST_CASE("solution tables are reproducible") {
    LinearPdeConfig cfg;
    cfg.steps = 10;
    cfg.samples = 500;
    auto run = [&](std::size_t w) {
        cfg.workers = w;
        return solve_linear_young_pde([](std::span<const double> x) { return x[0] * x[0]; }, constant_diffusion(1, 1.0, 0.0),
                                      separable([](double x) { return std::sin(x); }), {point(0.0, 0.5)}, cfg)
            .to_csv();
    };
    CHECK(run(1) == run(3));
}

TEST_CASE("weak residual of an exact solution") {
    const auto phi = [](double x) { return bump(x, 0.3, 2.0); };
    const auto terminal = [](double x) { return std::cos(x); };
    const auto diffusion = constant_diffusion(1, 1.0, 0.0);
    const auto zero = separable([](double) { return 0.0; });
    const double r0 = weak_solution_residual(heat_table(0.0, 400, 400), terminal, phi, diffusion, zero, 0.0);
    CHECK(std::abs(r0) < 1e-4);
    const double rT = weak_solution_residual(heat_table(0.0, 400, 400), terminal, phi, diffusion, zero, 1.0);
    CHECK(std::abs(rT) < 1e-14);

    const auto lin = separable([](double) { return 1.0; }, 0.6);
    const double r1 = weak_solution_residual(heat_table(0.6, 2000, 400), terminal, phi, diffusion, lin, 0.0);
    CHECK(std::abs(r1) < 2e-3);
    // a wrong solution is detected
    const double bad = weak_solution_residual(heat_table(0.0, 400, 400), terminal, phi, diffusion, lin, 0.0);
    CHECK(std::abs(bad) > 0.1);
}

TEST_CASE("weak residual preconditions") {
    const auto diffusion = constant_diffusion(1, 1.0, 0.0);
    const auto zero = separable([](double) { return 0.0; });
    const auto table = heat_table(0.0, 10, 40);
    const auto cosf = [](double x) { return std::cos(x); };
    CHECK_THROWS_AS(weak_solution_residual(table, cosf, [](double) { return 0.0; }, diffusion, zero, 0.0), DomainError);
    CHECK_THROWS_AS(weak_solution_residual(table, cosf, [](double x) { return bump(x, 3.5, 1.0); }, diffusion, zero, 0.0), DomainError);
    CHECK_THROWS_AS(weak_solution_residual(table, cosf, [](double x) { return bump(x, 0.0, 1.0); }, diffusion, zero, 0.33), DomainError);
}

TEST_CASE("double approximation is inert for time-linear drivers and non-exiting paths") {
    PdeProblem p;
    p.g = [](double u, std::span<double> g) { g[0] = std::sin(u); };
    p.h = [](std::span<const double> x) { return x[0]; };
    p.driver = separable([](double x) { return std::cos(x); });
    p.diffusion = constant_diffusion(1, 0.0, 0.3);
    DoubleApproxConfig cfg;
    cfg.deltas = {0.2, 0.1, 0.0};
    cfg.radii = {2.0, 3.0};
    cfg.points = {point(0.0, 0.5), point(0.5, -0.2)};
    cfg.steps = 20;
    cfg.samples = 20;
    const auto r = solve_young_pde_double_approximation(p, cfg);
    REQUIRE(r.all.rows.size() == 12);
    for (const auto& row : r.all.rows) {
        const auto& ref = row.t == 0.0 ? r.finest.rows[0] : r.finest.rows[1];
        CHECK(row.u == doctest::Approx(ref.u).epsilon(1e-10));
    }
    for (double g : r.gap_to_finest) CHECK(g < 1e-10);
}

TEST_CASE("two mollification schedules agree") {
    PdeProblem p;
    p.g = [](double u, std::span<double> g) { g[0] = 0.5 * std::tanh(u) + 0.5; };
    p.h = [](std::span<const double> x) { return std::cos(x[0]); };
    p.driver = make_separable_driver([](double x) { return std::cos(x); }, [](double t) { return std::abs(t - 0.5) - 0.5; }, 1.0,
                                     DriverRegularity{1.0, 1.0, 0.0}, false);
    p.diffusion = constant_diffusion(1, 1.0, 0.0);
    DoubleApproxConfig a;
    a.deltas = {0.2, 0.1, 0.05};
    a.radii = {2.0, 3.0, 4.0};
    a.points = {point(0.0, 0.0), point(0.0, 1.0)};
    a.steps = 20;
    a.samples = 2000;
    DoubleApproxConfig b = a;
    b.deltas = {0.3, 0.1, 0.1 / 3};
    const auto ra = solve_young_pde_double_approximation(p, a);
    const auto rb = solve_young_pde_double_approximation(p, b);
    const auto cmp = compare_schedules(ra.finest, rb.finest);
    CHECK(cmp.max_z <= 3.0);
    CHECK(ra.radius_gaps_shrink);
    CHECK(ra.delta_gaps_shrink);
}

TEST_CASE("double approximation preconditions") {
    PdeProblem p;
    p.h = [](std::span<const double> x) { return x[0]; };
    p.driver = separable([](double) { return 1.0; });
    p.diffusion = constant_diffusion(1, 1.0, 0.0);
    DoubleApproxConfig cfg;
    cfg.deltas = {0.1, 0.2};
    cfg.radii = {2.0};
    cfg.points = {point(0.0, 0.0)};
    CHECK_THROWS_AS(solve_young_pde_double_approximation(p, cfg), DomainError);
    cfg.deltas = {0.1};
    cfg.points = {point(0.0, 2.5)};
    CHECK_THROWS_AS(solve_young_pde_double_approximation(p, cfg), DomainError);
}

TEST_CASE("localization error experiment") {
    PdeProblem p;
    p.h = [](std::span<const double> x) { return x[0]; };
    p.driver = separable([](double) { return 0.0; });
    p.diffusion = constant_diffusion(1, 1.0, 0.5, "brownian-drift");
    LocalizationExperimentConfig cfg;
    cfg.radii = {1.5, 2.0, 2.5, 6.0, 8.0};
    cfg.xs = {Eigen::VectorXd::Zero(1)};
    cfg.steps = 50;
    cfg.samples = 50000;
    const auto rep = localization_error_experiment(p, cfg);
    REQUIRE(rep.fits.size() == 1);
    const auto& f = rep.fits[0];
    CHECK(f.reference_saturated);
    CHECK(f.saturated[3]);
    CHECK(f.errors[3] == 0.0);
    CHECK(f.fitted);
    CHECK(f.slope < 0.0);
    CHECK(rep.slopes_negative);
    CHECK(rep.errors_csv().rfind("x0,n,error,se,exits,saturated\n", 0) == 0);
}
