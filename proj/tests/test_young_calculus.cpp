#include "doctest.h"

#include "ybsde/errors.hpp"
#include "ybsde/oracles/oracles.hpp"
#include "ybsde/young_calculus.hpp"

#include <cmath>
#include <numbers>

using namespace ybsde;

namespace {

const DriverRegularity smooth{1.0, 1.0, 0.0};

SpaceTimeDriver time_driver() {
    return make_separable_driver([](double) { return 1.0; }, [](double t) { return t; }, 1.0, smooth, true);
}

SamplePath constant_path(const TimeGrid& g, double c) { return sample_function(g, [c](double) { return c; }); }

double scalar_value(const YoungIntegralResult& r) { return r.value(0); }

/// Classical left-point Riemann-Stieltjes sum of y against a(t) on a grid.
double stieltjes(const std::function<double(double)>& y, const std::function<double(double)>& a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / n, t = static_cast<double>(i + 1) / n;
        acc += y(s) * (a(t) - a(s));
    }
    return acc;
}

} // namespace

TEST_CASE("telescoping and constant integrands") {
    const auto g = TimeGrid::uniform(0, 1, 16);
    const auto x = sample_function(g, [](double t) { return std::sin(5 * t); });
    CHECK(scalar_value(nonlinear_young_integral(constant_path(g, 1.0), x, time_driver(), 0.25, 0.75)) == doctest::Approx(0.5));

    const auto v = make_separable_driver([](double x) { return std::cos(x); }, [](double t) { return t; }, 1.0, smooth, true);
    const double x0 = 0.4;
    const auto r = nonlinear_young_integral(constant_path(g, 2.0), constant_path(g, x0), v, 0.0, 1.0);
    CHECK(scalar_value(r) == doctest::Approx(2.0 * std::cos(x0)));
    CHECK(r.converged);
}

TEST_CASE("classical Riemann integral of t dt") {
    const auto g = TimeGrid::uniform(0, 1, 1024);
    const auto y = sample_function(g, [](double t) { return t; });
    const auto r = nonlinear_young_integral(y, constant_path(g, 0.0), time_driver(), 0.0, 1.0);
    CHECK(r.converged);
    CHECK(scalar_value(r) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.cauchy_gap <= 1e-8 + 1e-6 * 0.5);
    for (std::size_t k = 1; k < r.gaps.size(); ++k) CHECK(r.gaps[k] == doctest::Approx(r.gaps[k - 1] / 2).epsilon(1e-3));
}

TEST_CASE("smooth driver against quadrature") {
    const auto g = TimeGrid::uniform(0, 1, 256);
    const auto y = sample_function(g, [](double t) { return std::sin(t); });
    const auto x = sample_function(g, [](double t) { return t; });
    const auto eta = make_separable_driver([](double x) { return std::cos(x); }, [](double t) { return t; }, 1.0, smooth, true);
    const auto r = nonlinear_young_integral(y, x, eta, 0.0, 1.0, {1e-10, 1e-9, 16, SpaceEvaluation::left});
    const double oracle = oracles::quadrature([](double t) { return std::sin(t) * std::cos(t); }, 0.0, 1.0, 1e-12);
    CHECK(scalar_value(r) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("space-independent driver reduces to Riemann-Stieltjes") {
    const std::size_t n = 64;
    const auto g = TimeGrid::uniform(0, 1, n);
    auto a = [](double t) { return t * t + std::sin(3 * t); };
    auto yf = [](double t) { return std::exp(t); };
    const auto eta = make_separable_driver([](double) { return 1.0; }, a, 1.0, smooth, true);
    const auto sum = young_riemann_sum(sample_function(g, yf), constant_path(g, 0.0), eta, 0, n);
    CHECK(sum(0) == doctest::Approx(stieltjes(yf, a, n)).epsilon(1e-13));
}

TEST_CASE("linearity and interval additivity at a fixed partition") {
    const auto g = TimeGrid::uniform(0, 1, 20);
    const auto x = sample_function(g, [](double t) { return std::cos(4 * t); });
    const auto y1 = sample_function(g, [](double t) { return t * t; });
    const auto y2 = sample_function(g, [](double t) { return 1 - t; });
    SamplePath comb = y1;
    comb.values = 2.0 * y1.values - 3.0 * y2.values;
    const auto eta = make_separable_driver([](double x) { return x * x; }, [](double t) { return std::sqrt(t); }, 1.0,
                                           DriverRegularity{0.5, 1.0, 2.0}, false);
    const double a = young_riemann_sum(y1, x, eta, 0, 20)(0), b = young_riemann_sum(y2, x, eta, 0, 20)(0);
    CHECK(young_riemann_sum(comb, x, eta, 0, 20)(0) == doctest::Approx(2 * a - 3 * b).epsilon(1e-13));
    const double left = young_riemann_sum(y1, x, eta, 0, 7)(0), right = young_riemann_sum(y1, x, eta, 7, 20)(0);
    CHECK(left + right == doctest::Approx(a).epsilon(1e-14));
}

TEST_CASE("mismatched grids are rejected") {
    const auto g1 = TimeGrid::uniform(0, 1, 4), g2 = TimeGrid::uniform(0, 1, 5);
    CHECK_THROWS_AS(nonlinear_young_integral(constant_path(g1, 1), constant_path(g2, 0), time_driver(), 0, 1), DomainError);
}

TEST_CASE("non-convergence is reported, not thrown") {
    const auto g = TimeGrid::uniform(0, 1, 4);
    const auto rough = make_separable_driver([](double) { return 1.0; }, [](double t) { return std::sin(4000 * t); }, 1.0,
                                             DriverRegularity{0.1, 1.0, 0.0}, false);
    const auto y = sample_function(g, [](double t) { return t; });
    const auto r = nonlinear_young_integral(y, constant_path(g, 0), rough, 0, 1, {1e-14, 0.0, 3, SpaceEvaluation::left});
    CHECK_FALSE(r.converged);
    CHECK(r.levels == 3);
}

TEST_CASE("scalar flows") {
    const auto g = TimeGrid::uniform(0, 1, 1000);
    const auto x = constant_path(g, 0.0);
    const auto zero = solve_flow(FlowCoefficients::constant(g, {Eigen::MatrixXd::Zero(2, 2)}), time_driver(), x);
    for (const auto& m : zero.values) CHECK(m == Eigen::MatrixXd::Identity(2, 2));

    FlowOptions exact;
    exact.mode = FlowMode::exact_scalar;
    const auto one = FlowCoefficients::constant(g, {Eigen::MatrixXd::Ones(1, 1)});
    const auto e = solve_flow(one, time_driver(), x, 250, exact);
    CHECK(e.terminal()(0, 0) == doctest::Approx(std::exp(0.75)).epsilon(1e-13));
    const auto inv = flow_inverse(e);
    CHECK(inv.terminal()(0, 0) == doctest::Approx(std::exp(-0.75)).epsilon(1e-13));
    CHECK_THROWS_AS(solve_flow(FlowCoefficients::constant(g, {Eigen::MatrixXd::Identity(2, 2)}), time_driver(), x, 0, exact),
                    DomainError);
}

TEST_CASE("log of the exact flow equals the Young integral") {
    const auto g = TimeGrid::uniform(0, 1, 500);
    const auto x = sample_function(g, [](double t) { return std::sin(7 * t); });
    const auto alpha = sample_function(g, [](double t) { return 0.5 + t; });
    const auto eta = make_separable_driver([](double x) { return std::cos(x); }, [](double t) { return t; }, 1.0, smooth, true);
    FlowOptions exact;
    exact.mode = FlowMode::exact_scalar;
    const auto flow = solve_flow(FlowCoefficients(alpha, 1, 1), eta, x, 0, exact);
    const auto sum = young_riemann_sum(alpha, x, eta, 0, 500);
    CHECK(std::abs(std::log(flow.terminal()(0, 0)) - sum(0)) <= 1e-12);
}

TEST_CASE("constant-coefficient flow approaches the matrix exponential at first order") {
    Eigen::MatrixXd A(2, 2);
    A << 0.3, -0.7, 0.5, 0.2;
    const Eigen::MatrixXd exact = oracles::matrix_exponential(A.transpose());
    std::vector<double> err;
    for (std::size_t n : {200, 400, 800}) {
        const auto g = TimeGrid::uniform(0, 1, n);
        const auto flow = solve_flow(FlowCoefficients::constant(g, {A}), time_driver(), constant_path(g, 0.0));
        err.push_back((flow.terminal() - exact).cwiseAbs().maxCoeff());
    }
    const double order = std::log2(err[0] / err[1]), order2 = std::log2(err[1] / err[2]);
    CHECK(order == doctest::Approx(1.0).epsilon(0.1));
    CHECK(order2 == doctest::Approx(1.0).epsilon(0.1));

    const auto g = TimeGrid::uniform(0, 1, 4000);
    const auto flow = solve_flow(FlowCoefficients::constant(g, {A}), time_driver(), constant_path(g, 0.0));
    const auto inv = flow_inverse(flow);
    CHECK((inv.terminal() - oracles::matrix_exponential(-A.transpose())).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(adjoint_residual(inv, FlowCoefficients::constant(g, {A}), time_driver(), constant_path(g, 0.0)) < 1e-3);
}

TEST_CASE("Richardson estimate tracks the Euler error") {
    Eigen::MatrixXd A(2, 2);
    A << 0.3, -0.7, 0.5, 0.2;
    const auto g = TimeGrid::uniform(0, 1, 400);
    FlowOptions o;
    o.richardson = true;
    const auto flow = solve_flow(FlowCoefficients::constant(g, {A}), time_driver(), constant_path(g, 0.0), 0, o);
    const double err = (flow.terminal() - oracles::matrix_exponential(A.transpose())).cwiseAbs().maxCoeff();
    CHECK(flow.richardson_error > 0.3 * err);
    CHECK(flow.richardson_error < 1.5 * err);
}

TEST_CASE("flow product property") {
    const std::size_t n = 1024;
    const auto g = TimeGrid::uniform(0, 1, n);
    const auto x = sample_function(g, [](double t) { return std::sin(2 * std::numbers::pi * t); });
    Eigen::MatrixXd av(static_cast<Eigen::Index>(n + 1), 4);
    for (std::size_t i = 0; i <= n; ++i) {
        const double xi = x.values(static_cast<Eigen::Index>(i), 0);
        av.row(static_cast<Eigen::Index>(i)) << std::sin(xi), -0.3, 0.5, std::cos(xi);
    }
    const FlowCoefficients alpha(SamplePath(g, av), 2, 1);
    const auto eta = make_separable_driver([](double x) { return std::cos(x); }, [](double t) { return t; }, 1.0, smooth, true);
    const auto from0 = solve_flow(alpha, eta, x, 0);
    CHECK(flow_product_defect(from0, from0) == 0.0);
    CHECK(flow_product_defect(from0, solve_flow(alpha, eta, x, n)) == 0.0);
    CHECK(flow_product_defect(from0, solve_flow(alpha, eta, x, n / 2)) < 1e-3);

    const auto zero = FlowCoefficients::constant(g, {Eigen::MatrixXd::Zero(2, 2)});
    CHECK(flow_product_defect(solve_flow(zero, eta, x, 0), solve_flow(zero, eta, x, 300)) == 0.0);
}

TEST_CASE("flow overflow guard") {
    const auto g = TimeGrid::uniform(0, 1, 10);
    FlowOptions o;
    o.overflow_guard = 10.0;
    CHECK_THROWS_AS(solve_flow(FlowCoefficients::constant(g, {Eigen::MatrixXd::Constant(1, 1, 5.0)}), time_driver(),
                               constant_path(g, 0.0), 0, o),
                    NumericalError);
}
