#include "doctest.h"

#include "ybsde/errors.hpp"
#include "ybsde/oracles/oracles.hpp"
#include "ybsde/paths.hpp"
#include "ybsde/rng.hpp"

#include <cmath>

using namespace ybsde;

namespace {

SamplePath scalar_path(std::vector<double> t, std::vector<double> v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    const double T = t.back();
    return SamplePath(TimeGrid(std::move(t), T), std::move(m));
}

SamplePath random_path(Philox& rng, std::size_t m, std::size_t d) {
    std::vector<double> t(m);
    for (std::size_t i = 0; i < m; ++i) t[i] = static_cast<double>(i) / static_cast<double>(m - 1);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index k = 0; k < v.cols(); ++k) v(i, k) = rng.normal();
    return SamplePath(TimeGrid(t, 1.0), v);
}

} // namespace

TEST_CASE("time grid validation") {
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5}, 1.0), DomainError);
    CHECK_THROWS_AS(TimeGrid({0.0, 1.5}, 1.0), DomainError);
    CHECK_NOTHROW(TimeGrid({0.25, 0.5}, 1.0));
    const auto g = TimeGrid::uniform(0.0, 1.0, 4);
    CHECK(g.size() == 5);
    CHECK(g.nearest_index(0.3) == 1);
    CHECK(g.refined().size() == 9);
}

TEST_CASE("p-variation of a tent") {
    const auto tent = scalar_path({0, 0.5, 1}, {0, 1, 0});
    CHECK(p_variation(tent, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(p_variation(tent, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(p_variation(scalar_path({0, 0.5, 1}, {3, 3, 3}), 1.7) == 0.0);
}

TEST_CASE("p-variation preconditions") {
    CHECK_THROWS_AS(p_variation(scalar_path({0}, {1}), 2.0), DomainError);
    CHECK_THROWS_AS(p_variation(scalar_path({0, 1}, {0, 1}), 0.5), DomainError);
}

TEST_CASE("exact p-variation matches enumeration and is monotone in p") {
    Philox rng = Philox::stream(11, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(trial % 11);
        const auto path = random_path(rng, m, 1 + static_cast<std::size_t>(trial % 2));
        double prev = INFINITY;
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const double dp = p_variation(path, p);
            CHECK(std::abs(dp - oracles::brute_force_p_variation(path.values, p)) <= 1e-12 * std::max(1.0, dp));
            CHECK(dp <= prev + 1e-12);
            prev = dp;
        }
    }
}

TEST_CASE("p-variation superadditivity") {
    Philox rng = Philox::stream(12, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto path = random_path(rng, 11, 1);
        const double b = path.grid[5];
        for (double p : {1.0, 2.0, 2.5}) {
            const double left = p_variation(path.restricted(0.0, b), p);
            const double right = p_variation(path.restricted(b, 1.0), p);
            const double whole = p_variation(path, p);
            CHECK(std::pow(left, p) + std::pow(right, p) <= std::pow(whole, p) * (1 + 1e-12));
        }
    }
}

TEST_CASE("refinement-limit mode uses the full partition") {
    const auto tent = scalar_path({0, 0.25, 0.5, 1}, {0, 1, 0.5, 2});
    CHECK(p_variation(tent, 1.0, PVarMode::refinement_limit) == doctest::Approx(1 + 0.5 + 1.5));
}

TEST_CASE("Holder norm") {
    const auto lin = sample_function(TimeGrid::uniform(0, 1, 10), [](double t) { return t; });
    CHECK(holder_norm(lin, 1.0) == doctest::Approx(1.0));
    CHECK(holder_norm(scalar_path({0, 0.5}, {2, 2}), 0.5) == 0.0);
    CHECK(holder_norm(scalar_path({0, 0.25}, {0, 1}), 0.5) == doctest::Approx(2.0));
    CHECK_THROWS_AS(holder_norm(lin, 0.0), DomainError);
    CHECK_THROWS_AS(holder_norm(lin, 1.5), DomainError);

    Philox rng = Philox::stream(13, 0);
    const auto path = random_path(rng, 9, 1);
    double osc = 0.0;
    for (Eigen::Index i = 0; i < 9; ++i)
        for (Eigen::Index j = 0; j < 9; ++j) osc = std::max(osc, std::abs(path.values(i, 0) - path.values(j, 0)));
    CHECK(holder_norm(path, 0.4) * std::pow(1.0, 0.4) >= osc - 1e-12);
}

TEST_CASE("uniform norm") {
    CHECK(uniform_norm(scalar_path({0, 0.5, 1}, {0, -3, 2})) == 3.0);
    CHECK(uniform_norm(scalar_path({0, 1}, {-1.5, -1.5})) == 1.5);
    Eigen::MatrixXd v(1, 2);
    v << 3, 4;
    CHECK(uniform_norm(SamplePath(TimeGrid({0.0}, 1.0), v)) == 5.0);
}

TEST_CASE("interpolation and restriction") {
    const auto p = scalar_path({0, 0.5, 1}, {0, 1, 3});
    CHECK(p.interpolate(0.75)(0) == doctest::Approx(2.0));
    const auto r = p.restricted(0.45, 1.0);
    CHECK(r.size() == 2);
    CHECK(r.grid[0] == 0.5);
    const auto f = p.refined();
    CHECK(f.size() == 5);
    CHECK(f.values(1, 0) == doctest::Approx(0.5));
}
