#include "doctest.h"

#include "ybsde/errors.hpp"
#include "ybsde/fractional_sheet.hpp"

#include <cmath>

using namespace ybsde;

namespace {

SheetSpec spec_1d(double H0, double H, std::vector<double> times, std::vector<double> xs) {
    SheetSpec s;
    s.H0 = H0;
    s.H = {H};
    s.times = std::move(times);
    s.axes = {std::move(xs)};
    return s;
}

} // namespace

TEST_CASE("sheet covariance values") {
    const auto s = spec_1d(0.5, 0.5, {1.0}, {1.0});
    const double one = 1.0, zero = 0.0, y = 0.7;
    CHECK(sheet_covariance(s, 1.0, {&one, 1}, 1.0, {&one, 1}) == doctest::Approx(1.0));
    CHECK(sheet_covariance(s, 0.0, {&one, 1}, 0.4, {&y, 1}) == 0.0);
    CHECK(sheet_covariance(s, 0.3, {&zero, 1}, 0.4, {&y, 1}) == 0.0);
    const auto h = spec_1d(0.7, 0.6, {1.0}, {1.0});
    CHECK(sheet_covariance(h, 0.3, {&one, 1}, 0.8, {&y, 1}) == doctest::Approx(sheet_covariance(h, 0.8, {&y, 1}, 0.3, {&one, 1})));
}

TEST_CASE("variance self-similarity in time") {
    const auto s = spec_1d(0.8, 0.6, {1.0}, {1.0});
    const double x = 0.5;
    const double r = sheet_covariance(s, 0.6, {&x, 1}, 0.6, {&x, 1}) / sheet_covariance(s, 0.3, {&x, 1}, 0.3, {&x, 1});
    CHECK(r == doctest::Approx(std::pow(2.0, 1.6)));
}

TEST_CASE("degenerate grid gives a zero sample") {
    const auto s = spec_1d(0.75, 0.75, {0.0}, {-1.0, 0.5, 1.0});
    const SheetSampler sampler(s);
    CHECK(sampler.draw(5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sheet sampling is reproducible and vanishes at t = 0") {
    const auto s = spec_1d(0.75, 0.75, {0.0, 0.5, 1.0}, {-1.0, 0.0, 1.0});
    const SheetSampler sampler(s);
    const auto a = sampler.draw(42, 3), b = sampler.draw(42, 3), c = sampler.draw(42, 4);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.col(1).cwiseAbs().maxCoeff() == 0.0);
    const auto drv = sample_sheet(s, 42);
    const double x = 0.3;
    CHECK(drv.scalar(0.0, std::span<const double>(&x, 1)) == 0.0);
}

TEST_CASE("Cholesky needs little jitter over a range of exponents") {
    for (double H : {0.55, 0.75, 0.95}) {
        std::vector<double> times, xs;
        for (int i = 1; i <= 16; ++i) times.push_back(i / 16.0);
        for (int i = 1; i <= 16; ++i) xs.push_back(-2.0 + 4.0 * i / 16.0);
        const SheetSampler sampler(spec_1d(H, H, times, xs));
        CHECK(sampler.relative_jitter() <= 1e-10);
    }
}

TEST_CASE("oversized grids are refused") {
    std::vector<double> times(100), xs(50);
    for (int i = 0; i < 100; ++i) times[i] = (i + 1) / 100.0;
    for (int i = 0; i < 50; ++i) xs[i] = (i + 1) / 50.0;
    CHECK_THROWS_AS(SheetSampler(spec_1d(0.7, 0.7, times, xs)), ResourceError);
}

TEST_CASE("Hurst exponents must lie in (0,1)") {
    CHECK_THROWS_AS(SheetSampler(spec_1d(1.0, 0.5, {0.5}, {1.0})), DomainError);
    CHECK_THROWS_AS(SheetSampler(spec_1d(0.5, 0.0, {0.5}, {1.0})), DomainError);
}

TEST_CASE("Hurst admissibility") {
    CHECK(hurst_admissible(0.9, 0.5, 1));
    CHECK_FALSE(hurst_admissible(0.6, 0.9, 1));
    CHECK_FALSE(hurst_admissible(0.75, 0.5, 1));
    CHECK_FALSE(hurst_admissible(1.0, 0.5, 1));
}

TEST_CASE("Hurst region grid") {
    const auto small = hurst_region_grid(1, 3);
    REQUIRE(small.size() == 9);
    for (const auto& r : small) CHECK(r.admissible == hurst_admissible(r.H0, r.H, 1));
    const auto d1 = hurst_region_grid(1, 101), d2 = hurst_region_grid(2, 101);
    std::size_t count1 = 0, count2 = 0;
    for (std::size_t i = 0; i < d1.size(); ++i) {
        if (d1[i].H0 <= 0.75) CHECK_FALSE(d1[i].admissible);
        if (d2[i].admissible) CHECK(d1[i].admissible);
        count1 += d1[i].admissible;
        count2 += d2[i].admissible;
    }
    CHECK(count1 > count2);
    CHECK(count2 > 0);
}

TEST_CASE("declared sheet regularity") {
    SheetSpec s = spec_1d(0.8, 0.7, {1.0}, {1.0});
    const auto r = sheet_regularity(s);
    CHECK(r.tau == doctest::Approx(0.79));
    CHECK(r.lambda == doctest::Approx(0.69));
    CHECK(r.beta == doctest::Approx(0.01));
}
