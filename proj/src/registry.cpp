#include "ybsde/errors.hpp"
#include "ybsde/experiments.hpp"
#include "ybsde/fractional_sheet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ybsde {

namespace {

[[noreturn]] void unknown(const char* what, const std::string& name, const std::vector<std::string>& known) {
    std::string list;
    for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError(std::string("unknown ") + what + " '" + name + "' (known: " + list + ")");
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

SpaceTimeDriver separable(const RegistryParams& p, std::function<double(std::span<const double>)> v,
                          std::function<double(double)> a, DriverRegularity reg, bool differentiable) {
    const std::size_t d = p.dim;
    auto vv = [v = std::move(v), d](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, v(std::span<const double>(x.data(), d)));
    };
    return make_separable_driver(vv, std::move(a), 1, d, p.horizon, reg, differentiable);
}

} // namespace

const std::vector<std::string>& diffusion_names() {
    static const std::vector<std::string> n{"brownian", "brownian-drift", "ou-truncated", "zero", "unit-drift"};
    return n;
}

const std::vector<std::string>& driver_names() {
    static const std::vector<std::string> n{"zero", "linear-time", "cos-potential", "tent-v", "quadratic-time", "kink-cos", "fbs"};
    return n;
}

const std::vector<std::string>& girsanov_names() {
    static const std::vector<std::string> n{"zero", "const", "sin-state"};
    return n;
}

const std::vector<std::string>& terminal_names() {
    static const std::vector<std::string> n{"identity", "zero", "one", "cos", "square"};
    return n;
}

const std::vector<std::string>& generator_names() {
    static const std::vector<std::string> n{"zero", "linear", "sin-yz"};
    return n;
}

const std::vector<std::string>& young_coefficient_names() {
    static const std::vector<std::string> n{"zero", "one", "identity", "tanh", "sin"};
    return n;
}

const std::vector<std::string>& path_names() {
    static const std::vector<std::string> n{"identity", "zero", "sin2pi", "sin"};
    return n;
}

DiffusionSpec make_diffusion(const std::string& name, const RegistryParams& p) {
    if (name == "brownian") return constant_diffusion(p.dim, p.sigma, 0.0, name);
    if (name == "brownian-drift") return constant_diffusion(p.dim, p.sigma, p.mu, name);
    if (name == "zero") return constant_diffusion(p.dim, 0.0, 0.0, name);
    if (name == "unit-drift") return constant_diffusion(p.dim, 0.0, 1.0, name);
    if (name == "ou-truncated") {
        if (!(p.clip > 0.0)) throw DomainError("ou-truncated: clip must be positive");
        auto spec = constant_diffusion(p.dim, p.sigma, 0.0, name);
        spec.drift = [theta = p.theta, clip = p.clip](double, std::span<const double> x, std::span<double> b) {
            for (std::size_t k = 0; k < x.size(); ++k) b[k] = -theta * std::clamp(x[k], -clip, clip);
        };
        const double sd = std::sqrt(static_cast<double>(p.dim));
        spec.bound = std::max({std::abs(p.sigma) * sd, std::abs(p.theta) * p.clip * sd, 1e-300});
        spec.lipschitz = std::max(1.0, std::abs(p.theta));
        return spec;
    }
    unknown("diffusion", name, diffusion_names());
}

SpaceTimeDriver make_driver(const std::string& name, const RegistryParams& p) {
    const double c = p.c;
    const DriverRegularity smooth{1.0, 1.0, 0.0};
    auto linear = [c](double t) { return c * t; };
    if (name == "zero") return separable(p, [](std::span<const double>) { return 0.0; }, linear, smooth, true);
    if (name == "linear-time") return separable(p, [](std::span<const double>) { return 1.0; }, linear, smooth, true);
    if (name == "cos-potential") return separable(p, [](std::span<const double> x) { return std::cos(x[0]); }, linear, smooth, true);
    if (name == "tent-v")
        return separable(p, [](std::span<const double> x) { return std::max(0.0, 1.0 - std::abs(x[0])); }, linear, smooth, true);
    if (name == "quadratic-time")
        return separable(p, [](std::span<const double> x) { return norm2(x); }, linear, DriverRegularity{1.0, 1.0, 1.0}, true);
    if (name == "kink-cos") {
        const double mid = 0.5 * p.horizon;
        return separable(p, [](std::span<const double> x) { return std::cos(x[0]); },
                         [c, mid](double t) { return c * (std::abs(t - mid) - mid); }, smooth, false);
    }
    if (name == "fbs") {
        if (p.sheet_times < 2 || p.sheet_points < 2) throw DomainError("fbs driver: need at least 2 nodes per axis");
        if (!(p.sheet_extent > 0.0)) throw DomainError("fbs driver: extent must be positive");
        SheetSpec s;
        s.H0 = p.sheet_H0;
        s.H.assign(p.dim, p.sheet_H);
        s.horizon = p.horizon;
        for (std::size_t j = 0; j < p.sheet_times; ++j)
            s.times.push_back(p.horizon * static_cast<double>(j) / static_cast<double>(p.sheet_times - 1));
        std::vector<double> axis;
        for (std::size_t k = 0; k < p.sheet_points; ++k)
            axis.push_back(-p.sheet_extent + 2.0 * p.sheet_extent * static_cast<double>(k) / static_cast<double>(p.sheet_points - 1));
        s.axes.assign(p.dim, axis);
        s.validate();
        auto base = sample_sheet(s, p.seed);
        if (c == 1.0) return base;
        auto raw = [base, c](double t, std::span<const double> x, std::span<double> out) {
            base.eval_into(t, x, out);
            for (double& v : out) v *= c;
        };
        return SpaceTimeDriver(raw, 1, p.dim, p.horizon, base.regularity(), false, DriverKind::sampled_sheet, true);
    }
    unknown("driver", name, driver_names());
}

GirsanovFn make_girsanov(const std::string& name, const RegistryParams&) {
    if (name == "zero") return {};
    if (name == "const")
        return [](double, std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.5); };
    if (name == "sin-state")
        return [](double, std::span<const double> x, std::span<double> g) {
            for (std::size_t k = 0; k < x.size(); ++k) g[k] = 0.5 * std::sin(x[k]);
        };
    unknown("Girsanov kernel", name, girsanov_names());
}

std::function<double(std::span<const double>)> make_terminal(const std::string& name, const RegistryParams&) {
    if (name == "identity") return [](std::span<const double> x) { return x[0]; };
    if (name == "zero") return [](std::span<const double>) { return 0.0; };
    if (name == "one") return [](std::span<const double>) { return 1.0; };
    if (name == "cos") return [](std::span<const double> x) { return std::cos(x[0]); };
    if (name == "square") return [](std::span<const double> x) { return norm2(x); };
    unknown("terminal", name, terminal_names());
}

std::function<double(double, std::span<const double>, double, std::span<const double>)> make_generator(const std::string& name,
                                                                                                      const RegistryParams& p) {
    if (name == "zero") return {};
    if (name == "linear")
        return [r = p.rate](double, std::span<const double>, double y, std::span<const double>) { return r * y; };
    if (name == "sin-yz")
        return [r = p.rate](double, std::span<const double>, double y, std::span<const double> z) {
            return r * std::sin(y) + 0.5 * r * std::tanh(z[0]);
        };
    unknown("generator", name, generator_names());
}

std::function<void(double, std::span<double>)> make_young_coefficient(const std::string& name, const RegistryParams&) {
    if (name == "zero") return {};
    if (name == "one") return [](double, std::span<double> g) { g[0] = 1.0; };
    if (name == "identity") return [](double y, std::span<double> g) { g[0] = y; };
    if (name == "tanh") return [](double y, std::span<double> g) { g[0] = std::tanh(y); };
    if (name == "sin") return [](double y, std::span<double> g) { g[0] = std::sin(y); };
    unknown("Young coefficient", name, young_coefficient_names());
}

std::function<double(double)> make_path(const std::string& name) {
    if (name == "identity") return [](double t) { return t; };
    if (name == "zero") return [](double) { return 0.0; };
    if (name == "sin2pi") return [](double t) { return std::sin(2.0 * std::numbers::pi * t); };
    if (name == "sin") return [](double t) { return std::sin(t); };
    unknown("path", name, path_names());
}

} // namespace ybsde
