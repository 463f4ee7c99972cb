#include "ybsde/csv.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/experiments.hpp"
#include "ybsde/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ybsde {

namespace {

using V = ValueType;

std::vector<KeySpec> common_keys() {
    return {
        {"seed", V::integer, "20240601", "master seed"},
        {"workers", V::integer, "0", "worker threads (0: environment default)"},
        {"out", V::text, "out", "output directory"},
    };
}

std::vector<KeySpec> diffusion_keys() {
    return {
        {"diffusion", V::text, "brownian", "diffusion registry entry"},
        {"sigma", V::real, "1", "volatility scale"},
        {"mu", V::real, "0.5", "drift of brownian-drift"},
        {"theta", V::real, "1", "mean reversion of ou-truncated"},
        {"clip", V::real, "2", "state clip of ou-truncated"},
        {"dim", V::integer, "1", "state dimension"},
    };
}

std::vector<KeySpec> driver_keys() {
    return {
        {"driver", V::text, "cos-potential", "driver registry entry"},
        {"c", V::real, "1", "driver scale"},
        {"sheet_H0", V::real, "0.8", "fbs driver: time Hurst exponent"},
        {"sheet_H", V::real, "0.7", "fbs driver: space Hurst exponent"},
        {"sheet_times", V::integer, "9", "fbs driver: time nodes"},
        {"sheet_points", V::integer, "9", "fbs driver: nodes per space axis"},
        {"sheet_extent", V::real, "3", "fbs driver: space axis half width"},
    };
}

std::vector<KeySpec> mc_keys(const char* steps, const char* samples) {
    return {
        {"horizon", V::real, "1", "time horizon T"},
        {"steps", V::integer, steps, "time steps on [0, T]"},
        {"samples", V::integer, samples, "Monte Carlo samples"},
        {"degree", V::integer, "2", "regression polynomial degree"},
    };
}

std::vector<KeySpec> bsde_keys() {
    return {
        {"f", V::text, "zero", "generator registry entry"},
        {"g", V::text, "zero", "Young coefficient registry entry"},
        {"h", V::text, "identity", "terminal registry entry"},
        {"rate", V::real, "0.1", "rate of the linear generator"},
    };
}

std::map<std::string, std::vector<KeySpec>> build_schemas() {
    std::map<std::string, std::vector<KeySpec>> s;
    auto add = [&](const std::string& kind, std::initializer_list<std::vector<KeySpec>> groups) {
        auto& keys = s[kind];
        keys = common_keys();
        for (const auto& g : groups) keys.insert(keys.end(), g.begin(), g.end());
    };
    add("simulate-fbs", {{
                            {"H0", V::real, "0.8", "time Hurst exponent"},
                            {"H", V::real_list, "0.7", "space Hurst exponents, one per axis"},
                            {"horizon", V::real, "1", "time horizon"},
                            {"times", V::integer, "9", "time nodes on [0, T]"},
                            {"points", V::integer, "9", "nodes per space axis"},
                            {"extent", V::real, "2", "space axis half width"},
                            {"draws", V::integer, "1", "independent realizations"},
                            {"jitter", V::real, "0", "initial relative diagonal jitter"},
                        }});
    add("young-integral", {{
                              {"y", V::text, "sin", "integrand path"},
                              {"x", V::text, "identity", "space path"},
                              {"steps", V::integer, "4096", "base grid steps on [a, b]"},
                              {"a", V::real, "0", "left end"},
                              {"b", V::real, "1", "right end"},
                              {"abs_tol", V::real, "1e-8", "absolute Cauchy tolerance"},
                              {"rel_tol", V::real, "1e-6", "relative Cauchy tolerance"},
                              {"max_levels", V::integer, "16", "dyadic levels"},
                              {"space", V::text, "left", "left | midpoint"},
                          },
                          driver_keys()});
    add("flow", {{
                    {"alpha", V::real_list, "0.3,-0.7,0.5,0.2", "constant alpha, N x N row-major"},
                    {"x", V::text, "sin2pi", "space path"},
                    {"steps", V::integer, "1024", "grid steps on [0, T]"},
                    {"horizon", V::real, "1", "time horizon"},
                    {"base", V::real, "0", "base time t"},
                    {"mode", V::text, "euler", "euler | exact"},
                    {"richardson", V::flag, "0", "half-step error estimate"},
                },
                driver_keys()});
    add("linear-bsde", {{
                           {"alpha", V::real, "1", "scalar alpha"},
                           {"h", V::text, "identity", "terminal registry entry"},
                           {"G", V::text, "zero", "Girsanov registry entry"},
                           {"x0", V::real_list, "0", "initial state"},
                           {"eval_times", V::real_list, "0", "evaluation times on the grid"},
                       },
                       diffusion_keys(), driver_keys(), mc_keys("100", "20000")});
    add("nonlinear-bsde", {{
                              {"radii", V::real_list, "2,3,4", "localization radii"},
                              {"x0", V::real_list, "0", "initial state"},
                              {"picard_tol", V::real, "1e-6", "Picard sup-gap tolerance"},
                              {"picard_max", V::integer, "50", "Picard iterations"},
                          },
                          bsde_keys(), diffusion_keys(), driver_keys(), mc_keys("50", "20000")});
    add("pde-fk", {{
                      {"mode", V::text, "linear", "linear | double"},
                      {"xs", V::real_list, "-1,0,1", "evaluation points (first coordinate; others 0)"},
                      {"t", V::real, "0", "evaluation time"},
                      {"deltas", V::real_list, "0.2,0.1,0", "double mode: mollification widths"},
                      {"radii", V::real_list, "2,3,4", "double mode: radii"},
                  },
                  bsde_keys(), diffusion_keys(), driver_keys(), mc_keys("100", "20000")});
    add("localization-error", {{
                                  {"radii", V::real_list, "1.5,2,2.5,3,8", "radii; the last is the reference"},
                                  {"xs", V::real_list, "0", "evaluation points (first coordinate; others 0)"},
                              },
                              bsde_keys(), diffusion_keys(), driver_keys(), mc_keys("200", "200000")});
    add("hurst-region", {{
                            {"d", V::integer, "1", "space dimension"},
                            {"resolution", V::integer, "101", "grid points per axis"},
                        }});
    add("tower-rule", {{
                          {"case", V::text, "xt-time", "xt-time | xt2-cos"},
                          {"x0", V::real_list, "0", "initial state"},
                          {"t", V::real, "0", "start time on the grid"},
                      },
                      diffusion_keys(), mc_keys("50", "100000")});
    add("exit-decay", {{
                          {"radii", V::real_list, "1,1.5,2,2.5", "radii"},
                          {"x0", V::real_list, "0", "initial state"},
                      },
                      diffusion_keys(), mc_keys("200", "100000")});
    return s;
}

const std::map<std::string, std::vector<KeySpec>>& schemas() {
    static const auto s = build_schemas();
    return s;
}

bool parse_integer(const std::string& v, long& out) {
    const char* b = v.data();
    const char* e = b + v.size();
    if (b != e && *b == '+') ++b;
    auto r = std::from_chars(b, e, out);
    return r.ec == std::errc() && r.ptr == e;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

void check_value(const KeySpec& k, const std::string& v) {
    auto fail = [&](const char* what) { throw ConfigError("key '" + k.name + "': " + what + ", got '" + v + "'"); };
    switch (k.type) {
    case V::integer: {
        long x;
        if (!parse_integer(v, x)) fail("expected an integer");
        break;
    }
    case V::real:
        try {
            if (!std::isfinite(parse_double(v))) fail("expected a finite number");
        } catch (const DomainError&) {
            fail("expected a number");
        }
        break;
    case V::real_list:
        try {
            for (auto part : split(v, ',')) parse_double(part);
        } catch (const DomainError&) {
            fail("expected a comma-separated list of numbers");
        }
        break;
    case V::flag:
        if (v != "0" && v != "1" && v != "true" && v != "false") fail("expected 0, 1, true or false");
        break;
    case V::text:
        if (v.empty()) fail("expected a non-empty value");
        break;
    }
}

} // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"simulate-fbs", "young-integral", "flow",       "linear-bsde", "nonlinear-bsde",
                                            "pde-fk",       "localization-error", "hurst-region", "tower-rule", "exit-decay"};
    return k;
}

const std::vector<KeySpec>& key_schema(const std::string& kind) {
    const auto it = schemas().find(kind);
    if (it == schemas().end()) throw ConfigError("unknown experiment kind '" + kind + "'");
    return it->second;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(std::string_view(t).substr(0, eq)), value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& kind, const std::string& file_text,
                                         const std::vector<std::pair<std::string, std::string>>& overrides) {
    ExperimentConfig c;
    c.kind = kind;
    for (const auto& k : key_schema(kind)) c.values_[k.name] = k.default_value;
    for (const auto& [k, v] : parse_key_values(file_text)) c.set(k, v);
    for (const auto& [k, v] : overrides) c.set(k, v);
    return c;
}

const KeySpec& ExperimentConfig::spec(const std::string& key) const {
    for (const auto& k : key_schema(kind))
        if (k.name == key) return k;
    throw ConfigError("unknown key '" + key + "' for " + kind);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const auto& k = spec(key);
    const std::string v = trim(value);
    check_value(k, v);
    values_[key] = v;
}

long ExperimentConfig::integer(const std::string& key) const {
    long x = 0;
    parse_integer(values_.at(spec(key).name), x);
    return x;
}

std::size_t ExperimentConfig::count(const std::string& key) const {
    const long x = integer(key);
    if (x < 0) throw ConfigError("key '" + key + "' must be nonnegative");
    return static_cast<std::size_t>(x);
}

double ExperimentConfig::real(const std::string& key) const { return parse_double(values_.at(spec(key).name)); }

const std::string& ExperimentConfig::text(const std::string& key) const { return values_.at(spec(key).name); }

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (auto part : split(values_.at(spec(key).name), ',')) out.push_back(parse_double(part));
    return out;
}

bool ExperimentConfig::flag(const std::string& key) const {
    const auto& v = values_.at(spec(key).name);
    return v == "1" || v == "true";
}

std::uint64_t ExperimentConfig::seed() const {
    const long s = integer("seed");
    if (s < 0) throw ConfigError("seed must be nonnegative");
    return static_cast<std::uint64_t>(s);
}

std::size_t ExperimentConfig::workers() const {
    const std::size_t w = count("workers");
    return w == 0 ? default_workers() : w;
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    os << "kind = " << kind << '\n';
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

} // namespace ybsde
