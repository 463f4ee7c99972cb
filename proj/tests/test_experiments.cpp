#include "doctest.h"

#include "ybsde/acceptance.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ybsde;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ybsde_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

ExperimentConfig config(const std::string& kind, std::vector<std::pair<std::string, std::string>> overrides,
                        const std::string& text = "") {
    return ExperimentConfig::parse(kind, text, overrides);
}

} // namespace

TEST_CASE("config text: comments, blanks and precedence") {
    const auto kv = parse_key_values("# header\n\nd = 2   # trailing\n resolution=11\n");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0] == std::pair<std::string, std::string>{"d", "2"});
    CHECK(kv[1] == std::pair<std::string, std::string>{"resolution", "11"});
    CHECK_THROWS_AS(parse_key_values("novalue\n"), ConfigError);

    const auto c = config("hurst-region", {{"d", "3"}}, "d = 2\nresolution = 11\n");
    CHECK(c.integer("d") == 3);
    CHECK(c.integer("resolution") == 11);
    CHECK(c.seed() == 20240601u);
    CHECK(c.echo().find("resolution = 11\n") != std::string::npos);
}

TEST_CASE("config rejects unknown keys, kinds and ill-typed values") {
    CHECK_THROWS_AS(config("hurst-region", {{"radius", "2"}}), ConfigError);
    CHECK_THROWS_AS(config("no-such-kind", {}), ConfigError);
    CHECK_THROWS_AS(config("hurst-region", {{"d", "1.5"}}), ConfigError);
    CHECK_THROWS_AS(config("nonlinear-bsde", {{"radii", "2,x"}}), ConfigError);
    CHECK_THROWS_AS(config("flow", {{"richardson", "maybe"}}), ConfigError);
    CHECK_THROWS_AS(config("linear-bsde", {{"sigma", "nan"}}), ConfigError);
    CHECK_NOTHROW(config("flow", {{"richardson", "true"}}));
}

TEST_CASE("every kind has a schema with the common keys and runs its registry defaults") {
    for (const auto& kind : experiment_kinds()) {
        const auto& keys = key_schema(kind);
        for (const char* common : {"seed", "workers", "out"}) {
            bool found = false;
            for (const auto& k : keys) found = found || k.name == common;
            CHECK_MESSAGE(found, kind, " lacks ", common);
        }
        CHECK_NOTHROW(config(kind, {}));
    }
}

TEST_CASE("registry names resolve and unknown names are config errors") {
    RegistryParams p;
    for (const auto& n : diffusion_names()) CHECK_NOTHROW(make_diffusion(n, p).validate());
    for (const auto& n : driver_names()) CHECK(make_driver(n, p).channels() == 1);
    for (const auto& n : terminal_names()) CHECK(static_cast<bool>(make_terminal(n, p)));
    for (const auto& n : path_names()) CHECK(static_cast<bool>(make_path(n)));
    for (const auto& n : girsanov_names()) CHECK_NOTHROW(make_girsanov(n, p));
    for (const auto& n : generator_names()) CHECK_NOTHROW(make_generator(n, p));
    for (const auto& n : young_coefficient_names()) CHECK_NOTHROW(make_young_coefficient(n, p));
    CHECK_THROWS_AS(make_diffusion("levy", p), ConfigError);
    CHECK_THROWS_AS(make_driver("nope", p), ConfigError);

    const double x[] = {0.0};
    CHECK(make_driver("linear-time", p).scalar(0.5, x) == doctest::Approx(0.5));
    CHECK(make_driver("zero", p).scalar(0.5, x) == 0.0);
    CHECK(make_driver("kink-cos", p).scalar(0.0, x) == 0.0);
}

TEST_CASE("hurst-region run writes the boolean grid and a valid manifest") {
    const auto dir = fresh_dir("hurst");
    std::ostringstream err;
    const int status = run(config("hurst-region", {{"d", "1"}, {"resolution", "101"}, {"out", dir.string()}}), err);
    REQUIRE(status == exit_ok);
    const std::string body = slurp(dir / "hurst_region.csv");
    std::istringstream is(body);
    std::string line;
    std::getline(is, line);
    CHECK(line == "H,H0,admissible");
    std::size_t rows = 0, admissible = 0;
    while (std::getline(is, line)) {
        ++rows;
        const auto c1 = line.find(','), c2 = line.rfind(',');
        const double H = std::stod(line.substr(0, c1)), H0 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        const bool flag = line.substr(c2 + 1) == "1";
        const bool expected = H > 0 && H < 1 && H0 > 0 && H0 < 1 && H0 + H / 2 > 1 && H < 2 * H0 - 1;
        CHECK(flag == expected);
        if (flag) {
            ++admissible;
            CHECK(H0 > 0.75);
        }
    }
    CHECK(rows == 101u * 101u);
    CHECK(admissible > 0);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["kind"] == "hurst-region");
    CHECK(manifest["status"] == 0);
    REQUIRE(manifest["files"].size() == 1);
    for (const auto& f : manifest["files"]) CHECK(f["sha256"] == sha256_hex(slurp(dir / f["name"].get<std::string>())));
    CHECK(manifest["config"]["resolution"] == "101");
}

TEST_CASE("precondition violations exit 3 and write nothing") {
    const auto dir = fresh_dir("precondition");
    std::ostringstream err;
    const int status = run(config("nonlinear-bsde", {{"radii", "0.5,2"}, {"x0", "1"}, {"out", dir.string()}}), err);
    CHECK(status == exit_precondition);
    CHECK_FALSE(fs::exists(dir));
    const auto line = nlohmann::json::parse(err.str());
    CHECK(line["status"] == 3);
    CHECK(line["error"] == "precondition");
}

TEST_CASE("exit statuses per error class") {
    std::ostringstream err;
    CHECK(report_exception(std::make_exception_ptr(ConfigError("x")), err) == exit_config);
    CHECK(report_exception(std::make_exception_ptr(ContractError("x")), err) == exit_precondition);
    CHECK(report_exception(std::make_exception_ptr(DomainError("x")), err) == exit_precondition);
    CHECK(report_exception(std::make_exception_ptr(NumericalError("x")), err) == exit_numerical);
    CHECK(report_exception(std::make_exception_ptr(ResourceError("x")), err) == exit_numerical);
    std::istringstream lines(err.str());
    std::string l;
    int n = 0;
    while (std::getline(lines, l)) {
        CHECK(nlohmann::json::accept(l));
        ++n;
    }
    CHECK(n == 5);
}

TEST_CASE("non-convergence writes outputs and exits 5") {
    const auto dir = fresh_dir("noconv");
    std::ostringstream err;
    const int status = run(config("young-integral", {{"max_levels", "2"}, {"abs_tol", "1e-14"}, {"rel_tol", "1e-14"},
                                                     {"steps", "8"}, {"out", dir.string()}}),
                           err);
    CHECK(status == exit_not_converged);
    CHECK(fs::exists(dir / "young_integral.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("replay gives byte-identical CSV bodies across worker counts") {
    const std::vector<std::pair<std::string, std::string>> base{
        {"samples", "3000"}, {"steps", "20"}, {"g", "tanh"}, {"f", "linear"}, {"radii", "2,3"}, {"seed", "77"}};
    auto a = base, b = base;
    a.emplace_back("workers", "1");
    b.emplace_back("workers", "3");
    const auto ra = execute(config("nonlinear-bsde", a));
    const auto rb = execute(config("nonlinear-bsde", b));
    REQUIRE(ra.files.size() == rb.files.size());
    for (std::size_t k = 0; k < ra.files.size(); ++k) {
        CHECK(ra.files[k].name == rb.files[k].name);
        CHECK(ra.files[k].body == rb.files[k].body);
    }

    const auto d1 = fresh_dir("replay1"), d2 = fresh_dir("replay2");
    std::ostringstream err;
    auto c1 = base, c2 = base;
    c1.emplace_back("out", d1.string());
    c2.emplace_back("out", d2.string());
    REQUIRE(run(config("nonlinear-bsde", c1), err) == exit_ok);
    REQUIRE(run(config("nonlinear-bsde", c2), err) == exit_ok);
    for (const auto& f : ra.files) CHECK(slurp(d1 / f.name) == slurp(d2 / f.name));
    auto m1 = nlohmann::json::parse(slurp(d1 / "manifest.json")), m2 = nlohmann::json::parse(slurp(d2 / "manifest.json"));
    CHECK(m1["files"] == m2["files"]);
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("acceptance selectors") {
    CHECK(select_criteria("").size() == 12);
    CHECK(select_criteria("fast") == std::vector<int>{1, 2, 3, 5});
    CHECK(select_criteria("5,2,5") == std::vector<int>{2, 5});
    CHECK_THROWS_AS(select_criteria("13"), ConfigError);
    CHECK_THROWS_AS(select_criteria("two"), ConfigError);
}

TEST_CASE("a corrupted tolerance fails only its own criterion") {
    AcceptanceOptions opts;
    opts.selector = "2,3,5";
    opts.tolerances["c2.tol"] = 1e-30;
    const auto results = run_acceptance(opts);
    REQUIRE(results.size() == 3);
    CHECK_FALSE(results[0].passed);
    CHECK(results[1].passed);
    CHECK(results[2].passed);
    opts.tolerances["c2.tolerance"] = 1.0;
    CHECK_THROWS_AS(run_acceptance(opts), ConfigError);
    CHECK(acceptance_report_csv(results).rfind("criterion,name,status,seconds,detail\n", 0) == 0);
}
