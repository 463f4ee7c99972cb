#include "ybsde/acceptance.hpp"
#include "ybsde/errors.hpp"
#include "ybsde/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace {

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ybsde::ConfigError(std::string(flag) + " expects KEY=VALUE, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ybsde::ConfigError("cannot read config file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct KindOptions {
    std::string config_path;
    std::optional<std::string> seed, out, workers;
    std::vector<std::string> overrides;
    std::map<std::string, std::string> keys;
};

struct AcceptanceArgs {
    std::string select;
    std::vector<std::string> tolerances;
    std::uint64_t seed = ybsde::AcceptanceOptions{}.seed;
    std::size_t workers = 1;
    std::size_t alternate_workers = ybsde::AcceptanceOptions{}.alternate_workers;
    std::string report;
};

int run_kind(const std::string& kind, const KindOptions& o) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : o.overrides) overrides.push_back(split_assignment(s, "--override"));
    for (const auto& [k, v] : o.keys) overrides.emplace_back(k, v);
    if (o.seed) overrides.emplace_back("seed", *o.seed);
    if (o.workers) overrides.emplace_back("workers", *o.workers);
    if (o.out) overrides.emplace_back("out", *o.out);
    const std::string text = o.config_path.empty() ? std::string() : read_text(o.config_path);
    return ybsde::run(ybsde::ExperimentConfig::parse(kind, text, overrides), std::cerr);
}

int run_acceptance(const AcceptanceArgs& a) {
    ybsde::AcceptanceOptions opts;
    opts.selector = a.select;
    opts.seed = a.seed;
    opts.workers = a.workers;
    opts.alternate_workers = a.alternate_workers;
    for (const auto& s : a.tolerances) {
        const auto [k, v] = split_assignment(s, "--tolerance");
        try {
            opts.tolerances[k] = std::stod(v);
        } catch (const std::exception&) {
            throw ybsde::ConfigError("--tolerance " + k + ": not a number");
        }
    }
    const auto results = ybsde::run_acceptance(opts, [](const ybsde::CriterionResult& r) {
        std::cout << ybsde::format_result_line(r) << std::endl;
    });
    const std::string report = ybsde::acceptance_report_csv(results);
    if (!a.report.empty()) {
        std::ofstream f(a.report, std::ios::binary);
        if (!f) throw ybsde::ResourceError("cannot write " + a.report);
        f << report;
    } else {
        std::cout << report;
    }
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Young-driven BSDE and PDE experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ybsde::library_version());

    std::map<std::string, KindOptions> kind_options;
    for (const auto& kind : ybsde::experiment_kinds()) kind_options[kind];
    for (const auto& kind : ybsde::experiment_kinds()) {
        auto& o = kind_options[kind];
        auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->set_help_flag("--help", "print this help message and exit");
        sub->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "master seed (U64)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--workers", o.workers, "worker threads (default: YBSDE_WORKERS or 1)");
        sub->add_option("--override", o.overrides, "KEY=VALUE, repeatable")->take_all();
        for (const auto& k : ybsde::key_schema(kind)) {
            if (k.name == "seed" || k.name == "out" || k.name == "workers") continue;
            sub->add_option_function<std::string>(
                   "--" + k.name, [&o, name = k.name](const std::string& v) { o.keys[name] = v; },
                   k.help + " [default " + k.default_value + "]")
                ->type_name("VALUE");
        }
        sub->callback([&o, kind] { throw CLI::RuntimeError(run_kind(kind, o)); });
    }

    AcceptanceArgs acc;
    auto* sub = app.add_subcommand("acceptance", "run the acceptance criteria");
    sub->add_option("--select", acc.select, "'' (all), 'fast', or criterion numbers such as 2,5,9");
    sub->add_option("--tolerance", acc.tolerances, "NAME=VALUE overriding a pinned tolerance, repeatable")->take_all();
    sub->add_option("--seed", acc.seed, "master seed");
    sub->add_option("--workers", acc.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--alt-workers", acc.alternate_workers, "worker threads of the determinism rerun")->check(CLI::PositiveNumber);
    sub->add_option("--report", acc.report, "write the pass/fail CSV here instead of stdout");
    sub->callback([&acc] { throw CLI::RuntimeError(run_acceptance(acc)); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::RuntimeError& e) {
        return e.get_exit_code();
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return ybsde::report_exception(std::make_exception_ptr(ybsde::ConfigError(e.what())), std::cerr);
    } catch (...) {
        return ybsde::report_exception(std::current_exception(), std::cerr);
    }
    return 0;
}
