#pragma once

#include "ybsde/bsde_solver.hpp"
#include "ybsde/diffusion.hpp"
#include "ybsde/drivers.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ybsde {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ValueType { integer, real, text, real_list, flag };

struct KeySpec {
    std::string name;
    ValueType type;
    std::string default_value;
    std::string help;
};

/// Experiment kinds accepted by run().
const std::vector<std::string>& experiment_kinds();

/// Keys accepted by `kind`, including the common keys seed, workers and out.
const std::vector<KeySpec>& key_schema(const std::string& kind);

class ExperimentConfig {
public:
    std::string kind;

    /// Validates `kind`, every key and every value type; fills defaults.
    /// Later sources win: file text, then overrides in order.
    static ExperimentConfig parse(const std::string& kind, const std::string& file_text,
                                  const std::vector<std::pair<std::string, std::string>>& overrides = {});

    void set(const std::string& key, const std::string& value);

    long integer(const std::string& key) const;
    std::size_t count(const std::string& key) const;  ///< integer >= 0
    double real(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    bool flag(const std::string& key) const;

    std::uint64_t seed() const;
    std::size_t workers() const;
    std::string out() const { return text("out"); }

    const std::map<std::string, std::string>& values() const { return values_; }
    /// `key = value` lines in key order.
    std::string echo() const;

private:
    const KeySpec& spec(const std::string& key) const;
    std::map<std::string, std::string> values_;
};

/// `key = value` lines; '#' starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

// ---------------------------------------------------------------------------
// Registry of named coefficients
// ---------------------------------------------------------------------------

struct RegistryParams {
    std::size_t dim = 1;
    double horizon = 1.0;
    double sigma = 1.0;       ///< brownian families
    double mu = 0.5;          ///< brownian-drift
    double theta = 1.0;       ///< ou-truncated mean reversion
    double clip = 2.0;        ///< ou-truncated state clip
    double c = 1.0;           ///< driver scale
    double rate = 0.1;        ///< f = rate * y
    double sheet_H0 = 0.8;
    double sheet_H = 0.7;
    std::size_t sheet_times = 9;
    std::size_t sheet_points = 9;
    double sheet_extent = 3.0;
    std::uint64_t seed = 1;
};

const std::vector<std::string>& diffusion_names();
const std::vector<std::string>& driver_names();
const std::vector<std::string>& girsanov_names();
const std::vector<std::string>& terminal_names();
const std::vector<std::string>& generator_names();     ///< f
const std::vector<std::string>& young_coefficient_names();  ///< g
const std::vector<std::string>& path_names();           ///< deterministic paths for young-integral / flow

DiffusionSpec make_diffusion(const std::string& name, const RegistryParams& p);
SpaceTimeDriver make_driver(const std::string& name, const RegistryParams& p);
GirsanovFn make_girsanov(const std::string& name, const RegistryParams& p);
std::function<double(std::span<const double>)> make_terminal(const std::string& name, const RegistryParams& p);
std::function<double(double, std::span<const double>, double, std::span<const double>)> make_generator(const std::string& name,
                                                                                                      const RegistryParams& p);
std::function<void(double, std::span<double>)> make_young_coefficient(const std::string& name, const RegistryParams& p);
std::function<double(double)> make_path(const std::string& name);

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

enum ExitStatus : int {
    exit_ok = 0,
    exit_config = 2,
    exit_precondition = 3,
    exit_numerical = 4,
    exit_not_converged = 5,
};

struct OutputFile {
    std::string name;  ///< relative to the output directory
    std::string body;
};

struct PhaseTiming {
    std::string name;
    double seconds = 0.0;
};

struct RunOutcome {
    int status = exit_ok;
    std::vector<OutputFile> files;
    std::vector<PhaseTiming> phases;
    std::vector<std::string> warnings;
};

/// Dispatches on config.kind and returns the CSV bodies without touching disk.
/// Precondition and numerical failures propagate as exceptions.
RunOutcome execute(const ExperimentConfig& config);

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

/// JSON manifest for an outcome that was written to `dir`.
std::string make_manifest(const ExperimentConfig& config, const RunOutcome& outcome,
                          std::chrono::system_clock::time_point started, std::chrono::system_clock::time_point finished);

/// execute() plus file output, manifest and error mapping. Errors are written
/// to `err` as one structured line; nothing is written on failure.
int run(const ExperimentConfig& config, std::ostream& err);

/// Maps an in-flight exception to an exit status and a structured line.
int report_exception(std::exception_ptr e, std::ostream& err);

std::string library_version();

} // namespace ybsde
