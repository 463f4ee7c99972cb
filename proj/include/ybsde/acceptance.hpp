#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ybsde {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;   ///< one line, human readable
    std::string csv;      ///< deterministic numerical body
    double seconds = 0.0;
};

struct AcceptanceOptions {
    /// "" runs every criterion, "fast" the sub-minute subset, otherwise a
    /// comma-separated list of criterion numbers.
    std::string selector;
    /// Overrides of the pinned tolerances, keyed as in default_tolerances().
    std::map<std::string, double> tolerances;
    std::uint64_t seed = 20240601;
    std::size_t workers = 1;
    /// Worker count of the rerun that criterion 12 compares against.
    std::size_t alternate_workers = 3;
};

/// Pinned tolerances and thresholds per criterion ("c<k>.<name>").
const std::map<std::string, double>& default_tolerances();

/// Criterion numbers for a selector; throws ConfigError on unknown input.
std::vector<int> select_criteria(const std::string& selector);

/// Runs one of criteria 1 to 11 with the given worker count.
CriterionResult run_criterion(int id, const AcceptanceOptions& options, std::size_t workers);

/// Runs the selected criteria in order. `on_result` sees each result as it
/// completes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// `criterion,name,status,seconds,detail` with one row per result.
std::string acceptance_report_csv(const std::vector<CriterionResult>& results);

/// One `[PASS] C<k> name: detail` line.
std::string format_result_line(const CriterionResult& r);

} // namespace ybsde
