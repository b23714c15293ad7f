#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcits/config.hpp"

namespace dcits {

// One expected-vs-observed comparison. `criterion` ties the check to a
// numbered acceptance criterion (0 for supplementary checks).
struct Check {
    int criterion = 0;
    std::string name;
    std::string expected;
    std::string tolerance;
    std::string observed;
    bool passed = false;
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;
    std::string error;  // set when the suite could not run to completion
    double seconds = 0.0;

    bool passed() const;
};

struct ReproduceOptions {
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::optional<std::filesystem::path> out_dir;  // run artifacts per suite
    std::ostream* log = nullptr;                   // progress lines
};

// var2, dataset1..dataset8, cubic, window-search.
std::vector<std::string> suite_names();
bool is_suite(std::string_view name);

// Experiment configuration a suite trains with.
ExperimentConfig suite_config(std::string_view suite, std::uint64_t seed);

// Runs one suite; `all` is handled by the caller. Throws ConfigError for an
// unknown name. Training failures are reported in SuiteReport::error.
SuiteReport run_suite(std::string_view suite, const ReproduceOptions& options);

// Suites that carry checks for acceptance criterion k (1..10).
std::vector<std::string> suites_for_criterion(int criterion);

// "PASS|FAIL  name  expected ...  tolerance ...  observed ..." per check.
void print_report(const SuiteReport& report, std::ostream& out);

}  // namespace dcits
