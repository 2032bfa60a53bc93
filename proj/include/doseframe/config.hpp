#pragma once

// Run configuration for the command-line tool, read from JSON.
//
//   {
//     "designs": [ {"design": "mTPI", "p_T": 0.3, "eps1": 0.05, "eps2": 0.05}, ... ],
//     "trial":   {"doses": 5, "max_n": 30, "cohort_size": 3, "start_dose": 1},
//     "sim":     {"scenarios": "random", "n_random": 1000, "dose_counts": [4, 5, 6],
//                 "replicates": 1000, "seed": 20240601, "workers": 4},
//     "verify":  {"design": {...}, "perturb_lambda1": 0.0},
//     "output":  {"dir": "out", "format": "csv"}
//   }
//
// Every section and key is optional. Unknown keys are rejected, and every
// error message starts with the path of the offending field.

#include "doseframe/sim.hpp"
#include "doseframe/tables.hpp"
#include "doseframe/verify.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace doseframe {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NamedDesign {
    std::string name; ///< design name, "#2", "#3", ... appended to repeats
    DesignConfig config;
};

struct SimSection {
    /// "fixed", "random", or a path to a scenario file.
    std::string scenarios = "random";
    std::size_t n_random = 1000;
    std::vector<std::size_t> dose_counts{4, 5, 6};
    ScenarioSupport support;
    int replicates = 1000;
    std::uint64_t seed = kDefaultSeed;
    std::optional<unsigned> workers;
};

struct RunConfig {
    std::vector<NamedDesign> designs;
    TrialSpec trial; ///< design field unused; doses used by decide
    SimSection sim;
    VerifyOptions verify;
    std::string out_dir = "out";
    TableFormat format = TableFormat::Csv;
};

/// Every design at its defaults (p_T = 0.3, eps = 0.05), in the order
/// mTPI, mTPI-2, BOIN, CCD, Int-CRM, CRM, i3+3.
std::vector<NamedDesign> default_designs();

/// Parses JSON text. With no "designs" key the seven defaults are used.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Full-range unsigned 64-bit parse; throws ConfigError naming `what`.
std::uint64_t parse_seed(const std::string& text, const std::string& what);

} // namespace doseframe
