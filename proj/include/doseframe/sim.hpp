#pragma once

// Toxicity scenarios, Monte Carlo replication and operating
// characteristics.

#include "doseframe/trial.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace doseframe {

struct Scenario {
    std::vector<double> probs;
    std::optional<std::size_t> mtd; ///< 0-based; none when dose 1 is above the EI
    std::string label;
};

/// Dose whose probability is closest to target, or none when the lowest
/// dose is above the equivalence interval. Equidistant doses go to the
/// lower one, except that on a plateau below target the highest dose wins.
std::optional<std::size_t> scenario_mtd(std::span<const double> probs, double target, const Interval& ei);

/// Validates monotonicity and range, then fills in the MTD.
Scenario make_scenario(std::vector<double> probs, double target, const Interval& ei, std::string label = {});

/// Open equivalence interval (p_T - eps1, p_T + eps2) of a design.
Interval equivalence_interval(const DesignConfig& cfg);

/// Optional no-MTD categories for random scenarios.
struct ScenarioSupport {
    bool none_above = false; ///< lowest dose above the EI (MTD none)
    bool none_below = false; ///< every dose below the EI (MTD = T)
};

/// Surrogate random scenario. The MTD position is uniform over {1..T} plus
/// the enabled categories of support; the label records it as "pos<k>",
/// "none-above" or "none-below". The MTD's probability is uniform in the
/// EI. Doses below it are drawn one at a time, each uniform between 0 and
/// its upper neighbour (the first one below the EI's lower end); doses above
/// it are sorted uniforms on [EI upper end, 1]. The MTD is therefore the
/// only dose in the EI.
Scenario random_scenario(std::size_t T, double target, const Interval& ei, Stream& stream,
                         const ScenarioSupport& support = {});

/// n scenarios with dose counts cycling through dose_counts.
std::vector<Scenario> random_scenarios(std::size_t n, std::span<const std::size_t> dose_counts, double target,
                                       const Interval& ei, std::uint64_t seed, const ScenarioSupport& support = {});

/// The 15 curated scenarios (5 each for T = 4, 5, 6).
std::vector<Scenario> fixed_scenarios(double target = 0.3, const Interval& ei = {0.25, 0.35, false, false});

/// Scenario records: "T,p_1,...,p_T[,label]" per line; blank lines and
/// lines starting with '#' are ignored. Errors carry the line number.
std::vector<Scenario> parse_scenarios(std::istream& is, double target, const Interval& ei);
void write_scenarios(std::ostream& os, std::span<const Scenario> scenarios);

/// Text of the bundled fixed-scenario file.
std::string_view fixed_scenario_text();

struct ScenarioMetrics {
    double correct_sel = 0.0;
    double sel_over = 0.0;
    double pat_at_mtd = 0.0;
    double pat_over = 0.0;
    double tox = 0.0;
    double none_sel = 0.0;
};

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

struct OperatingCharacteristics {
    MeanSd correct_sel;
    MeanSd sel_over;
    MeanSd pat_at_mtd;
    MeanSd pat_over;
    MeanSd tox;
    MeanSd none_sel;
};

inline constexpr std::array<std::string_view, 6> kMetricNames = {"correct_sel", "sel_over", "pat_at_mtd",
                                                                  "pat_over",    "tox",      "none_sel"};

std::array<double, 6> metric_values(const ScenarioMetrics& m);
std::array<MeanSd, 6> metric_values(const OperatingCharacteristics& oc);

struct SimSettings {
    int max_n = 30;
    int cohort_size = 3;
    std::size_t start_dose = 0;
    int replicates = 1000;
    std::uint64_t seed = 20240601;
    unsigned workers = 1;
};

struct DesignResult {
    std::string name;
    DesignConfig design;
    std::vector<ScenarioMetrics> per_scenario;
    OperatingCharacteristics summary;
};

/// Runs every design on every scenario. Replicate r of scenario s uses the
/// stream derived from (seed, s, r) for every design, so designs are
/// compared on common random numbers. Results do not depend on the worker
/// count.
std::vector<DesignResult> evaluate(std::span<const DesignConfig> designs, std::span<const Scenario> scenarios,
                                   const SimSettings& settings);

OperatingCharacteristics summarize(std::span<const ScenarioMetrics> per_scenario);

struct TrajectoryAgreement {
    std::size_t trials = 0;
    std::size_t identical = 0;
};

/// Runs two designs on the same streams and counts trials whose cohort
/// logs and selected MTD coincide.
TrajectoryAgreement compare_trajectories(const DesignConfig& a, const DesignConfig& b,
                                         std::span<const Scenario> scenarios, const SimSettings& settings);

/// design,metric,mean,sd
void write_summary_csv(std::ostream& os, std::span<const DesignResult> results);
/// Aligned text version of the summary (metric rows, design columns).
void write_summary_txt(std::ostream& os, std::span<const DesignResult> results);
/// design,scenario,label,T,metric,value
void write_per_scenario_csv(std::ostream& os, std::span<const DesignResult> results,
                            std::span<const Scenario> scenarios);

} // namespace doseframe
