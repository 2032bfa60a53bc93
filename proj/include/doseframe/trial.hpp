#pragma once

// Sequential cohort trial: assignment, safety rules, termination and MTD
// selection, shared by every design.

#include "doseframe/designs.hpp"
#include "doseframe/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace doseframe {

struct TrialSpec {
    DesignConfig design;
    std::size_t doses = 5;     ///< T
    int max_n = 30;
    int cohort_size = 3;
    std::size_t start_dose = 0; ///< 0-based

    void validate() const;
};

enum class StopReason : std::uint8_t { None, MaxSampleSize, Safety };

/// What happened after a cohort: a move, de-escalation with exclusion of
/// the current and higher doses, or an early stop.
enum class Step : std::uint8_t { Escalate, Stay, DeEscalate, DeEscalateExclude, Stop };

std::string_view step_tag(Step s);

struct CohortRecord {
    std::size_t dose = 0;
    int size = 0;
    int dlts = 0;
    Step step = Step::Stay;
    std::size_t next = 0;         ///< dose for the following cohort
    std::size_t lowest_excluded;  ///< at assignment time; == T when none
};

struct TrialState {
    std::vector<DoseState> doses;
    std::size_t current = 0;
    std::vector<bool> excluded;
    StopReason stopped = StopReason::None;
    std::vector<CohortRecord> cohort_log;
    /// Model recommendation after the latest cohort (CRM family), clamped
    /// to the dose range.
    std::optional<std::size_t> recommendation;

    TrialState() = default;
    TrialState(std::size_t T, std::size_t start);

    int total_n() const;
    std::size_t lowest_excluded() const;
};

/// Pr(p > p_T | data) under the Be(1,1) prior: 1 - I_{p_T}(1+y, 1+n-y).
double excess_toxicity_prob(const DoseState& state, double target);

/// A design prepared for a fixed dose count, with memoized decisions. Not
/// thread-safe; give each worker its own copy.
class DecisionEngine {
public:
    DecisionEngine(const DesignConfig& cfg, std::size_t doses);

    const DesignConfig& config() const { return cfg_; }
    std::size_t doses() const { return doses_; }

    /// Move of a tally design for one dose's tally (n >= 1).
    Move tally_move(const DoseState& state);

    /// Dose the design would move to, before safety rules. May lie outside
    /// 0..T-1 (escalation from the top dose, de-escalation from dose 1).
    long raw_target(std::span<const DoseState> tallies, std::size_t current);

private:
    DesignConfig cfg_;
    std::size_t doses_;
    BoinThresholds boin_{};
    PartitionSpec fine_;
    std::optional<CrmModel> crm_;
    std::unordered_map<std::uint64_t, Move> tally_cache_;
    std::unordered_map<std::string, std::size_t> model_cache_;
};

/// Applies the safety rules to a raw target after the latest cohort, in
/// order: (1) exclusion / early stop when excess toxicity exceeds the
/// threshold, (2) no skipping upward, (3) coherence, (4) clamping to the
/// available doses. Updates exclusions and the stop flag; returns the next
/// dose and the step taken.
std::pair<std::size_t, Step> apply_safety(long raw_target, TrialState& state, const TrialSpec& spec);

struct TrialResult {
    TrialState state;
    std::optional<std::size_t> mtd; ///< 0-based; none when no dose is selected
};

/// Runs one trial against the true toxicity probabilities.
TrialResult run_trial(const TrialSpec& spec, std::span<const double> truth, Stream& stream, DecisionEngine& engine);
TrialResult run_trial(const TrialSpec& spec, std::span<const double> truth, Stream& stream);

/// End-of-trial MTD. CRM family: the final model recommendation restricted
/// to non-excluded doses. Other designs: isotonic posterior means over
/// treated, non-excluded doses; closest to p_T wins.
std::optional<std::size_t> select_mtd(const TrialState& state, const TrialSpec& spec);

/// Audit record, one cohort per line: dose,size,dlts,step,next (1-based
/// doses; next is "-" after a stop).
void write_trajectory(std::ostream& os, const TrialState& state);
std::string trajectory_string(const TrialState& state);

} // namespace doseframe
