#pragma once

// Concrete dose-finding rules. mTPI, mTPI-2, BOIN, CCD and Int-CRM are
// configurations of the interval framework; CRM and i3+3 are benchmark
// rules implemented directly.

#include "doseframe/framework.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace doseframe {

enum class DesignKind { mTPI, mTPI2, BOIN, CCD, IntCRM, CRM, i3plus3 };

std::string_view design_name(DesignKind d);

/// Accepts the canonical names plus a few spellings ("mtpi-2", "i3+3", ...).
/// Throws std::invalid_argument for unknown names.
DesignKind parse_design(std::string_view name);

/// True for designs whose decision depends only on the current dose's
/// (n, y) tally.
bool is_tally_design(DesignKind d);

/// All hyperparameters of a design. Invalid combinations are rejected by
/// validate(), whose messages start with the offending field name.
struct DesignConfig {
    DesignKind design = DesignKind::mTPI;
    double target = 0.3; ///< p_T
    double eps1 = 0.05;
    double eps2 = 0.05;

    // BOIN prior atoms. When absent the escalation boundaries are the
    // equivalence-interval end points and the atoms are recovered through
    // the inverse of the boundary map.
    std::optional<double> boin_phi_e;
    std::optional<double> boin_phi_d;

    // CRM family.
    std::vector<double> skeleton;   ///< empty: generated per dose count
    double delta = 0.05;            ///< skeleton indifference half-width
    std::optional<int> prior_mtd;   ///< 1-based; default ceil(T / 2)
    double sigma2 = 1.34;           ///< variance of the normal prior on theta

    double safety_threshold = 0.95;

    void validate() const;

    double stay_lo() const { return target - eps1; }
    double stay_hi() const { return target + eps2; }
};

// ---------------------------------------------------------------------------
// mTPI / mTPI-2

/// Unit probability mass: posterior Be(y+1, n-y+1) mass of the interval
/// divided by its length.
double upm(const Interval& interval, const DoseState& state);

Move mtpi_decide(const DesignConfig& cfg, const DoseState& state);

/// Truncated Be(1,1) prior on the three-interval partition. Its Bayes rule
/// is the mTPI rule.
IntervalPrior mtpi_prior();
PartitionSpec mtpi_partition(const DesignConfig& cfg);

/// Equivalence interval plus equal-width subintervals on either side; the
/// outermost subinterval at each end absorbs the remainder.
PartitionSpec mtpi2_partition(const DesignConfig& cfg);

/// Index of the fine-partition interval with the largest UPM.
std::size_t mtpi2_winning_interval(const PartitionSpec& fine, const DoseState& state);

Move mtpi2_decide(const DesignConfig& cfg, const DoseState& state);

// ---------------------------------------------------------------------------
// BOIN / CCD

/// Boundary map
///   xi(phi_i; phi_j) = log((1-phi_i)/(1-phi_j)) / log(phi_j(1-phi_i) / (phi_i(1-phi_j))).
/// Throws std::domain_error when phi_i == phi_j or either is outside (0,1).
double boin_xi(double phi_i, double phi_j);

/// Solves xi(phi; target) = boundary for phi on the same side of target as
/// boundary, to full double precision.
double boin_xi_inverse(double boundary, double target);

struct BoinThresholds {
    double lambda1; ///< escalate when y/n <= lambda1
    double lambda2; ///< de-escalate when y/n >= lambda2
    double phi_e;
    double phi_d;
};

BoinThresholds boin_thresholds(const DesignConfig& cfg);

/// Threshold rule on p-hat = y/n. Requires n >= 1.
Move threshold_decide(double lambda1, double lambda2, const DoseState& state);

Move boin_decide(const DesignConfig& cfg, const DoseState& state);
Move ccd_decide(const DesignConfig& cfg, const DoseState& state);

/// Point-mass prior at (phi_e, target, phi_d) on the three-interval
/// partition of cfg. Rejects atoms outside their intervals.
IntervalPrior point_mass_prior(const DesignConfig& cfg, double phi_e, double phi_d);

/// Atoms whose Bayes rule reproduces CCD: xi^{-1} of the interval ends.
std::pair<double, double> ccd_atoms(const DesignConfig& cfg);

// ---------------------------------------------------------------------------
// i3+3

Move i3p3_decide(const DesignConfig& cfg, const DoseState& state);

// ---------------------------------------------------------------------------
// CRM family: power model F(d, theta) = q_d^exp(theta)

inline double power_model(double q, double theta) { return std::pow(q, std::exp(theta)); }

/// Indifference-interval skeleton with half-width delta, anchored at
/// q[prior_mtd] = target (prior_mtd 0-based).
std::vector<double> lee_cheung_skeleton(std::size_t doses, double target, double delta, std::size_t prior_mtd);

/// Skeleton of cfg for the given dose count (explicit or generated).
std::vector<double> resolve_skeleton(const DesignConfig& cfg, std::size_t doses);

/// Boundaries psi_1 = A_1 < psi_2 < ... < psi_{T+1} = A_{T+1} of the theta
/// intervals on which each dose is the one closest to target.
struct ThetaIntervals {
    std::vector<double> psi;

    std::size_t doses() const { return psi.size() - 1; }
    PartitionSpec partition() const;
};

/// Root of q_lo^exp(t) + q_hi^exp(t) = 2 target on [lo, hi].
double theta_boundary(double q_lo, double q_hi, double target, double lo, double hi);

ThetaIntervals solve_theta_intervals(std::span<const double> skeleton, double target);
ThetaIntervals solve_theta_intervals(const DesignConfig& cfg, std::size_t doses);

/// One treated patient: 0-based dose and DLT flag.
struct PatientOutcome {
    std::size_t dose = 0;
    bool dlt = false;
};

/// Per-dose tallies summarizing a history; the power-model likelihood
/// depends on the data only through them.
std::vector<DoseState> tally_history(std::span<const PatientOutcome> history, std::size_t doses);

/// Log-likelihood of the tallies under the power model at theta.
double power_log_likelihood(std::span<const double> skeleton, std::span<const DoseState> tallies, double theta);

/// Prepared Int-CRM / CRM model for a fixed dose count.
struct CrmModel {
    std::vector<double> skeleton;
    ThetaIntervals theta;
    double sigma = 1.0;
    double target = 0.3;
    Quadrature quadrature{};

    static CrmModel make(const DesignConfig& cfg, std::size_t doses);
};

/// Per-dose evidence (1/Z_k) integral over I_k of L(theta) phi(theta),
/// with L rescaled by its maximum on a grid over [A_1, A_{T+1}].
std::vector<double> intcrm_evidence(const CrmModel& model, std::span<const DoseState> tallies);

/// Int-CRM recommendation (0-based dose). With no data every model ties
/// and start_dose is returned; other ties go to the lower dose.
std::size_t intcrm_decide(const CrmModel& model, std::span<const DoseState> tallies, std::size_t start_dose = 0);
std::size_t intcrm_decide(const DesignConfig& cfg, std::size_t doses, std::span<const PatientOutcome> history,
                          std::size_t start_dose = 0);

/// Posterior mean of theta under the unrestricted N(0, sigma^2) prior.
double crm_theta_mean(const CrmModel& model, std::span<const DoseState> tallies);

/// Plug-in toxicity estimates q_d^exp(E[theta | data]).
std::vector<double> crm_toxicity_estimates(const CrmModel& model, std::span<const DoseState> tallies);

/// CRM recommendation: dose whose estimated toxicity is closest to target
/// (ties to the lower dose).
std::size_t crm_decide(const CrmModel& model, std::span<const DoseState> tallies);
std::size_t crm_decide(const DesignConfig& cfg, std::size_t doses, std::span<const PatientOutcome> history);

// ---------------------------------------------------------------------------

/// Decision of any tally design (mTPI, mTPI-2, BOIN, CCD, i3+3) for one
/// dose's tally.
Move tally_decide(const DesignConfig& cfg, const DoseState& state);

} // namespace doseframe
