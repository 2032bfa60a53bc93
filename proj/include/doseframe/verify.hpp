#pragma once

// Executable equivalence checks between the design rules and the Bayes
// rule of the interval framework.

#include "doseframe/designs.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace doseframe {

struct VerifyOptions {
    /// Supplies p_T, eps1, eps2, the BOIN atoms (if any), skeleton settings
    /// and sigma2. The design field is ignored.
    DesignConfig base;
    int max_n = 30;
    int loss_max_n = 12;
    int loss_grid = 200000;
    int intcrm_histories = 50;
    int riemann_points = 100000;
    std::size_t intcrm_doses = 5;
    std::uint64_t seed = 20240601;
    /// Added to the BOIN escalation boundary on the threshold side only;
    /// a nonzero value must make the BOIN check fail.
    double perturb_lambda1 = 0.0;
};

struct CheckResult {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    std::size_t mismatches = 0;
    std::string counterexample; ///< first failing case, empty when passed
    double seconds = 0.0;
};

CheckResult check_mtpi_bayes(const VerifyOptions& opt);
CheckResult check_boin_bayes(const VerifyOptions& opt);
CheckResult check_ccd_bayes(const VerifyOptions& opt);
CheckResult check_mtpi2_map(const VerifyOptions& opt);
CheckResult check_bayes_rule_loss(const VerifyOptions& opt);
CheckResult check_intcrm_oracle(const VerifyOptions& opt);
CheckResult check_theta_intervals(const VerifyOptions& opt);

/// Every check above, in a fixed order.
std::vector<CheckResult> run_verification(const VerifyOptions& opt);

bool all_passed(const std::vector<CheckResult>& results);

/// One line per check: name, PASS/FAIL, cases, mismatches and the first
/// counterexample. Timings are left out so the file is byte-stable.
void write_certificate(std::ostream& os, const std::vector<CheckResult>& results);

// Oracles, exposed for tests.

/// Posterior expected 0-1 loss by explicit enumeration on a midpoint grid
/// of the hierarchical prior.
struct LossGrid {
    std::vector<double> log_x;
    std::vector<double> log_1mx;
    std::vector<double> prior_density;
    std::vector<std::vector<std::uint8_t>> loss; ///< loss[a][i] = zero_one_loss(a, x_i)

    LossGrid(const IntervalPrior& prior, const PartitionSpec& partition, int grid);

    /// Actions whose expected loss lies within rel_tol of the minimum.
    std::vector<std::size_t> minimizers(const DoseState& state, double rel_tol = 1e-7) const;
};

/// Int-CRM evidence by a Riemann sum with `points` nodes over [A_1, A_{T+1}].
std::vector<double> riemann_intcrm_evidence(const CrmModel& model, std::span<const DoseState> tallies, int points);

} // namespace doseframe
