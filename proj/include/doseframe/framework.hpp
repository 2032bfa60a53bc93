#pragma once

// Generic interval decision framework: a partition of the parameter space
// into models, a hierarchical prior over (model, parameter), the 0-1 loss
// over interval membership and the Bayes rule that minimizes posterior
// expected loss. Every interval design is a configuration of this.

#include "doseframe/numerics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace doseframe {

/// Up-and-down dosing move relative to the current dose.
enum class Move : std::uint8_t { Escalate, Stay, DeEscalate };

char move_tag(Move m);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    bool lo_closed = true;
    bool hi_closed = true;

    double length() const { return hi - lo; }
    bool contains(double x) const;
};

/// Ordered, contiguous, disjoint intervals covering [front.lo, back.hi].
/// Each interval optionally carries the up-and-down move it stands for.
class PartitionSpec {
public:
    PartitionSpec() = default;

    /// Validates contiguity and endpoint ownership; labels may be empty
    /// (index-only action space) or one per interval.
    PartitionSpec(std::vector<Interval> intervals, std::vector<Move> labels = {});

    std::size_t size() const { return intervals_.size(); }
    const Interval& interval(std::size_t k) const { return intervals_.at(k); }
    const std::vector<Interval>& intervals() const { return intervals_; }
    bool has_labels() const { return !labels_.empty(); }
    Move label(std::size_t k) const { return labels_.at(k); }

    double lower() const { return intervals_.front().lo; }
    double upper() const { return intervals_.back().hi; }

    /// Index of the unique interval containing x; nullopt outside the space.
    std::optional<std::size_t> locate(double x) const;

private:
    std::vector<Interval> intervals_;
    std::vector<Move> labels_;
};

/// The three-interval E/S/D partition [0, lo] | (lo, hi) | [hi, 1].
PartitionSpec three_interval_partition(double stay_lo, double stay_hi);

struct TruncatedBeta {
    BetaParams shape;
};
struct PointMass {
    std::vector<double> atoms;
};
struct TruncatedNormal {
    double sigma = 1.0;
};

/// pi(x | m = k) proportional to g(x) restricted to I_k, together with the
/// model prior pi(m = k).
struct IntervalPrior {
    std::variant<TruncatedBeta, PointMass, TruncatedNormal> kind;
    std::vector<double> model_weights; ///< empty means uniform 1/K

    /// Throws std::invalid_argument if the prior is inconsistent with the
    /// partition (atom outside its interval, weights not summing to 1, ...).
    void validate(const PartitionSpec& partition) const;

    double weight(std::size_t k, std::size_t K) const;
};

/// Per-dose tally: n patients treated, y of them with a DLT.
struct DoseState {
    int n = 0;
    int y = 0;

    DoseState() = default;
    DoseState(int treated, int dlts);

    friend bool operator==(const DoseState&, const DoseState&) = default;
};

/// Result of the Bayes rule: the winning model index and, when the
/// partition is labelled, its up-and-down move.
struct Action {
    std::size_t model = 0;
    std::optional<Move> move;

    friend bool operator==(const Action&, const Action&) = default;
};

/// Log-likelihood of the data as a function of the model parameter.
using LogLikelihood = std::function<double(double)>;

/// Binomial log-likelihood y log p + (n - y) log(1 - p), without the
/// binomial coefficient.
double binomial_log_likelihood(const DoseState& s, double p);

/// Marginal likelihood of the data under model k:
///   integral of L(x) pi(x | m = k) dx.
/// Beta priors use exact incomplete-beta differences and point masses
/// evaluate L at the atom; only the normal kind uses quadrature.
double model_evidence(std::size_t k, const IntervalPrior& prior, const PartitionSpec& partition,
                      const DoseState& state);

/// Same for an arbitrary likelihood. The likelihood is integrated as
/// exp(loglik(x) - log_shift); callers pass a shift near the maximum of
/// loglik to avoid underflow (the argmax is unaffected).
double model_evidence(std::size_t k, const IntervalPrior& prior, const PartitionSpec& partition,
                      const LogLikelihood& loglik, double log_shift = 0.0,
                      const Quadrature& q = {});

/// Relative tolerance under which two model scores count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Index maximizing scores. Scores within kTieTolerance (relative) of the
/// maximum tie; ties go to the preferred index given by preference, which
/// lists candidate indices from most to least preferred.
std::size_t argmax_with_preference(const std::vector<double>& scores,
                                   const std::vector<std::size_t>& preference);

/// Tie preference used by the Bayes rule for a partition. For E/S/D labels
/// the outer intervals win over Stay, with DeEscalate first; for
/// index-only partitions higher index wins.
std::vector<std::size_t> tie_preference(const PartitionSpec& partition);

/// Posterior model probabilities Pr(m = k | data) for all k.
std::vector<double> model_posterior(const IntervalPrior& prior, const PartitionSpec& partition,
                                    const DoseState& state);

/// Bayes rule under the 0-1 loss: the model with maximal posterior
/// probability.
Action bayes_decide(const IntervalPrior& prior, const PartitionSpec& partition, const DoseState& state);

/// 0-1 loss: 0 iff x lies in the interval of action a.
int zero_one_loss(const Action& a, double x, const PartitionSpec& partition);

/// 0-1 loss for a move on a labelled partition: 0 iff x lies in one of the
/// intervals carrying that move.
int zero_one_loss(Move m, double x, const PartitionSpec& partition);

} // namespace doseframe
