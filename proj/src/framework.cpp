#include "doseframe/framework.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace doseframe {

char move_tag(Move m)
{
    switch (m) {
    case Move::Escalate:
        return 'E';
    case Move::Stay:
        return 'S';
    case Move::DeEscalate:
        return 'D';
    }
    return '?';
}

bool Interval::contains(double x) const
{
    const bool above_lo = lo_closed ? x >= lo : x > lo;
    const bool below_hi = hi_closed ? x <= hi : x < hi;
    return above_lo && below_hi;
}

PartitionSpec::PartitionSpec(std::vector<Interval> intervals, std::vector<Move> labels)
    : intervals_(std::move(intervals)), labels_(std::move(labels))
{
    if (intervals_.size() < 2)
        throw std::invalid_argument("PartitionSpec: need at least two intervals");
    if (!labels_.empty() && labels_.size() != intervals_.size())
        throw std::invalid_argument("PartitionSpec: one label per interval required");
    if (!intervals_.front().lo_closed || !intervals_.back().hi_closed)
        throw std::invalid_argument("PartitionSpec: outer end points must be closed");
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
        const Interval& cur = intervals_[k];
        if (!(cur.lo < cur.hi))
            throw std::invalid_argument("PartitionSpec: interval " + std::to_string(k) + " is empty");
        if (k + 1 < intervals_.size()) {
            const Interval& next = intervals_[k + 1];
            if (cur.hi != next.lo)
                throw std::invalid_argument("PartitionSpec: gap or overlap after interval " +
                                            std::to_string(k));
            if (cur.hi_closed == next.lo_closed)
                throw std::invalid_argument("PartitionSpec: shared end point after interval " +
                                            std::to_string(k) + " must belong to exactly one side");
        }
    }
}

std::optional<std::size_t> PartitionSpec::locate(double x) const
{
    // Intervals are sorted, so the first one whose upper end admits x is it.
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
        if (intervals_[k].contains(x))
            return k;
    }
    return std::nullopt;
}

PartitionSpec three_interval_partition(double stay_lo, double stay_hi)
{
    if (!(0.0 < stay_lo && stay_lo < stay_hi && stay_hi < 1.0))
        throw std::invalid_argument("three_interval_partition: need 0 < lo < hi < 1");
    return PartitionSpec({{0.0, stay_lo, true, true}, {stay_lo, stay_hi, false, false}, {stay_hi, 1.0, true, true}},
                         {Move::Escalate, Move::Stay, Move::DeEscalate});
}

void IntervalPrior::validate(const PartitionSpec& partition) const
{
    const std::size_t K = partition.size();
    if (!model_weights.empty()) {
        if (model_weights.size() != K)
            throw std::invalid_argument("IntervalPrior: model_weights must have one entry per interval");
        double total = 0.0;
        for (double w : model_weights) {
            if (!(w >= 0.0))
                throw std::invalid_argument("IntervalPrior: model_weights must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("IntervalPrior: model_weights must sum to 1");
    }
    if (const auto* pm = std::get_if<PointMass>(&kind)) {
        if (pm->atoms.size() != K)
            throw std::invalid_argument("IntervalPrior: one atom per interval required");
        for (std::size_t k = 0; k < K; ++k) {
            if (!partition.interval(k).contains(pm->atoms[k]))
                throw std::invalid_argument("IntervalPrior: atom " + std::to_string(k) +
                                            " lies outside its interval");
        }
    } else if (const auto* tn = std::get_if<TruncatedNormal>(&kind)) {
        if (!(tn->sigma > 0.0))
            throw std::invalid_argument("IntervalPrior: sigma must be positive");
    } else if (std::holds_alternative<TruncatedBeta>(kind)) {
        if (partition.lower() < 0.0 || partition.upper() > 1.0)
            throw std::invalid_argument("IntervalPrior: beta prior needs a partition of [0, 1]");
    }
}

double IntervalPrior::weight(std::size_t k, std::size_t K) const
{
    return model_weights.empty() ? 1.0 / static_cast<double>(K) : model_weights.at(k);
}

DoseState::DoseState(int treated, int dlts) : n(treated), y(dlts)
{
    if (treated < 0 || dlts < 0 || dlts > treated)
        throw std::invalid_argument("DoseState: need 0 <= y <= n");
}

double binomial_log_likelihood(const DoseState& s, double p)
{
    double ll = 0.0;
    if (s.y > 0)
        ll += s.y * std::log(p);
    if (s.n - s.y > 0)
        ll += (s.n - s.y) * std::log1p(-p);
    return ll;
}

namespace {

double normal_mass(double lo, double hi, double sigma)
{
    const double a = lo / sigma;
    const double b = hi / sigma;
    // Stay in the tail that avoids cancellation.
    if (a > 0.0)
        return normal_cdf(-a) - normal_cdf(-b);
    return normal_cdf(b) - normal_cdf(a);
}

void require_positive_length(const Interval& iv)
{
    if (!(iv.length() > 0.0))
        throw std::domain_error("model_evidence: zero-length interval under a continuous prior");
}

} // namespace

double model_evidence(std::size_t k, const IntervalPrior& prior, const PartitionSpec& partition,
                      const DoseState& state)
{
    const Interval& iv = partition.interval(k);
    if (const auto* tb = std::get_if<TruncatedBeta>(&prior.kind)) {
        require_positive_length(iv);
        const BetaParams& g = tb->shape;
        const BetaParams post(g.alpha + state.y, g.beta + state.n - state.y);
        const double prior_mass = beta_interval_mass(g, iv.lo, iv.hi);
        if (!(prior_mass > 0.0))
            throw std::domain_error("model_evidence: interval carries no prior mass");
        const double post_mass = beta_interval_mass(post, iv.lo, iv.hi);
        const double scale = std::exp(log_beta_fn(post.alpha, post.beta) - log_beta_fn(g.alpha, g.beta));
        return scale * post_mass / prior_mass;
    }
    if (const auto* pm = std::get_if<PointMass>(&prior.kind))
        return std::exp(binomial_log_likelihood(state, pm->atoms.at(k)));

    return model_evidence(
        k, prior, partition, [&state](double p) { return binomial_log_likelihood(state, p); }, 0.0);
}

double model_evidence(std::size_t k, const IntervalPrior& prior, const PartitionSpec& partition,
                      const LogLikelihood& loglik, double log_shift, const Quadrature& q)
{
    const Interval& iv = partition.interval(k);
    if (const auto* pm = std::get_if<PointMass>(&prior.kind))
        return std::exp(loglik(pm->atoms.at(k)) - log_shift);

    require_positive_length(iv);
    if (const auto* tb = std::get_if<TruncatedBeta>(&prior.kind)) {
        const double prior_mass = beta_interval_mass(tb->shape, iv.lo, iv.hi);
        const double num = integrate(
            [&](double x) { return std::exp(loglik(x) - log_shift) * beta_pdf(tb->shape, x); }, iv.lo, iv.hi, q);
        return num / prior_mass;
    }
    const double sigma = std::get<TruncatedNormal>(prior.kind).sigma;
    const double z = normal_mass(iv.lo, iv.hi, sigma);
    if (!(z > 0.0))
        throw std::domain_error("model_evidence: interval carries no prior mass");
    const double num =
        integrate([&](double x) { return std::exp(loglik(x) - log_shift) * normal_pdf(x, sigma); }, iv.lo, iv.hi, q);
    return num / z;
}

std::size_t argmax_with_preference(const std::vector<double>& scores, const std::vector<std::size_t>& preference)
{
    if (scores.empty())
        throw std::invalid_argument("argmax_with_preference: no scores");
    const double best = *std::max_element(scores.begin(), scores.end());
    for (std::size_t k : preference) {
        if (scores.at(k) >= best - kTieTolerance * std::abs(best))
            return k;
    }
    throw std::invalid_argument("argmax_with_preference: preference does not cover the maximum");
}

std::vector<std::size_t> tie_preference(const PartitionSpec& partition)
{
    const std::size_t K = partition.size();
    std::vector<std::size_t> order;
    order.reserve(K);
    if (!partition.has_labels()) {
        for (std::size_t k = K; k-- > 0;)
            order.push_back(k);
        return order;
    }
    for (Move m : {Move::DeEscalate, Move::Escalate, Move::Stay}) {
        for (std::size_t k = K; k-- > 0;)
            if (partition.label(k) == m)
                order.push_back(k);
    }
    return order;
}

std::vector<double> model_posterior(const IntervalPrior& prior, const PartitionSpec& partition,
                                    const DoseState& state)
{
    const std::size_t K = partition.size();
    std::vector<double> post(K);
    for (std::size_t k = 0; k < K; ++k)
        post[k] = prior.weight(k, K) * model_evidence(k, prior, partition, state);
    const double total = std::accumulate(post.begin(), post.end(), 0.0);
    if (total > 0.0)
        for (double& p : post)
            p /= total;
    return post;
}

Action bayes_decide(const IntervalPrior& prior, const PartitionSpec& partition, const DoseState& state)
{
    const std::size_t K = partition.size();
    std::vector<double> scores(K);
    for (std::size_t k = 0; k < K; ++k)
        scores[k] = prior.weight(k, K) * model_evidence(k, prior, partition, state);
    const std::size_t best = argmax_with_preference(scores, tie_preference(partition));
    Action a{best, std::nullopt};
    if (partition.has_labels())
        a.move = partition.label(best);
    return a;
}

int zero_one_loss(const Action& a, double x, const PartitionSpec& partition)
{
    return partition.interval(a.model).contains(x) ? 0 : 1;
}

int zero_one_loss(Move m, double x, const PartitionSpec& partition)
{
    const auto k = partition.locate(x);
    return k && partition.label(*k) == m ? 0 : 1;
}

} // namespace doseframe
