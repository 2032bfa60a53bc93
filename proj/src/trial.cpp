#include "doseframe/trial.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace doseframe {

void TrialSpec::validate() const
{
    design.validate();
    if (doses < 1)
        throw std::invalid_argument("doses: need at least one dose");
    if (!is_tally_design(design.design) && doses < 2)
        throw std::invalid_argument("doses: model-based designs need at least two doses");
    if (cohort_size < 1)
        throw std::invalid_argument("cohort_size: must be at least 1");
    if (max_n < cohort_size)
        throw std::invalid_argument("max_n: must be at least cohort_size");
    if (start_dose >= doses)
        throw std::invalid_argument("start_dose: must lie in 1.." + std::to_string(doses));
}

std::string_view step_tag(Step s)
{
    switch (s) {
    case Step::Escalate:
        return "E";
    case Step::Stay:
        return "S";
    case Step::DeEscalate:
        return "D";
    case Step::DeEscalateExclude:
        return "DU";
    case Step::Stop:
        return "STOP";
    }
    return "?";
}

TrialState::TrialState(std::size_t T, std::size_t start) : doses(T), current(start), excluded(T, false) {}

int TrialState::total_n() const
{
    int total = 0;
    for (const DoseState& s : doses)
        total += s.n;
    return total;
}

std::size_t TrialState::lowest_excluded() const
{
    const auto it = std::find(excluded.begin(), excluded.end(), true);
    return static_cast<std::size_t>(it - excluded.begin());
}

double excess_toxicity_prob(const DoseState& state, double target)
{
    return reg_inc_beta_upper(BetaParams(1.0 + state.y, 1.0 + state.n - state.y), target);
}

// ---------------------------------------------------------------------------

DecisionEngine::DecisionEngine(const DesignConfig& cfg, std::size_t doses) : cfg_(cfg), doses_(doses)
{
    cfg_.validate();
    switch (cfg_.design) {
    case DesignKind::BOIN:
        boin_ = boin_thresholds(cfg_);
        break;
    case DesignKind::mTPI2:
        fine_ = mtpi2_partition(cfg_);
        break;
    case DesignKind::IntCRM:
    case DesignKind::CRM:
        crm_ = CrmModel::make(cfg_, doses_);
        break;
    default:
        break;
    }
}

Move DecisionEngine::tally_move(const DoseState& state)
{
    const std::uint64_t key = (static_cast<std::uint64_t>(state.n) << 32) | static_cast<std::uint32_t>(state.y);
    if (const auto it = tally_cache_.find(key); it != tally_cache_.end())
        return it->second;
    Move m{};
    switch (cfg_.design) {
    case DesignKind::mTPI:
        m = mtpi_decide(cfg_, state);
        break;
    case DesignKind::mTPI2:
        m = fine_.label(mtpi2_winning_interval(fine_, state));
        break;
    case DesignKind::BOIN:
        m = threshold_decide(boin_.lambda1, boin_.lambda2, state);
        break;
    case DesignKind::CCD:
        m = ccd_decide(cfg_, state);
        break;
    case DesignKind::i3plus3:
        m = i3p3_decide(cfg_, state);
        break;
    case DesignKind::IntCRM:
    case DesignKind::CRM:
        throw std::invalid_argument(std::string(design_name(cfg_.design)) + " has no single-tally decision");
    }
    tally_cache_.emplace(key, m);
    return m;
}

long DecisionEngine::raw_target(std::span<const DoseState> tallies, std::size_t current)
{
    if (tallies.size() != doses_)
        throw std::invalid_argument("raw_target: tally count does not match the dose count");
    const auto cur = static_cast<long>(current);
    if (!crm_) {
        switch (tally_move(tallies[current])) {
        case Move::Escalate:
            return cur + 1;
        case Move::Stay:
            return cur;
        case Move::DeEscalate:
            return cur - 1;
        }
    }

    std::string key(tallies.size() * 2 * sizeof(int), '\0');
    for (std::size_t d = 0; d < tallies.size(); ++d) {
        std::copy_n(reinterpret_cast<const char*>(&tallies[d].n), sizeof(int), key.data() + 2 * d * sizeof(int));
        std::copy_n(reinterpret_cast<const char*>(&tallies[d].y), sizeof(int),
                    key.data() + (2 * d + 1) * sizeof(int));
    }
    if (const auto it = model_cache_.find(key); it != model_cache_.end())
        return static_cast<long>(it->second);
    const std::size_t rec = cfg_.design == DesignKind::IntCRM ? intcrm_decide(*crm_, tallies, current)
                                                              : crm_decide(*crm_, tallies);
    model_cache_.emplace(std::move(key), rec);
    return static_cast<long>(rec);
}

// ---------------------------------------------------------------------------

std::pair<std::size_t, Step> apply_safety(long raw_target, TrialState& state, const TrialSpec& spec)
{
    const std::size_t T = state.doses.size();
    const std::size_t cur = state.current;
    const double target = spec.design.target;

    // Rule 1 / Rule 2.
    if (excess_toxicity_prob(state.doses[cur], target) > spec.design.safety_threshold) {
        for (std::size_t d = cur; d < T; ++d)
            state.excluded[d] = true;
        if (cur == 0) {
            state.stopped = StopReason::Safety;
            return {cur, Step::Stop};
        }
        return {cur - 1, Step::DeEscalateExclude};
    }

    const auto c = static_cast<long>(cur);
    // Rule 3: at most one level up.
    long next = std::min(raw_target, c + 1);

    // Rule 4: coherence after the most recent cohort.
    if (next > c && !state.cohort_log.empty()) {
        const CohortRecord& last = state.cohort_log.back();
        if (static_cast<double>(last.dlts) / last.size > target)
            next = c;
    }

    next = std::clamp(next, 0L, static_cast<long>(T) - 1);
    if (state.excluded[static_cast<std::size_t>(next)])
        next = c;

    const auto out = static_cast<std::size_t>(next);
    const Step step = out > cur ? Step::Escalate : out < cur ? Step::DeEscalate : Step::Stay;
    return {out, step};
}

TrialResult run_trial(const TrialSpec& spec, std::span<const double> truth, Stream& stream, DecisionEngine& engine)
{
    if (truth.size() != spec.doses)
        throw std::invalid_argument("run_trial: truth has " + std::to_string(truth.size()) + " doses, spec has " +
                                    std::to_string(spec.doses));
    if (engine.doses() != spec.doses)
        throw std::invalid_argument("run_trial: engine prepared for a different dose count");

    TrialResult result;
    TrialState& st = result.state;
    st = TrialState(spec.doses, spec.start_dose);
    const bool model_based = !is_tally_design(spec.design.design);

    while (st.stopped == StopReason::None) {
        const std::size_t dose = st.current;
        int dlts = 0;
        for (int i = 0; i < spec.cohort_size; ++i)
            if (stream.uniform() < truth[dose])
                ++dlts;
        st.doses[dose].n += spec.cohort_size;
        st.doses[dose].y += dlts;
        st.cohort_log.push_back({dose, spec.cohort_size, dlts, Step::Stay, dose, st.lowest_excluded()});

        const long raw = engine.raw_target(st.doses, dose);
        if (model_based)
            st.recommendation = static_cast<std::size_t>(std::clamp(raw, 0L, static_cast<long>(spec.doses) - 1));
        const auto [next, step] = apply_safety(raw, st, spec);
        st.cohort_log.back().step = step;
        st.cohort_log.back().next = next;
        if (st.stopped != StopReason::None)
            break;
        st.current = next;
        if (st.total_n() + spec.cohort_size > spec.max_n)
            st.stopped = StopReason::MaxSampleSize;
    }
    result.mtd = select_mtd(st, spec);
    return result;
}

TrialResult run_trial(const TrialSpec& spec, std::span<const double> truth, Stream& stream)
{
    spec.validate();
    DecisionEngine engine(spec.design, spec.doses);
    return run_trial(spec, truth, stream, engine);
}

std::optional<std::size_t> select_mtd(const TrialState& state, const TrialSpec& spec)
{
    if (state.stopped == StopReason::Safety)
        return std::nullopt;
    const std::size_t T = state.doses.size();
    const std::size_t allowed = state.lowest_excluded();
    if (allowed == 0)
        return std::nullopt;

    if (!is_tally_design(spec.design.design)) {
        if (!state.recommendation)
            return std::nullopt;
        return std::min(*state.recommendation, allowed - 1);
    }

    std::vector<std::size_t> treated;
    std::vector<double> means;
    std::vector<double> weights;
    for (std::size_t d = 0; d < T; ++d) {
        const DoseState& s = state.doses[d];
        if (s.n == 0)
            continue;
        const double a = 1.0 + s.y;
        const double b = 1.0 + s.n - s.y;
        treated.push_back(d);
        means.push_back(a / (a + b));
        weights.push_back((a + b) * (a + b) * (a + b + 1.0) / (a * b));
    }
    const std::vector<double> iso = pava_isotonic(means, weights);

    const double target = spec.design.target;
    constexpr double kTol = 1e-12;
    std::optional<std::size_t> best;
    double best_est = 0.0;
    for (std::size_t i = 0; i < treated.size(); ++i) {
        if (treated[i] >= allowed)
            break;
        const double est = iso[i];
        const double dist = std::abs(est - target);
        const double best_dist = std::abs(best_est - target);
        if (!best || dist < best_dist - kTol) {
            best = treated[i];
            best_est = est;
        } else if (std::abs(dist - best_dist) <= kTol && std::abs(est - best_est) <= kTol && est < target) {
            // Equal estimates below target: the higher dose.
            best = treated[i];
        }
    }
    return best;
}

void write_trajectory(std::ostream& os, const TrialState& state)
{
    for (const CohortRecord& c : state.cohort_log) {
        os << c.dose + 1 << ',' << c.size << ',' << c.dlts << ',' << step_tag(c.step) << ',';
        if (c.step == Step::Stop)
            os << '-';
        else
            os << c.next + 1;
        os << '\n';
    }
}

std::string trajectory_string(const TrialState& state)
{
    std::ostringstream os;
    write_trajectory(os, state);
    return os.str();
}

} // namespace doseframe
