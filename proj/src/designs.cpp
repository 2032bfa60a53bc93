#include "doseframe/designs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace doseframe {

namespace {

// Absorbs representation error in boundaries such as 0.3 - 0.05 when they
// are compared against y/n.
constexpr double kBoundaryTol = 1e-12;

std::string lowercase(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw std::invalid_argument(message);
}

void require_data(const DoseState& s)
{
    if (s.n < 1)
        throw std::domain_error("decision undefined without data at the current dose (n = 0)");
}

double phat(const DoseState& s) { return static_cast<double>(s.y) / static_cast<double>(s.n); }

} // namespace

std::string_view design_name(DesignKind d)
{
    switch (d) {
    case DesignKind::mTPI:
        return "mTPI";
    case DesignKind::mTPI2:
        return "mTPI2";
    case DesignKind::BOIN:
        return "BOIN";
    case DesignKind::CCD:
        return "CCD";
    case DesignKind::IntCRM:
        return "IntCRM";
    case DesignKind::CRM:
        return "CRM";
    case DesignKind::i3plus3:
        return "i3plus3";
    }
    return "unknown";
}

DesignKind parse_design(std::string_view name)
{
    const std::string key = lowercase(name);
    if (key == "mtpi")
        return DesignKind::mTPI;
    if (key == "mtpi2" || key == "mtpi-2" || key == "keyboard")
        return DesignKind::mTPI2;
    if (key == "boin")
        return DesignKind::BOIN;
    if (key == "ccd")
        return DesignKind::CCD;
    if (key == "intcrm" || key == "int-crm")
        return DesignKind::IntCRM;
    if (key == "crm")
        return DesignKind::CRM;
    if (key == "i3plus3" || key == "i3+3" || key == "i3p3")
        return DesignKind::i3plus3;
    throw std::invalid_argument("unknown design '" + std::string(name) + "'");
}

bool is_tally_design(DesignKind d) { return d != DesignKind::IntCRM && d != DesignKind::CRM; }

void DesignConfig::validate() const
{
    require(target > 0.0 && target < 1.0, "p_T: must lie in (0, 1)");
    require(eps1 > 0.0, "eps1: must be positive");
    require(eps2 > 0.0, "eps2: must be positive");
    require(stay_lo() > 0.0 && stay_hi() < 1.0, "eps1/eps2: need 0 < p_T - eps1 < p_T + eps2 < 1");
    require(safety_threshold > 0.0 && safety_threshold < 1.0, "safety_threshold: must lie in (0, 1)");
    require(boin_phi_e.has_value() == boin_phi_d.has_value(), "boin_phi_E/boin_phi_D: give both or neither");
    if (boin_phi_e) {
        require(*boin_phi_e > 0.0 && *boin_phi_e < target, "boin_phi_E: must lie in (0, p_T)");
        require(*boin_phi_d > target && *boin_phi_d < 1.0, "boin_phi_D: must lie in (p_T, 1)");
        require(*boin_phi_e <= stay_lo(), "boin_phi_E: atom lies outside the escalation interval [0, p_T - eps1]");
        require(*boin_phi_d >= stay_hi(), "boin_phi_D: atom lies outside the de-escalation interval [p_T + eps2, 1]");
    }
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        require(skeleton[i] > 0.0 && skeleton[i] < 1.0, "skeleton: entries must lie in (0, 1)");
        require(i == 0 || skeleton[i] > skeleton[i - 1], "skeleton: must be strictly increasing");
    }
    require(delta > 0.0 && target - delta > 0.0 && target + delta < 1.0,
            "delta: need 0 < p_T - delta < p_T + delta < 1");
    require(sigma2 > 0.0, "sigma2: must be positive");
    require(!prior_mtd || *prior_mtd >= 1, "prior_mtd: must be at least 1");
}

// ---------------------------------------------------------------------------

double upm(const Interval& interval, const DoseState& state)
{
    if (!(interval.length() > 0.0))
        throw std::domain_error("upm: zero-length interval");
    const BetaParams post(state.y + 1.0, state.n - state.y + 1.0);
    return beta_interval_mass(post, interval.lo, interval.hi) / interval.length();
}

IntervalPrior mtpi_prior() { return IntervalPrior{TruncatedBeta{BetaParams(1.0, 1.0)}, {}}; }

PartitionSpec mtpi_partition(const DesignConfig& cfg) { return three_interval_partition(cfg.stay_lo(), cfg.stay_hi()); }

Move mtpi_decide(const DesignConfig& cfg, const DoseState& state)
{
    const PartitionSpec part = mtpi_partition(cfg);
    std::vector<double> scores(part.size());
    for (std::size_t k = 0; k < part.size(); ++k)
        scores[k] = upm(part.interval(k), state);
    return part.label(argmax_with_preference(scores, tie_preference(part)));
}

PartitionSpec mtpi2_partition(const DesignConfig& cfg)
{
    const double width = cfg.eps1 + cfg.eps2;
    const double lo = cfg.stay_lo();
    const double hi = cfg.stay_hi();

    // Cut points walking outward from the equivalence interval.
    auto cuts_from = [width](double start, double span, double sign, double end) {
        std::vector<double> cuts;
        const auto full = static_cast<int>(std::floor(span / width + 1e-9));
        for (int j = 1; j <= full; ++j)
            cuts.push_back(start + sign * j * width);
        const double rem = span - full * width;
        if (rem > 1e-9 * width || cuts.empty())
            cuts.push_back(end);
        else
            cuts.back() = end;
        return cuts;
    };

    std::vector<Interval> intervals;
    std::vector<Move> labels;

    std::vector<double> below = cuts_from(lo, lo, -1.0, 0.0); // lo-w, lo-2w, ..., 0
    std::reverse(below.begin(), below.end());
    double left = below.front(); // 0
    for (std::size_t j = 1; j <= below.size(); ++j) {
        const double right = j < below.size() ? below[j] : lo;
        intervals.push_back({left, right, j == 1, true});
        labels.push_back(Move::Escalate);
        left = right;
    }

    intervals.push_back({lo, hi, false, false});
    labels.push_back(Move::Stay);

    const std::vector<double> above = cuts_from(hi, 1.0 - hi, 1.0, 1.0);
    left = hi;
    for (std::size_t j = 0; j < above.size(); ++j) {
        const bool last = j + 1 == above.size();
        intervals.push_back({left, above[j], true, last});
        labels.push_back(Move::DeEscalate);
        left = above[j];
    }
    return PartitionSpec(std::move(intervals), std::move(labels));
}

std::size_t mtpi2_winning_interval(const PartitionSpec& fine, const DoseState& state)
{
    std::vector<double> scores(fine.size());
    for (std::size_t k = 0; k < fine.size(); ++k)
        scores[k] = upm(fine.interval(k), state);
    return argmax_with_preference(scores, tie_preference(fine));
}

Move mtpi2_decide(const DesignConfig& cfg, const DoseState& state)
{
    const PartitionSpec fine = mtpi2_partition(cfg);
    return fine.label(mtpi2_winning_interval(fine, state));
}

// ---------------------------------------------------------------------------

double boin_xi(double phi_i, double phi_j)
{
    if (!(phi_i > 0.0 && phi_i < 1.0 && phi_j > 0.0 && phi_j < 1.0))
        throw std::domain_error("boin_xi: arguments must lie in (0, 1)");
    if (phi_i == phi_j)
        throw std::domain_error("boin_xi: undefined for equal arguments");
    const double num = std::log1p(-phi_i) - std::log1p(-phi_j);
    const double den = std::log(phi_j) + std::log1p(-phi_i) - std::log(phi_i) - std::log1p(-phi_j);
    return num / den;
}

double boin_xi_inverse(double boundary, double target)
{
    if (!(target > 0.0 && target < 1.0))
        throw std::domain_error("boin_xi_inverse: target must lie in (0, 1)");
    if (!(boundary > 0.0 && boundary < 1.0) || boundary == target)
        throw std::domain_error("boin_xi_inverse: boundary must lie in (0, 1) and differ from target");
    auto g = [&](double phi) { return boin_xi(phi, target) - boundary; };
    if (boundary < target)
        return bisect(g, std::numeric_limits<double>::min(), target * (1.0 - 1e-9), 0.0);
    return bisect(g, target + (1.0 - target) * 1e-9, std::nextafter(1.0, 0.0), 0.0);
}

BoinThresholds boin_thresholds(const DesignConfig& cfg)
{
    if (cfg.boin_phi_e && cfg.boin_phi_d) {
        return {boin_xi(*cfg.boin_phi_e, cfg.target), boin_xi(*cfg.boin_phi_d, cfg.target), *cfg.boin_phi_e,
                *cfg.boin_phi_d};
    }
    const double l1 = cfg.stay_lo();
    const double l2 = cfg.stay_hi();
    return {l1, l2, boin_xi_inverse(l1, cfg.target), boin_xi_inverse(l2, cfg.target)};
}

Move threshold_decide(double lambda1, double lambda2, const DoseState& state)
{
    require_data(state);
    const double p = phat(state);
    if (p <= lambda1 + kBoundaryTol)
        return Move::Escalate;
    if (p >= lambda2 - kBoundaryTol)
        return Move::DeEscalate;
    return Move::Stay;
}

Move boin_decide(const DesignConfig& cfg, const DoseState& state)
{
    const BoinThresholds t = boin_thresholds(cfg);
    return threshold_decide(t.lambda1, t.lambda2, state);
}

Move ccd_decide(const DesignConfig& cfg, const DoseState& state)
{
    return threshold_decide(cfg.stay_lo(), cfg.stay_hi(), state);
}

IntervalPrior point_mass_prior(const DesignConfig& cfg, double phi_e, double phi_d)
{
    IntervalPrior prior{PointMass{{phi_e, cfg.target, phi_d}}, {}};
    prior.validate(mtpi_partition(cfg));
    return prior;
}

std::pair<double, double> ccd_atoms(const DesignConfig& cfg)
{
    return {boin_xi_inverse(cfg.stay_lo(), cfg.target), boin_xi_inverse(cfg.stay_hi(), cfg.target)};
}

// ---------------------------------------------------------------------------

Move i3p3_decide(const DesignConfig& cfg, const DoseState& state)
{
    require_data(state);
    const double lo = cfg.stay_lo() - kBoundaryTol;
    const double hi = cfg.stay_hi() + kBoundaryTol;
    const double p = phat(state);
    if (p < lo)
        return Move::Escalate;
    if (p <= hi)
        return Move::Stay;
    const double minus_one = static_cast<double>(state.y - 1) / static_cast<double>(state.n);
    return minus_one < lo ? Move::Stay : Move::DeEscalate;
}

// ---------------------------------------------------------------------------

std::vector<double> lee_cheung_skeleton(std::size_t doses, double target, double delta, std::size_t prior_mtd)
{
    if (doses < 1 || prior_mtd >= doses)
        throw std::invalid_argument("lee_cheung_skeleton: prior MTD must be one of the doses");
    if (!(delta > 0.0 && target - delta > 0.0 && target + delta < 1.0))
        throw std::invalid_argument("lee_cheung_skeleton: need 0 < target - delta < target + delta < 1");
    std::vector<double> q(doses);
    q[prior_mtd] = target;
    const double log_lo = std::log(target - delta);
    const double log_hi = std::log(target + delta);
    for (std::size_t k = prior_mtd; k > 0; --k) {
        // q_k^exp(b) = target + delta, then q_{k-1}^exp(b) = target - delta.
        const double b = std::log(log_hi / std::log(q[k]));
        q[k - 1] = std::exp(log_lo / std::exp(b));
    }
    for (std::size_t k = prior_mtd; k + 1 < doses; ++k) {
        const double b = std::log(log_lo / std::log(q[k]));
        q[k + 1] = std::exp(log_hi / std::exp(b));
    }
    return q;
}

std::vector<double> resolve_skeleton(const DesignConfig& cfg, std::size_t doses)
{
    if (!cfg.skeleton.empty()) {
        if (cfg.skeleton.size() != doses)
            throw std::invalid_argument("skeleton: length " + std::to_string(cfg.skeleton.size()) +
                                        " does not match " + std::to_string(doses) + " doses");
        return cfg.skeleton;
    }
    const std::size_t nu = cfg.prior_mtd ? static_cast<std::size_t>(*cfg.prior_mtd) : (doses + 1) / 2;
    if (nu < 1 || nu > doses)
        throw std::invalid_argument("prior_mtd: must lie in 1.." + std::to_string(doses));
    return lee_cheung_skeleton(doses, cfg.target, cfg.delta, nu - 1);
}

PartitionSpec ThetaIntervals::partition() const
{
    std::vector<Interval> iv;
    const std::size_t T = doses();
    for (std::size_t k = 0; k < T; ++k)
        iv.push_back({psi[k], psi[k + 1], true, k + 1 == T});
    return PartitionSpec(std::move(iv));
}

double theta_boundary(double q_lo, double q_hi, double target, double lo, double hi)
{
    auto g = [&](double t) { return power_model(q_lo, t) + power_model(q_hi, t) - 2.0 * target; };
    return bisect(g, lo, hi, 0.0);
}

ThetaIntervals solve_theta_intervals(std::span<const double> skeleton, double target)
{
    const std::size_t T = skeleton.size();
    if (T < 2)
        throw std::invalid_argument("solve_theta_intervals: need at least two doses");
    constexpr double kExtreme = 1e-5;
    // q_1^exp(A_1) = 1 - 1e-5 and q_T^exp(A_{T+1}) = 1e-5.
    const double a_lo = std::log(std::log1p(-kExtreme) / std::log(skeleton.front()));
    const double a_hi = std::log(std::log(kExtreme) / std::log(skeleton.back()));
    if (!(a_lo < a_hi))
        throw BracketError("solve_theta_intervals: inconsistent skeleton");

    ThetaIntervals out;
    out.psi.reserve(T + 1);
    out.psi.push_back(a_lo);
    for (std::size_t k = 1; k < T; ++k)
        out.psi.push_back(theta_boundary(skeleton[k - 1], skeleton[k], target, a_lo, a_hi));
    out.psi.push_back(a_hi);
    for (std::size_t k = 1; k < out.psi.size(); ++k)
        if (!(out.psi[k] > out.psi[k - 1]))
            throw BracketError("solve_theta_intervals: boundaries are not increasing; check the skeleton");
    return out;
}

ThetaIntervals solve_theta_intervals(const DesignConfig& cfg, std::size_t doses)
{
    const std::vector<double> q = resolve_skeleton(cfg, doses);
    return solve_theta_intervals(q, cfg.target);
}

std::vector<DoseState> tally_history(std::span<const PatientOutcome> history, std::size_t doses)
{
    std::vector<DoseState> tallies(doses);
    for (const PatientOutcome& p : history) {
        if (p.dose >= doses)
            throw std::invalid_argument("history: dose " + std::to_string(p.dose + 1) + " outside 1.." +
                                        std::to_string(doses));
        ++tallies[p.dose].n;
        if (p.dlt)
            ++tallies[p.dose].y;
    }
    return tallies;
}

double power_log_likelihood(std::span<const double> skeleton, std::span<const DoseState> tallies, double theta)
{
    const double scale = std::exp(theta);
    double ll = 0.0;
    for (std::size_t d = 0; d < tallies.size(); ++d) {
        const DoseState& s = tallies[d];
        if (s.n == 0)
            continue;
        const double log_p = scale * std::log(skeleton[d]);
        if (s.y > 0)
            ll += s.y * log_p;
        if (s.n > s.y)
            ll += (s.n - s.y) * std::log(-std::expm1(log_p));
    }
    return ll;
}

CrmModel CrmModel::make(const DesignConfig& cfg, std::size_t doses)
{
    cfg.validate();
    CrmModel m;
    m.skeleton = resolve_skeleton(cfg, doses);
    m.theta = solve_theta_intervals(m.skeleton, cfg.target);
    m.sigma = std::sqrt(cfg.sigma2);
    m.target = cfg.target;
    return m;
}

namespace {

bool has_data(std::span<const DoseState> tallies)
{
    return std::any_of(tallies.begin(), tallies.end(), [](const DoseState& s) { return s.n > 0; });
}

double grid_max_log_likelihood(const CrmModel& model, std::span<const DoseState> tallies, double lo, double hi)
{
    constexpr int kGrid = 128;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i) {
        const double t = lo + (hi - lo) * i / kGrid;
        best = std::max(best, power_log_likelihood(model.skeleton, tallies, t));
    }
    return best;
}

} // namespace

std::vector<double> intcrm_evidence(const CrmModel& model, std::span<const DoseState> tallies)
{
    if (tallies.size() != model.skeleton.size())
        throw std::invalid_argument("intcrm_evidence: tally count does not match the skeleton");
    const PartitionSpec part = model.theta.partition();
    const IntervalPrior prior{TruncatedNormal{model.sigma}, {}};
    const double shift = grid_max_log_likelihood(model, tallies, part.lower(), part.upper());
    const LogLikelihood ll = [&](double t) { return power_log_likelihood(model.skeleton, tallies, t); };
    std::vector<double> ev(part.size());
    for (std::size_t k = 0; k < part.size(); ++k)
        ev[k] = model_evidence(k, prior, part, ll, shift, model.quadrature);
    return ev;
}

std::size_t intcrm_decide(const CrmModel& model, std::span<const DoseState> tallies, std::size_t start_dose)
{
    if (!has_data(tallies))
        return start_dose;
    const std::vector<double> ev = intcrm_evidence(model, tallies);
    std::vector<std::size_t> lower_first(ev.size());
    for (std::size_t k = 0; k < ev.size(); ++k)
        lower_first[k] = k;
    return argmax_with_preference(ev, lower_first);
}

std::size_t intcrm_decide(const DesignConfig& cfg, std::size_t doses, std::span<const PatientOutcome> history,
                          std::size_t start_dose)
{
    const CrmModel model = CrmModel::make(cfg, doses);
    const std::vector<DoseState> tallies = tally_history(history, doses);
    return intcrm_decide(model, tallies, start_dose);
}

double crm_theta_mean(const CrmModel& model, std::span<const DoseState> tallies)
{
    if (tallies.size() != model.skeleton.size())
        throw std::invalid_argument("crm_theta_mean: tally count does not match the skeleton");
    const double lo = -10.0 * model.sigma;
    const double hi = 10.0 * model.sigma;
    const double shift = grid_max_log_likelihood(model, tallies, lo, hi);
    auto weight = [&](double t) {
        return std::exp(power_log_likelihood(model.skeleton, tallies, t) - shift) * normal_pdf(t, model.sigma);
    };
    const double norm = integrate(weight, lo, hi, model.quadrature);
    const double first = integrate([&](double t) { return t * weight(t); }, lo, hi, model.quadrature);
    return first / norm;
}

std::vector<double> crm_toxicity_estimates(const CrmModel& model, std::span<const DoseState> tallies)
{
    const double theta = crm_theta_mean(model, tallies);
    std::vector<double> est(model.skeleton.size());
    for (std::size_t d = 0; d < est.size(); ++d)
        est[d] = power_model(model.skeleton[d], theta);
    return est;
}

std::size_t crm_decide(const CrmModel& model, std::span<const DoseState> tallies)
{
    const std::vector<double> means = crm_toxicity_estimates(model, tallies);
    std::size_t best = 0;
    for (std::size_t d = 1; d < means.size(); ++d)
        if (std::abs(means[d] - model.target) < std::abs(means[best] - model.target))
            best = d;
    return best;
}

std::size_t crm_decide(const DesignConfig& cfg, std::size_t doses, std::span<const PatientOutcome> history)
{
    const CrmModel model = CrmModel::make(cfg, doses);
    const std::vector<DoseState> tallies = tally_history(history, doses);
    return crm_decide(model, tallies);
}

// ---------------------------------------------------------------------------

Move tally_decide(const DesignConfig& cfg, const DoseState& state)
{
    switch (cfg.design) {
    case DesignKind::mTPI:
        return mtpi_decide(cfg, state);
    case DesignKind::mTPI2:
        return mtpi2_decide(cfg, state);
    case DesignKind::BOIN:
        return boin_decide(cfg, state);
    case DesignKind::CCD:
        return ccd_decide(cfg, state);
    case DesignKind::i3plus3:
        return i3p3_decide(cfg, state);
    case DesignKind::IntCRM:
    case DesignKind::CRM:
        break;
    }
    throw std::invalid_argument(std::string(design_name(cfg.design)) +
                                " decisions depend on the full history, not a single tally");
}

} // namespace doseframe
