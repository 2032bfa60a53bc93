#include "doseframe/verify.hpp"

#include "doseframe/format.hpp"
#include "doseframe/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace doseframe {

namespace {

class Timer {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string state_text(const DoseState& s) { return "(n=" + std::to_string(s.n) + ", y=" + std::to_string(s.y) + ")"; }

void record(CheckResult& r, bool ok, const std::string& detail)
{
    ++r.cases;
    if (ok)
        return;
    ++r.mismatches;
    r.passed = false;
    if (r.counterexample.empty())
        r.counterexample = detail;
}

template <typename Rule, typename Reference>
CheckResult exhaustive_tally_check(std::string name, int max_n, Rule rule, Reference reference)
{
    const Timer timer;
    CheckResult r;
    r.name = std::move(name);
    for (int n = 1; n <= max_n; ++n) {
        for (int y = 0; y <= n; ++y) {
            const DoseState s(n, y);
            const Move a = rule(s);
            const Move b = reference(s);
            record(r, a == b,
                   state_text(s) + ": rule " + move_tag(a) + ", Bayes rule " + move_tag(b));
        }
    }
    r.seconds = timer.seconds();
    return r;
}

DesignConfig with_design(const DesignConfig& base, DesignKind kind)
{
    DesignConfig c = base;
    c.design = kind;
    c.validate();
    return c;
}

// Position of a fine-partition interval relative to the equivalence interval.
Move position_of(const Interval& iv, const DesignConfig& cfg)
{
    if (iv.hi <= cfg.stay_lo())
        return Move::Escalate;
    if (iv.lo >= cfg.stay_hi())
        return Move::DeEscalate;
    return Move::Stay;
}

double hierarchical_density(const IntervalPrior& prior, const PartitionSpec& partition, std::size_t k, double x)
{
    const Interval& iv = partition.interval(k);
    const double w = prior.weight(k, partition.size());
    if (const auto* tb = std::get_if<TruncatedBeta>(&prior.kind))
        return w * beta_pdf(tb->shape, x) / beta_interval_mass(tb->shape, iv.lo, iv.hi);
    const double sigma = std::get<TruncatedNormal>(prior.kind).sigma;
    const double mass = normal_cdf(iv.hi / sigma) - normal_cdf(iv.lo / sigma);
    return w * normal_pdf(x, sigma) / mass;
}

} // namespace

LossGrid::LossGrid(const IntervalPrior& prior, const PartitionSpec& partition, int grid)
{
    if (std::holds_alternative<PointMass>(prior.kind))
        throw std::invalid_argument("LossGrid: needs a continuous prior");
    const double lo = partition.lower();
    const double h = (partition.upper() - lo) / grid;
    const auto n = static_cast<std::size_t>(grid);
    log_x.resize(n);
    log_1mx.resize(n);
    prior_density.resize(n);
    loss.assign(partition.size(), std::vector<std::uint8_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * h;
        log_x[i] = std::log(x);
        log_1mx[i] = std::log1p(-x);
        prior_density[i] = hierarchical_density(prior, partition, *partition.locate(x), x);
        for (std::size_t a = 0; a < partition.size(); ++a)
            loss[a][i] = static_cast<std::uint8_t>(zero_one_loss(Action{a, std::nullopt}, x, partition));
    }
}

std::vector<std::size_t> LossGrid::minimizers(const DoseState& state, double rel_tol) const
{
    std::vector<double> post(prior_density.size());
    double total = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        post[i] = std::exp(state.y * log_x[i] + (state.n - state.y) * log_1mx[i]) * prior_density[i];
        total += post[i];
    }
    std::vector<double> expected(loss.size(), 0.0);
    for (std::size_t a = 0; a < loss.size(); ++a) {
        double acc = 0.0;
        for (std::size_t i = 0; i < post.size(); ++i)
            acc += loss[a][i] * post[i];
        expected[a] = acc / total;
    }
    const double best = *std::min_element(expected.begin(), expected.end());
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < expected.size(); ++a)
        if (expected[a] <= best + rel_tol * std::max(best, 1e-300))
            out.push_back(a);
    return out;
}

std::vector<double> riemann_intcrm_evidence(const CrmModel& model, std::span<const DoseState> tallies, int points)
{
    const PartitionSpec part = model.theta.partition();
    const double lo = part.lower();
    const double h = (part.upper() - lo) / points;
    std::vector<double> ll(static_cast<std::size_t>(points));
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
        ll[static_cast<std::size_t>(i)] = power_log_likelihood(model.skeleton, tallies, lo + (i + 0.5) * h);
        peak = std::max(peak, ll[static_cast<std::size_t>(i)]);
    }
    std::vector<double> num(part.size(), 0.0);
    std::vector<double> den(part.size(), 0.0);
    for (int i = 0; i < points; ++i) {
        const double t = lo + (i + 0.5) * h;
        const std::size_t k = *part.locate(t);
        const double phi = normal_pdf(t, model.sigma);
        num[k] += std::exp(ll[static_cast<std::size_t>(i)] - peak) * phi;
        den[k] += phi;
    }
    std::vector<double> ev(part.size());
    for (std::size_t k = 0; k < ev.size(); ++k)
        ev[k] = num[k] / den[k];
    return ev;
}

CheckResult check_mtpi_bayes(const VerifyOptions& opt)
{
    const DesignConfig cfg = with_design(opt.base, DesignKind::mTPI);
    const PartitionSpec part = mtpi_partition(cfg);
    const IntervalPrior prior = mtpi_prior();
    return exhaustive_tally_check(
        "mtpi-upm-equals-bayes-rule", opt.max_n, [&](const DoseState& s) { return mtpi_decide(cfg, s); },
        [&](const DoseState& s) { return *bayes_decide(prior, part, s).move; });
}

CheckResult check_boin_bayes(const VerifyOptions& opt)
{
    const DesignConfig cfg = with_design(opt.base, DesignKind::BOIN);
    const BoinThresholds t = boin_thresholds(cfg);
    const PartitionSpec part = mtpi_partition(cfg);
    const IntervalPrior prior = point_mass_prior(cfg, t.phi_e, t.phi_d);
    const double l1 = t.lambda1 + opt.perturb_lambda1;
    return exhaustive_tally_check(
        "boin-threshold-equals-point-mass-bayes-rule", opt.max_n,
        [&](const DoseState& s) { return threshold_decide(l1, t.lambda2, s); },
        [&](const DoseState& s) { return *bayes_decide(prior, part, s).move; });
}

CheckResult check_ccd_bayes(const VerifyOptions& opt)
{
    const DesignConfig cfg = with_design(opt.base, DesignKind::CCD);
    const auto [phi_e, phi_d] = ccd_atoms(cfg);
    const PartitionSpec part = mtpi_partition(cfg);
    const IntervalPrior prior = point_mass_prior(cfg, phi_e, phi_d);
    return exhaustive_tally_check(
        "ccd-equals-inverse-xi-point-mass-bayes-rule", opt.max_n,
        [&](const DoseState& s) { return ccd_decide(cfg, s); },
        [&](const DoseState& s) { return *bayes_decide(prior, part, s).move; });
}

CheckResult check_mtpi2_map(const VerifyOptions& opt)
{
    const DesignConfig cfg = with_design(opt.base, DesignKind::mTPI2);
    const PartitionSpec fine = mtpi2_partition(cfg);
    const IntervalPrior prior = mtpi_prior();
    return exhaustive_tally_check(
        "mtpi2-equals-fine-partition-bayes-rule-map", opt.max_n,
        [&](const DoseState& s) { return mtpi2_decide(cfg, s); },
        [&](const DoseState& s) { return position_of(fine.interval(bayes_decide(prior, fine, s).model), cfg); });
}

CheckResult check_bayes_rule_loss(const VerifyOptions& opt)
{
    const Timer timer;
    CheckResult r;
    r.name = "bayes-rule-minimizes-expected-zero-one-loss";
    const DesignConfig cfg = with_design(opt.base, DesignKind::mTPI);

    struct Case {
        std::string label;
        IntervalPrior prior;
        PartitionSpec partition;
    };
    const std::vector<Case> cases = {
        {"three-interval Be(1,1)", mtpi_prior(), mtpi_partition(cfg)},
        {"fine partition Be(1,1)", mtpi_prior(), mtpi2_partition(cfg)},
        {"three-interval Be(0.5,2) weights (0.2,0.5,0.3)",
         IntervalPrior{TruncatedBeta{BetaParams(0.5, 2.0)}, {0.2, 0.5, 0.3}}, mtpi_partition(cfg)},
    };
    for (const Case& c : cases) {
        const LossGrid grid(c.prior, c.partition, opt.loss_grid);
        for (int n = 0; n <= opt.loss_max_n; ++n) {
            for (int y = 0; y <= n; ++y) {
                const DoseState s(n, y);
                const std::size_t chosen = bayes_decide(c.prior, c.partition, s).model;
                const std::vector<std::size_t> best = grid.minimizers(s);
                const bool ok = std::find(best.begin(), best.end(), chosen) != best.end();
                record(r, ok,
                       c.label + " " + state_text(s) + ": Bayes rule picks interval " + std::to_string(chosen + 1) +
                           ", loss enumeration picks " + std::to_string(best.front() + 1));
            }
        }
    }
    r.seconds = timer.seconds();
    return r;
}

CheckResult check_intcrm_oracle(const VerifyOptions& opt)
{
    const Timer timer;
    CheckResult r;
    r.name = "intcrm-equals-riemann-oracle";
    const DesignConfig cfg = with_design(opt.base, DesignKind::IntCRM);
    const CrmModel model = CrmModel::make(cfg, opt.intcrm_doses);
    const std::size_t T = opt.intcrm_doses;

    for (int h = 0; h < opt.intcrm_histories; ++h) {
        Stream stream = Stream::derive(opt.seed, 0x7E57ULL, static_cast<std::uint64_t>(h));
        // Patients spread over doses, outcomes from a random power-model curve.
        const double theta0 = 1.2 * (stream.uniform() + stream.uniform() + stream.uniform() - 1.5);
        const int patients = 1 + static_cast<int>(stream.uniform() * 30.0);
        std::vector<DoseState> tallies(T);
        for (int i = 0; i < patients; ++i) {
            const auto d = std::min(T - 1, static_cast<std::size_t>(stream.uniform() * static_cast<double>(T)));
            ++tallies[d].n;
            if (stream.uniform() < power_model(model.skeleton[d], theta0))
                ++tallies[d].y;
        }
        const std::size_t chosen = intcrm_decide(model, tallies);
        const std::vector<double> ev = riemann_intcrm_evidence(model, tallies, opt.riemann_points);
        std::vector<std::size_t> lower_first(T);
        for (std::size_t k = 0; k < T; ++k)
            lower_first[k] = k;
        const std::size_t oracle = argmax_with_preference(ev, lower_first);

        std::string hist;
        for (std::size_t d = 0; d < T; ++d)
            hist += (d ? " " : "") + std::to_string(tallies[d].y) + "/" + std::to_string(tallies[d].n);
        record(r, chosen == oracle,
               "history " + std::to_string(h + 1) + " [" + hist + "]: Int-CRM dose " + std::to_string(chosen + 1) +
                   ", oracle dose " + std::to_string(oracle + 1));
    }
    r.seconds = timer.seconds();
    return r;
}

CheckResult check_theta_intervals(const VerifyOptions& opt)
{
    const Timer timer;
    CheckResult r;
    r.name = "theta-interval-boundaries";
    constexpr int kGrid = 10000;
    for (std::size_t T : {4u, 5u, 6u}) {
        const std::vector<double> q = resolve_skeleton(opt.base, T);
        const ThetaIntervals ti = solve_theta_intervals(q, opt.base.target);
        for (std::size_t k = 1; k < T; ++k) {
            const double psi = ti.psi[k];
            const double res = power_model(q[k - 1], psi) + power_model(q[k], psi) - 2.0 * opt.base.target;
            record(r, std::abs(res) < 1e-8,
                   "T=" + std::to_string(T) + " boundary " + std::to_string(k + 1) + ": residual " +
                       format_double(res));
        }
        const PartitionSpec part = ti.partition();
        const double lo = part.lower();
        const double hi = part.upper();
        for (int i = 0; i <= kGrid; ++i) {
            const double t = lo + (hi - lo) * i / kGrid;
            const std::size_t k = *part.locate(t);
            const Interval& iv = part.interval(k);
            if (t - iv.lo < 1e-9 || iv.hi - t < 1e-9)
                continue;
            const double own = std::abs(power_model(q[k], t) - opt.base.target);
            bool closest = true;
            for (std::size_t d = 0; d < T; ++d)
                if (d != k && !(own < std::abs(power_model(q[d], t) - opt.base.target)))
                    closest = false;
            record(r, closest,
                   "T=" + std::to_string(T) + " theta=" + format_double(t) + ": dose " + std::to_string(k + 1) +
                       " is not the closest to target");
        }
    }
    r.seconds = timer.seconds();
    return r;
}

std::vector<CheckResult> run_verification(const VerifyOptions& opt)
{
    return {check_mtpi_bayes(opt),      check_boin_bayes(opt),      check_ccd_bayes(opt),
            check_mtpi2_map(opt),       check_bayes_rule_loss(opt), check_intcrm_oracle(opt),
            check_theta_intervals(opt)};
}

bool all_passed(const std::vector<CheckResult>& results)
{
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

void write_certificate(std::ostream& os, const std::vector<CheckResult>& results)
{
    for (const CheckResult& r : results) {
        os << r.name << ' ' << (r.passed ? "PASS" : "FAIL") << " cases=" << r.cases << " mismatches=" << r.mismatches;
        if (!r.passed)
            os << " first=" << r.counterexample;
        os << '\n';
    }
    os << (all_passed(results) ? "ALL PASS" : "FAILED") << '\n';
}

} // namespace doseframe
