// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff
// every criterion passes.

#include "doseframe/config.hpp"
#include "doseframe/format.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

using namespace doseframe;

namespace {

// Pinned tolerances.
constexpr double kVerifySeconds = 10.0;
constexpr double kOracleSeconds = 30.0;
constexpr double kDeskSeconds = 300.0;
constexpr std::size_t kDeskScenarios = 200;
constexpr int kDeskReplicates = 400;
struct Band {
    double lo, hi;
};
constexpr Band kCorrectBand{0.55, 0.67};
constexpr Band kOverBand{0.06, 0.16};
constexpr Band kToxBand{0.23, 0.29};
constexpr Band kNoneBand{0.01, 0.07};
constexpr double kMaxCorrectSpread = 0.04;
constexpr int kSafetyTrials = 1000;
constexpr double kSafetyStopRate = 0.90;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed3(double x) { return format_double(x, 3); }

bool in_band(double v, Band band) { return v >= band.lo && v <= band.hi; }

std::string check_summary(const CheckResult& c)
{
    std::string s = c.name + (c.passed ? " ok" : " FAILED") + " (" + std::to_string(c.cases) + " cases, " +
                    std::to_string(c.mismatches) + " mismatches";
    if (!c.counterexample.empty())
        s += ", first " + c.counterexample;
    return s + ")";
}

Verdict criterion_equivalence()
{
    VerifyOptions opt;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<CheckResult> r{check_mtpi_bayes(opt), check_boin_bayes(opt), check_ccd_bayes(opt),
                                     check_mtpi2_map(opt)};
    const double secs = seconds_since(t0);
    Verdict v;
    v.pass = secs < kVerifySeconds;
    std::string detail;
    for (const CheckResult& c : r) {
        v.pass = v.pass && c.passed && c.mismatches == 0 && c.cases == 495;
        detail += check_summary(c) + "; ";
    }
    v.detail = detail + "runtime " + fixed3(secs) + " s (limit " + fixed3(kVerifySeconds) + ")";
    return v;
}

Verdict criterion_loss()
{
    VerifyOptions opt;
    opt.loss_max_n = 12;
    const CheckResult c = check_bayes_rule_loss(opt);
    return {c.passed && c.mismatches == 0, check_summary(c)};
}

Verdict criterion_intcrm()
{
    VerifyOptions opt;
    opt.intcrm_histories = 50;
    opt.riemann_points = 100000;
    const auto t0 = std::chrono::steady_clock::now();
    const CheckResult c = check_intcrm_oracle(opt);
    const double secs = seconds_since(t0);
    return {c.passed && c.cases == 50 && secs < kOracleSeconds,
            check_summary(c) + "; runtime " + fixed3(secs) + " s (limit " + fixed3(kOracleSeconds) + ")"};
}

Verdict criterion_theta()
{
    VerifyOptions opt;
    const CheckResult c = check_theta_intervals(opt);
    return {c.passed, check_summary(c)};
}

struct DeskRun {
    std::vector<NamedDesign> designs;
    std::vector<Scenario> scenarios;
    SimSettings settings;
    std::vector<DesignResult> results;
    double seconds = 0.0;
};

DeskRun desk_run()
{
    DeskRun run;
    run.designs = default_designs();
    const DesignConfig& ref = run.designs.front().config;
    run.scenarios = random_scenarios(kDeskScenarios, std::vector<std::size_t>{4, 5, 6}, ref.target,
                                     equivalence_interval(ref), kDefaultSeed);
    run.settings.replicates = kDeskReplicates;
    run.settings.seed = kDefaultSeed;
    run.settings.workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<DesignConfig> configs;
    for (const NamedDesign& d : run.designs)
        configs.push_back(d.config);
    const auto t0 = std::chrono::steady_clock::now();
    run.results = evaluate(configs, run.scenarios, run.settings);
    run.seconds = seconds_since(t0);
    return run;
}

Verdict criterion_desk(const DeskRun& run)
{
    Verdict v;
    v.pass = run.seconds < kDeskSeconds;
    std::ostringstream os;
    for (const DesignResult& r : run.results) {
        const OperatingCharacteristics& oc = r.summary;
        const bool ok = in_band(oc.correct_sel.mean, kCorrectBand) && in_band(oc.sel_over.mean, kOverBand) &&
                        in_band(oc.tox.mean, kToxBand) && in_band(oc.none_sel.mean, kNoneBand);
        v.pass = v.pass && ok;
        os << r.name << "(correct " << fixed3(oc.correct_sel.mean) << ", over " << fixed3(oc.sel_over.mean)
           << ", tox " << fixed3(oc.tox.mean) << ", none " << fixed3(oc.none_sel.mean) << (ok ? ")" : " OUT)")
           << "; ";
    }
    os << "runtime " << fixed3(run.seconds) << " s";
    v.detail = os.str();
    return v;
}

Verdict criterion_similarity(const DeskRun& run)
{
    double lo = 1.0, hi = 0.0;
    for (const DesignResult& r : run.results) {
        lo = std::min(lo, r.summary.correct_sel.mean);
        hi = std::max(hi, r.summary.correct_sel.mean);
    }
    return {hi - lo <= kMaxCorrectSpread,
            "max pairwise difference " + fixed3(hi - lo) + " (limit " + fixed3(kMaxCorrectSpread) + ")"};
}

Verdict criterion_boin_ccd(const DeskRun& run)
{
    DesignConfig boin, ccd;
    boin.design = DesignKind::BOIN;
    ccd.design = DesignKind::CCD;
    const BoinThresholds t = boin_thresholds(boin);
    const TrajectoryAgreement a = compare_trajectories(boin, ccd, run.scenarios, run.settings);
    return {a.trials > 0 && a.identical == a.trials,
            std::to_string(a.identical) + "/" + std::to_string(a.trials) + " trajectories identical (lambda1 " +
                format_double(t.lambda1, 4) + ", lambda2 " + format_double(t.lambda2, 4) + ")"};
}

Verdict criterion_safety()
{
    const std::vector<double> truth{0.6, 0.7, 0.8, 0.9};
    Verdict v{true, {}};
    std::ostringstream os;
    for (const NamedDesign& d : default_designs()) {
        TrialSpec spec;
        spec.design = d.config;
        spec.doses = truth.size();
        DecisionEngine engine(spec.design, spec.doses);
        int stops = 0;
        std::size_t on_excluded = 0, skips = 0, incoherent = 0;
        for (int r = 0; r < kSafetyTrials; ++r) {
            Stream s(Stream::derive(kDefaultSeed, 0x5AFE, static_cast<std::uint64_t>(r)));
            const TrialResult res = run_trial(spec, truth, s, engine);
            stops += res.state.stopped == StopReason::Safety;
            const auto& log = res.state.cohort_log;
            std::size_t lowest_excluded = spec.doses;
            for (std::size_t i = 0; i < log.size(); ++i) {
                if (log[i].dose >= lowest_excluded)
                    ++on_excluded;
                if (log[i].step == Step::DeEscalateExclude || log[i].step == Step::Stop)
                    lowest_excluded = std::min(lowest_excluded, log[i].dose);
                if (i + 1 < log.size()) {
                    if (log[i + 1].dose > log[i].dose + 1)
                        ++skips;
                    if (log[i + 1].dose > log[i].dose &&
                        static_cast<double>(log[i].dlts) / log[i].size > spec.design.target)
                        ++incoherent;
                }
            }
        }
        const double rate = static_cast<double>(stops) / kSafetyTrials;
        const bool ok = rate > kSafetyStopRate && on_excluded == 0 && skips == 0 && incoherent == 0;
        v.pass = v.pass && ok;
        os << d.name << "(stop " << fixed3(rate) << ", excluded " << on_excluded << ", skips " << skips
           << ", incoherent " << incoherent << ") ";
    }
    v.detail = os.str();
    return v;
}

Verdict criterion_goldens()
{
    const std::vector<std::pair<DesignKind, std::string>> files{{DesignKind::mTPI, "mtpi_n12.csv"},
                                                                {DesignKind::mTPI2, "mtpi2_n12.csv"},
                                                                {DesignKind::BOIN, "boin_n12.csv"},
                                                                {DesignKind::CCD, "ccd_n12.csv"},
                                                                {DesignKind::i3plus3, "i3plus3_n12.csv"}};
    Verdict v{true, {}};
    for (const auto& [kind, file] : files) {
        DesignConfig cfg;
        cfg.design = kind;
        const DecisionTable t = build_table(cfg, 12);
        std::ifstream in(std::string(DOSEFRAME_SOURCE_DIR) + "/tests/golden/" + file);
        std::ostringstream golden;
        golden << in.rdbuf();
        const bool match = in.good() && emit_string(t, TableFormat::Csv) == golden.str();
        const bool du = t.at(3, 3) == TableEntry::DU;
        v.pass = v.pass && match && du;
        v.detail += file + (match ? " match" : " DIFFERS") + (du ? ", (3,3)=DU; " : ", (3,3) not DU; ");
    }
    return v;
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char* title;
        std::function<Verdict()> run;
    };

    DeskRun desk;
    bool desk_done = false;
    auto ensure_desk = [&]() -> const DeskRun& {
        if (!desk_done) {
            desk = desk_run();
            desk_done = true;
        }
        return desk;
    };

    const std::vector<Criterion> criteria{
        {1, "exhaustive rule / Bayes-rule equivalence (mTPI, BOIN, CCD, mTPI-2), n <= 30", criterion_equivalence},
        {2, "Bayes rule minimizes enumerated expected 0-1 loss, n <= 12", criterion_loss},
        {3, "Int-CRM matches a 1e5-point Riemann oracle on 50 histories", criterion_intcrm},
        {4, "theta-interval boundary residuals and closest-dose property, T = 4, 5, 6", criterion_theta},
        {5, "desk-scale operating characteristics (200 scenarios x 400 replicates)",
         [&] { return criterion_desk(ensure_desk()); }},
        {6, "cross-design similarity of correct selection", [&] { return criterion_similarity(ensure_desk()); }},
        {7, "BOIN and CCD trajectories identical on paired streams", [&] { return criterion_boin_ccd(ensure_desk()); }},
        {8, "safety rules at truth (0.6, 0.7, 0.8, 0.9), 1000 trials per design", criterion_safety},
        {9, "decision tables byte-match frozen goldens", criterion_goldens},
    };

    int failed = 0;
    for (const Criterion& c : criteria) {
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " -- " << v.detail
                  << std::endl;
    }
    std::cout << (failed == 0 ? "ACCEPTANCE: ALL PASS" : "ACCEPTANCE: " + std::to_string(failed) + " FAILED")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
