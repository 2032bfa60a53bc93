#include "doseframe/sim.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

using namespace doseframe;

namespace {

const Interval kEI{0.25, 0.35, false, false};

std::vector<DesignConfig> designs(std::initializer_list<DesignKind> kinds)
{
    std::vector<DesignConfig> out;
    for (DesignKind k : kinds) {
        DesignConfig c;
        c.design = k;
        out.push_back(c);
    }
    return out;
}

SimSettings small_settings(int replicates)
{
    SimSettings s;
    s.replicates = replicates;
    s.seed = 777;
    return s;
}

} // namespace

TEST_CASE("scenario MTD")
{
    const std::vector<double> a{0.05, 0.1, 0.3, 0.5};
    CHECK(scenario_mtd(a, 0.3, kEI) == std::optional<std::size_t>(2));
    const std::vector<double> above{0.4, 0.5, 0.6};
    CHECK_FALSE(scenario_mtd(above, 0.3, kEI).has_value());
    const std::vector<double> below{0.01, 0.02, 0.1};
    CHECK(scenario_mtd(below, 0.3, kEI) == std::optional<std::size_t>(2));
    const std::vector<double> tie{0.25, 0.35};
    CHECK(scenario_mtd(tie, 0.3, kEI) == std::optional<std::size_t>(0));
    const std::vector<double> plateau{0.1, 0.2, 0.2, 0.6};
    CHECK(scenario_mtd(plateau, 0.3, kEI) == std::optional<std::size_t>(2));
    const std::vector<double> high{0.1, 0.4, 0.4};
    CHECK(scenario_mtd(high, 0.3, kEI) == std::optional<std::size_t>(1));
    CHECK_THROWS(make_scenario({0.3, 0.2}, 0.3, kEI));
    CHECK_THROWS(make_scenario({0.3, 1.2}, 0.3, kEI));
}

TEST_CASE("equivalence interval of a design")
{
    const Interval ei = equivalence_interval(DesignConfig{});
    CHECK(ei.lo == doctest::Approx(0.25));
    CHECK(ei.hi == doctest::Approx(0.35));
    CHECK_FALSE(ei.contains(0.25));
}

TEST_CASE("random scenarios are monotone with a consistent MTD")
{
    Stream s(5);
    const ScenarioSupport all{true, true};
    for (int t = 0; t < 10000; ++t) {
        const std::size_t T = 2 + static_cast<std::size_t>(t % 6);
        const Scenario sc = random_scenario(T, 0.3, kEI, s, all);
        REQUIRE(sc.probs.size() == T);
        for (std::size_t d = 0; d < T; ++d) {
            REQUIRE((sc.probs[d] >= 0.0 && sc.probs[d] <= 1.0));
            if (d > 0)
                REQUIRE(sc.probs[d] >= sc.probs[d - 1]);
        }
        REQUIRE(sc.mtd == scenario_mtd(sc.probs, 0.3, kEI));
        if (sc.label.rfind("pos", 0) == 0) {
            const std::size_t k = std::stoul(sc.label.substr(3)) - 1;
            REQUIRE(sc.mtd == std::optional<std::size_t>(k));
            for (std::size_t d = 0; d < T; ++d)
                REQUIRE(kEI.contains(sc.probs[d]) == (d == k));
        } else if (sc.label == "none-above") {
            REQUIRE_FALSE(sc.mtd.has_value());
        } else {
            REQUIRE(sc.label == "none-below");
            REQUIRE(sc.probs.back() <= kEI.lo);
            REQUIRE(sc.mtd == std::optional<std::size_t>(T - 1));
        }
    }
}

TEST_CASE("MTD position is uniform over its support")
{
    for (const ScenarioSupport support : {ScenarioSupport{}, ScenarioSupport{true, true}}) {
        const std::size_t T = 5;
        const std::size_t categories = T + support.none_above + support.none_below;
        Stream s(6);
        std::map<std::string, int> counts;
        const int draws = 100000;
        for (int t = 0; t < draws; ++t)
            ++counts[random_scenario(T, 0.3, kEI, s, support).label];
        CHECK(counts.size() == categories);
        for (const auto& [label, c] : counts)
            CHECK(std::fabs(double(c) / draws - 1.0 / double(categories)) < 0.02);
    }
}

TEST_CASE("random scenario sets are reproducible and cycle dose counts")
{
    const std::vector<std::size_t> counts{4, 5, 6};
    const std::vector<Scenario> a = random_scenarios(30, counts, 0.3, kEI, 9);
    const std::vector<Scenario> b = random_scenarios(30, counts, 0.3, kEI, 9);
    const std::vector<Scenario> c = random_scenarios(30, counts, 0.3, kEI, 10);
    REQUIRE(a.size() == 30);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].probs == b[i].probs);
        CHECK(a[i].probs.size() == counts[i % 3]);
        differs |= a[i].probs != c[i].probs;
    }
    CHECK(differs);
}

TEST_CASE("fixed scenarios")
{
    const std::vector<Scenario> f = fixed_scenarios();
    REQUIRE(f.size() == 15);
    std::map<std::size_t, int> by_T;
    for (const Scenario& s : f) {
        ++by_T[s.probs.size()];
        CHECK(std::is_sorted(s.probs.begin(), s.probs.end()));
        CHECK(s.mtd == scenario_mtd(s.probs, 0.3, kEI));
    }
    CHECK(by_T == std::map<std::size_t, int>{{4, 5}, {5, 5}, {6, 5}});
    CHECK_FALSE(f[4].mtd.has_value()); // T4-none

    std::ifstream in(std::string(DOSEFRAME_SOURCE_DIR) + "/data/fixed_scenarios.csv");
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == std::string(fixed_scenario_text()));
}

TEST_CASE("scenario file parsing")
{
    std::istringstream good("# comment\n\n3,0.1,0.3,0.5,low\n2,0.4,0.6\n");
    const std::vector<Scenario> s = parse_scenarios(good, 0.3, kEI);
    REQUIRE(s.size() == 2);
    CHECK(s[0].label == "low");
    CHECK(s[0].mtd == std::optional<std::size_t>(1));
    CHECK_FALSE(s[1].mtd.has_value());

    auto error_of = [](const std::string& text) {
        std::istringstream is(text);
        try {
            parse_scenarios(is, 0.3, kEI);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(error_of("3,0.1,0.3,0.5\n3,0.1,0.3\n").find("line 2") != std::string::npos);
    CHECK(error_of("2,0.5,0.3\n").find("line 1") != std::string::npos);
    CHECK(error_of("x,0.5,0.3\n").find("line 1") != std::string::npos);
    CHECK(error_of("2,0.1,abc\n").find("line 1") != std::string::npos);
}

TEST_CASE("scenario write/parse round trip")
{
    const std::vector<Scenario> a = random_scenarios(20, std::vector<std::size_t>{4, 6}, 0.3, kEI, 3);
    std::ostringstream os;
    write_scenarios(os, a);
    std::istringstream is(os.str());
    const std::vector<Scenario> b = parse_scenarios(is, 0.3, kEI);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].probs == b[i].probs);
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].mtd == b[i].mtd);
    }
}

TEST_CASE("one replicate gives 0/1 selection metrics")
{
    const std::vector<Scenario> sc{make_scenario({0.05, 0.3, 0.5}, 0.3, kEI)};
    const auto res = evaluate(designs({DesignKind::mTPI, DesignKind::CRM}), sc, small_settings(1));
    for (const DesignResult& r : res) {
        const ScenarioMetrics& m = r.per_scenario[0];
        for (double v : {m.correct_sel, m.sel_over, m.none_sel})
            CHECK((v == 0.0 || v == 1.0));
        CHECK(r.summary.correct_sel.sd == 0.0);
    }
}

TEST_CASE("all-zero truth: MTD is the top dose, nobody is over it")
{
    const std::vector<Scenario> sc{make_scenario({0.0, 0.0, 0.0, 0.0}, 0.3, kEI)};
    REQUIRE(sc[0].mtd == std::optional<std::size_t>(3));
    const auto res = evaluate(designs({DesignKind::mTPI, DesignKind::BOIN, DesignKind::IntCRM, DesignKind::i3plus3}),
                              sc, small_settings(20));
    for (const DesignResult& r : res) {
        CHECK(r.per_scenario[0].pat_over == 0.0);
        CHECK(r.per_scenario[0].correct_sel == 1.0);
        CHECK(r.per_scenario[0].tox == 0.0);
    }
}

TEST_CASE("metric bounds")
{
    const std::vector<Scenario> sc = fixed_scenarios();
    const auto res = evaluate(designs({DesignKind::mTPI2, DesignKind::CCD, DesignKind::CRM}), sc, small_settings(30));
    for (const DesignResult& r : res) {
        for (std::size_t i = 0; i < sc.size(); ++i) {
            const ScenarioMetrics& m = r.per_scenario[i];
            if (sc[i].mtd)
                REQUIRE(m.correct_sel + m.sel_over + m.none_sel <= 1.0 + 1e-12);
            for (double v : metric_values(m))
                REQUIRE((v >= 0.0 && v <= 1.0));
            REQUIRE(m.pat_at_mtd + m.pat_over <= 1.0 + 1e-12);
        }
        for (const MeanSd& v : metric_values(r.summary)) {
            REQUIRE((v.mean >= 0.0 && v.mean <= 1.0));
            REQUIRE(v.sd >= 0.0);
        }
    }
}

TEST_CASE("summary uses the sample standard deviation")
{
    std::vector<ScenarioMetrics> m(3);
    m[0].correct_sel = 0.2;
    m[1].correct_sel = 0.4;
    m[2].correct_sel = 0.9;
    const OperatingCharacteristics oc = summarize(m);
    CHECK(oc.correct_sel.mean == doctest::Approx(0.5));
    CHECK(oc.correct_sel.sd == doctest::Approx(std::sqrt((0.09 + 0.01 + 0.16) / 2.0)));
}

TEST_CASE("evaluation does not depend on worker count or on other designs")
{
    const std::vector<Scenario> sc = random_scenarios(12, std::vector<std::size_t>{4, 5, 6}, 0.3, kEI, 8);
    SimSettings one = small_settings(25);
    SimSettings three = one;
    three.workers = 3;
    const auto a = evaluate(designs({DesignKind::mTPI, DesignKind::IntCRM}), sc, one);
    const auto b = evaluate(designs({DesignKind::mTPI, DesignKind::IntCRM}), sc, three);
    const auto c = evaluate(designs({DesignKind::BOIN, DesignKind::mTPI}), sc, three);
    for (std::size_t i = 0; i < sc.size(); ++i) {
        CHECK(metric_values(a[0].per_scenario[i]) == metric_values(b[0].per_scenario[i]));
        CHECK(metric_values(a[1].per_scenario[i]) == metric_values(b[1].per_scenario[i]));
        CHECK(metric_values(a[0].per_scenario[i]) == metric_values(c[1].per_scenario[i]));
    }
    std::ostringstream x, y;
    write_summary_csv(x, a);
    write_summary_csv(y, b);
    CHECK(x.str() == y.str());
}

TEST_CASE("replicate count changes estimates only by Monte Carlo error")
{
    const std::vector<Scenario> sc = fixed_scenarios();
    const std::vector<Scenario> some(sc.begin(), sc.begin() + 5);
    const auto lo = evaluate(designs({DesignKind::mTPI}), some, small_settings(1000));
    const auto hi = evaluate(designs({DesignKind::mTPI}), some, small_settings(4000));
    for (std::size_t i = 0; i < some.size(); ++i) {
        const double p = hi[0].per_scenario[i].correct_sel;
        // Replicates 0..999 are shared, so the difference is driven by the
        // 3000 extra trials: sd of the difference is 0.75 sqrt(p(1-p)/1000 + ...).
        const double se = std::sqrt(std::max(p * (1 - p), 0.01) * (1.0 / 1000 - 1.0 / 4000));
        CHECK(std::fabs(lo[0].per_scenario[i].correct_sel - p) < 4.5 * se);
    }
}

TEST_CASE("BOIN and CCD trajectories coincide")
{
    const std::vector<Scenario> sc = random_scenarios(10, std::vector<std::size_t>{4, 5, 6}, 0.3, kEI, 4);
    DesignConfig boin, ccd;
    boin.design = DesignKind::BOIN;
    ccd.design = DesignKind::CCD;
    const TrajectoryAgreement agree = compare_trajectories(boin, ccd, sc, small_settings(50));
    CHECK(agree.trials == 500);
    CHECK(agree.identical == 500);

    DesignConfig wide = boin;
    wide.boin_phi_e = 0.18;
    wide.boin_phi_d = 0.42;
    const TrajectoryAgreement differ = compare_trajectories(wide, ccd, sc, small_settings(50));
    CHECK(differ.identical < differ.trials);
}

TEST_CASE("output formats")
{
    const std::vector<Scenario> sc{make_scenario({0.05, 0.3, 0.5}, 0.3, kEI, "a")};
    const auto res = evaluate(designs({DesignKind::mTPI, DesignKind::mTPI}), sc, small_settings(10));
    CHECK(res[1].name == "mTPI#2");
    std::ostringstream csv, per;
    write_summary_csv(csv, res);
    write_per_scenario_csv(per, res, sc);
    const std::string summary = csv.str();
    CHECK(summary.rfind("design,metric,mean,sd\nmTPI,correct_sel,", 0) == 0);
    CHECK(per.str().rfind("design,scenario,label,T,metric,value\nmTPI,1,a,3,correct_sel,", 0) == 0);
    // 2 designs x 6 metrics plus the header.
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 13);
    CHECK(summary.find("mTPI#2,none_sel,") != std::string::npos);
}
