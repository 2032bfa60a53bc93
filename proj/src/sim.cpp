#include "doseframe/sim.hpp"

#include "doseframe/format.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace doseframe {

namespace {

constexpr std::string_view kFixedScenarios = R"(# Curated scenarios, p_T = 0.3 with EI (0.25, 0.35). Not taken from any
# publication; chosen to cover every MTD position and the no-MTD case.
4,0.30,0.45,0.60,0.75,T4-mtd1
4,0.10,0.30,0.45,0.60,T4-mtd2
4,0.05,0.12,0.29,0.45,T4-mtd3
4,0.02,0.06,0.12,0.31,T4-mtd4
4,0.45,0.55,0.65,0.80,T4-none
5,0.28,0.42,0.55,0.65,0.75,T5-mtd1
5,0.12,0.30,0.48,0.60,0.72,T5-mtd2
5,0.08,0.15,0.30,0.45,0.60,T5-mtd3
5,0.05,0.10,0.20,0.31,0.50,T5-mtd4
5,0.02,0.05,0.08,0.12,0.30,T5-mtd5
6,0.30,0.40,0.50,0.60,0.70,0.80,T6-mtd1
6,0.10,0.18,0.33,0.48,0.60,0.70,T6-mtd3
6,0.05,0.10,0.15,0.29,0.45,0.60,T6-mtd4
6,0.04,0.08,0.14,0.22,0.32,0.50,T6-mtd5
6,0.01,0.03,0.05,0.10,0.15,0.20,T6-below
)";

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_number(const std::string& field, double& out)
{
    const char* first = field.data();
    const char* last = first + field.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

double sample_sd(std::span<const double> xs, double mean)
{
    if (xs.size() < 2)
        return 0.0;
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Per-scenario accumulators for one design.
struct Tally {
    long trials = 0;
    long correct = 0;
    long over = 0;
    long none = 0;
    long patients = 0;
    long at_mtd = 0;
    long above_mtd = 0;
    long dlts = 0;

    void add(const TrialResult& r, const std::optional<std::size_t>& mtd)
    {
        ++trials;
        if (!r.mtd)
            ++none;
        if (mtd) {
            if (r.mtd && *r.mtd == *mtd)
                ++correct;
            if (r.mtd && *r.mtd > *mtd)
                ++over;
        } else {
            if (!r.mtd)
                ++correct;
            else
                ++over;
        }
        for (std::size_t d = 0; d < r.state.doses.size(); ++d) {
            const DoseState& s = r.state.doses[d];
            patients += s.n;
            dlts += s.y;
            if (mtd) {
                if (d == *mtd)
                    at_mtd += s.n;
                else if (d > *mtd)
                    above_mtd += s.n;
            } else {
                above_mtd += s.n;
            }
        }
    }

    ScenarioMetrics metrics() const
    {
        const auto t = static_cast<double>(trials);
        const double p = patients > 0 ? static_cast<double>(patients) : 1.0;
        return {correct / t, over / t, at_mtd / p, above_mtd / p, dlts / p, none / t};
    }
};

TrialSpec spec_for(const DesignConfig& cfg, std::size_t T, const SimSettings& s)
{
    TrialSpec spec;
    spec.design = cfg;
    spec.doses = T;
    spec.max_n = s.max_n;
    spec.cohort_size = s.cohort_size;
    spec.start_dose = s.start_dose;
    spec.validate();
    return spec;
}

// Engines per (design, dose count), owned by one worker.
class EnginePool {
public:
    explicit EnginePool(std::span<const DesignConfig> designs) : designs_(designs) {}

    DecisionEngine& get(std::size_t design, std::size_t T)
    {
        const auto key = std::make_pair(design, T);
        auto it = engines_.find(key);
        if (it == engines_.end())
            it = engines_.emplace(key, DecisionEngine(designs_[design], T)).first;
        return it->second;
    }

private:
    std::span<const DesignConfig> designs_;
    std::map<std::pair<std::size_t, std::size_t>, DecisionEngine> engines_;
};

template <typename Task>
void run_parallel(std::size_t items, unsigned workers, Task task)
{
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(items, 1))));
    std::atomic<std::size_t> next{0};
    auto body = [&](unsigned worker) {
        for (std::size_t i = next++; i < items; i = next++)
            task(worker, i);
    };
    if (n == 1) {
        body(0);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(n);
    for (unsigned w = 0; w < n; ++w)
        threads.emplace_back([&, w] {
            try {
                body(w);
            } catch (...) {
                errors[w] = std::current_exception();
                next = items;
            }
        });
    for (auto& t : threads)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace

std::optional<std::size_t> scenario_mtd(std::span<const double> probs, double target, const Interval& ei)
{
    if (probs.empty())
        return std::nullopt;
    if (probs.front() > ei.hi || (ei.hi_closed == false && probs.front() == ei.hi))
        return std::nullopt;
    std::size_t best = 0;
    for (std::size_t d = 1; d < probs.size(); ++d) {
        const double dist = std::abs(probs[d] - target);
        const double best_dist = std::abs(probs[best] - target);
        // A plateau below target: the highest dose on it.
        if (dist < best_dist || (probs[d] == probs[best] && probs[d] < target))
            best = d;
    }
    return best;
}

Scenario make_scenario(std::vector<double> probs, double target, const Interval& ei, std::string label)
{
    if (probs.empty())
        throw std::invalid_argument("scenario: no doses");
    for (std::size_t d = 0; d < probs.size(); ++d) {
        if (!(probs[d] >= 0.0 && probs[d] <= 1.0))
            throw std::invalid_argument("scenario: probability of dose " + std::to_string(d + 1) +
                                        " outside [0, 1]");
        if (d > 0 && probs[d] < probs[d - 1])
            throw std::invalid_argument("scenario: probabilities must be nondecreasing (dose " +
                                        std::to_string(d + 1) + ")");
    }
    Scenario s;
    s.mtd = scenario_mtd(probs, target, ei);
    s.probs = std::move(probs);
    s.label = std::move(label);
    return s;
}

Interval equivalence_interval(const DesignConfig& cfg) { return {cfg.stay_lo(), cfg.stay_hi(), false, false}; }

Scenario random_scenario(std::size_t T, double target, const Interval& ei, Stream& stream,
                         const ScenarioSupport& support)
{
    if (T < 2)
        throw std::invalid_argument("random_scenario: need at least two doses");
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * stream.uniform(); };
    auto sorted_draws = [&](std::size_t count, double lo, double hi) {
        std::vector<double> v(count);
        for (double& x : v)
            x = uniform(lo, hi);
        std::sort(v.begin(), v.end());
        return v;
    };

    std::vector<std::size_t> categories(T);
    for (std::size_t k = 0; k < T; ++k)
        categories[k] = k;
    if (support.none_above)
        categories.push_back(T);
    if (support.none_below)
        categories.push_back(T + 1);
    const auto pick = static_cast<std::size_t>(stream.uniform() * static_cast<double>(categories.size()));
    const std::size_t position = categories[pick];

    std::vector<double> probs;
    std::string label;
    if (position == T) {
        // Lowest dose above the EI.
        const double first = uniform(ei.hi, 1.0);
        probs = sorted_draws(T - 1, first, 1.0);
        probs.insert(probs.begin(), first);
        label = "none-above";
    } else if (position == T + 1) {
        probs = sorted_draws(T, 0.0, ei.lo);
        label = "none-below";
    } else {
        probs.assign(T, 0.0);
        probs[position] = uniform(ei.lo, ei.hi);
        double ceiling = ei.lo;
        for (std::size_t d = position; d-- > 0;)
            ceiling = probs[d] = uniform(0.0, ceiling);
        const std::vector<double> upper = sorted_draws(T - position - 1, ei.hi, 1.0);
        std::copy(upper.begin(), upper.end(), probs.begin() + static_cast<long>(position) + 1);
        label = "pos" + std::to_string(position + 1);
    }
    return make_scenario(std::move(probs), target, ei, std::move(label));
}

std::vector<Scenario> random_scenarios(std::size_t n, std::span<const std::size_t> dose_counts, double target,
                                       const Interval& ei, std::uint64_t seed, const ScenarioSupport& support)
{
    if (dose_counts.empty())
        throw std::invalid_argument("random_scenarios: no dose counts");
    std::vector<Scenario> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Stream stream = Stream::derive(seed, 0x5CE7A210ULL, k);
        out.push_back(random_scenario(dose_counts[k % dose_counts.size()], target, ei, stream, support));
    }
    return out;
}

std::string_view fixed_scenario_text() { return kFixedScenarios; }

std::vector<Scenario> fixed_scenarios(double target, const Interval& ei)
{
    std::istringstream is{std::string(kFixedScenarios)};
    return parse_scenarios(is, target, ei);
}

std::vector<Scenario> parse_scenarios(std::istream& is, double target, const Interval& ei)
{
    std::vector<Scenario> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#')
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(text);
        for (std::string f; std::getline(ss, f, ',');)
            fields.push_back(trim(f));
        const std::string where = "scenario line " + std::to_string(lineno) + ": ";

        double t_value = 0.0;
        if (!parse_number(fields[0], t_value) || t_value < 1 || t_value != std::floor(t_value))
            throw std::invalid_argument(where + "first field must be the dose count");
        const auto T = static_cast<std::size_t>(t_value);
        if (fields.size() != T + 1 && fields.size() != T + 2)
            throw std::invalid_argument(where + "expected " + std::to_string(T) + " probabilities");
        std::vector<double> probs(T);
        for (std::size_t d = 0; d < T; ++d)
            if (!parse_number(fields[d + 1], probs[d]))
                throw std::invalid_argument(where + "bad probability '" + fields[d + 1] + "'");
        std::string label = fields.size() == T + 2 ? fields.back() : std::string();
        try {
            out.push_back(make_scenario(std::move(probs), target, ei, std::move(label)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    return out;
}

void write_scenarios(std::ostream& os, std::span<const Scenario> scenarios)
{
    for (const Scenario& s : scenarios) {
        os << s.probs.size();
        for (double p : s.probs)
            os << ',' << format_double(p);
        if (!s.label.empty())
            os << ',' << s.label;
        os << '\n';
    }
}

// ---------------------------------------------------------------------------

std::array<double, 6> metric_values(const ScenarioMetrics& m)
{
    return {m.correct_sel, m.sel_over, m.pat_at_mtd, m.pat_over, m.tox, m.none_sel};
}

std::array<MeanSd, 6> metric_values(const OperatingCharacteristics& oc)
{
    return {oc.correct_sel, oc.sel_over, oc.pat_at_mtd, oc.pat_over, oc.tox, oc.none_sel};
}

OperatingCharacteristics summarize(std::span<const ScenarioMetrics> per_scenario)
{
    std::array<MeanSd, 6> out{};
    for (std::size_t m = 0; m < out.size(); ++m) {
        std::vector<double> xs;
        xs.reserve(per_scenario.size());
        for (const ScenarioMetrics& s : per_scenario)
            xs.push_back(metric_values(s)[m]);
        double sum = 0.0;
        for (double x : xs)
            sum += x;
        const double mean = xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
        out[m] = {mean, sample_sd(xs, mean)};
    }
    return {out[0], out[1], out[2], out[3], out[4], out[5]};
}

std::vector<DesignResult> evaluate(std::span<const DesignConfig> designs, std::span<const Scenario> scenarios,
                                   const SimSettings& settings)
{
    if (settings.replicates < 1)
        throw std::invalid_argument("replicates: must be at least 1");
    if (designs.empty())
        throw std::invalid_argument("evaluate: no designs");

    // Validate every (design, dose count) pair before spawning work.
    for (const DesignConfig& cfg : designs)
        for (const Scenario& s : scenarios)
            spec_for(cfg, s.probs.size(), settings);

    const unsigned workers = std::max(1u, settings.workers);
    std::vector<EnginePool> pools;
    for (unsigned w = 0; w < workers; ++w)
        pools.emplace_back(designs);

    std::vector<std::vector<ScenarioMetrics>> metrics(designs.size(), std::vector<ScenarioMetrics>(scenarios.size()));
    run_parallel(scenarios.size(), workers, [&](unsigned worker, std::size_t si) {
        const Scenario& sc = scenarios[si];
        const std::size_t T = sc.probs.size();
        std::vector<Tally> tallies(designs.size());
        std::vector<TrialSpec> specs;
        for (const DesignConfig& cfg : designs)
            specs.push_back(spec_for(cfg, T, settings));
        for (int r = 0; r < settings.replicates; ++r) {
            for (std::size_t di = 0; di < designs.size(); ++di) {
                Stream stream = Stream::derive(settings.seed, si, static_cast<std::uint64_t>(r));
                const TrialResult res = run_trial(specs[di], sc.probs, stream, pools[worker].get(di, T));
                tallies[di].add(res, sc.mtd);
            }
        }
        for (std::size_t di = 0; di < designs.size(); ++di)
            metrics[di][si] = tallies[di].metrics();
    });

    std::vector<DesignResult> results;
    std::map<std::string, int> seen;
    for (std::size_t di = 0; di < designs.size(); ++di) {
        DesignResult r;
        r.name = std::string(design_name(designs[di].design));
        if (const int k = seen[r.name]++; k > 0)
            r.name += "#" + std::to_string(k + 1);
        r.design = designs[di];
        r.per_scenario = std::move(metrics[di]);
        r.summary = summarize(r.per_scenario);
        results.push_back(std::move(r));
    }
    return results;
}

TrajectoryAgreement compare_trajectories(const DesignConfig& a, const DesignConfig& b,
                                         std::span<const Scenario> scenarios, const SimSettings& settings)
{
    TrajectoryAgreement out;
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const Scenario& sc = scenarios[si];
        const std::size_t T = sc.probs.size();
        const TrialSpec sa = spec_for(a, T, settings);
        const TrialSpec sb = spec_for(b, T, settings);
        DecisionEngine ea(a, T);
        DecisionEngine eb(b, T);
        for (int r = 0; r < settings.replicates; ++r) {
            Stream s1 = Stream::derive(settings.seed, si, static_cast<std::uint64_t>(r));
            Stream s2 = Stream::derive(settings.seed, si, static_cast<std::uint64_t>(r));
            const TrialResult ra = run_trial(sa, sc.probs, s1, ea);
            const TrialResult rb = run_trial(sb, sc.probs, s2, eb);
            ++out.trials;
            if (ra.mtd == rb.mtd && trajectory_string(ra.state) == trajectory_string(rb.state))
                ++out.identical;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void write_summary_csv(std::ostream& os, std::span<const DesignResult> results)
{
    os << "design,metric,mean,sd\n";
    for (const DesignResult& r : results) {
        const auto values = metric_values(r.summary);
        for (std::size_t m = 0; m < values.size(); ++m)
            os << r.name << ',' << kMetricNames[m] << ',' << format_double(values[m].mean, 6) << ','
               << format_double(values[m].sd, 6) << '\n';
    }
}

void write_summary_txt(std::ostream& os, std::span<const DesignResult> results)
{
    constexpr int kWidth = 16;
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w)
            s.insert(0, w - s.size(), ' ');
        return s;
    };
    os << pad("metric", 12);
    for (const DesignResult& r : results)
        os << pad(r.name, kWidth);
    os << '\n';
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        os << pad(std::string(kMetricNames[m]), 12);
        for (const DesignResult& r : results) {
            const MeanSd v = metric_values(r.summary)[m];
            os << pad(format_double(v.mean, 3) + " (" + format_double(v.sd, 3) + ")", kWidth);
        }
        os << '\n';
    }
}

void write_per_scenario_csv(std::ostream& os, std::span<const DesignResult> results,
                            std::span<const Scenario> scenarios)
{
    os << "design,scenario,label,T,metric,value\n";
    for (const DesignResult& r : results) {
        for (std::size_t si = 0; si < r.per_scenario.size(); ++si) {
            const auto values = metric_values(r.per_scenario[si]);
            for (std::size_t m = 0; m < values.size(); ++m)
                os << r.name << ',' << si + 1 << ',' << scenarios[si].label << ',' << scenarios[si].probs.size()
                   << ',' << kMetricNames[m] << ',' << format_double(values[m], 6) << '\n';
        }
    }
}

} // namespace doseframe
