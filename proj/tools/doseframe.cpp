// doseframe: decision tables, simulation, verification and single
// decisions for interval dose-finding designs.

#include "doseframe/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace doseframe;

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::string seed;
    unsigned workers = 0;
    std::string out_dir;
    std::string format;
};

RunConfig resolve(const Globals& g)
{
    RunConfig rc = g.config_path.empty() ? parse_config("{}") : load_config(g.config_path);
    if (const char* env = std::getenv("SEED"); env && *env)
        rc.sim.seed = parse_seed(env, "SEED");
    if (!g.seed.empty())
        rc.sim.seed = parse_seed(g.seed, "--seed");
    rc.verify.seed = rc.sim.seed;
    if (g.workers > 0)
        rc.sim.workers = g.workers;
    if (!g.out_dir.empty())
        rc.out_dir = g.out_dir;
    if (!g.format.empty()) {
        try {
            rc.format = parse_table_format(g.format);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--format: ") + e.what());
        }
    }
    return rc;
}

std::string file_stem(const std::string& name)
{
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else if (c == '+')
            out += 'p';
        else
            out += '-';
    }
    return out;
}

std::ofstream open_output(const fs::path& path)
{
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw InputError(path.string() + ": cannot open for writing");
    return os;
}

const char* extension(TableFormat f) { return f == TableFormat::Csv ? ".csv" : ".txt"; }

// ---------------------------------------------------------------------------

int cmd_table(const Globals& g, const std::vector<std::string>& design_names, int max_n)
{
    RunConfig rc = resolve(g);
    std::vector<NamedDesign> designs;
    if (!design_names.empty()) {
        for (const std::string& n : design_names) {
            DesignConfig cfg;
            try {
                cfg.design = parse_design(n);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("--design: ") + e.what());
            }
            designs.push_back({std::string(design_name(cfg.design)), cfg});
        }
    } else if (g.config_path.empty()) {
        for (const NamedDesign& d : default_designs())
            if (is_tally_design(d.config.design))
                designs.push_back(d);
    } else {
        designs = rc.designs;
    }

    for (std::size_t i = 0; i < designs.size(); ++i)
        if (!is_tally_design(designs[i].config.design))
            throw ConfigError("designs[" + std::to_string(i) + "].design: " +
                              std::string(design_name(designs[i].config.design)) +
                              " decisions depend on the whole history; no decision table exists");

    for (const NamedDesign& d : designs) {
        const DecisionTable table = build_table(d.config, max_n > 0 ? max_n : rc.trial.max_n);
        const fs::path path = fs::path(rc.out_dir) / ("table_" + file_stem(d.name) + extension(rc.format));
        std::ofstream os = open_output(path);
        emit(os, table, rc.format);
        std::cout << path.string() << '\n';
    }
    return 0;
}

std::vector<Scenario> load_scenarios(const RunConfig& rc, const DesignConfig& ref)
{
    const Interval ei = equivalence_interval(ref);
    if (rc.sim.scenarios == "fixed")
        return fixed_scenarios(ref.target, ei);
    if (rc.sim.scenarios == "random")
        return random_scenarios(rc.sim.n_random, rc.sim.dose_counts, ref.target, ei, rc.sim.seed, rc.sim.support);
    std::ifstream in(rc.sim.scenarios);
    if (!in)
        throw ConfigError("sim.scenarios: cannot open '" + rc.sim.scenarios + "'");
    try {
        return parse_scenarios(in, ref.target, ei);
    } catch (const std::invalid_argument& e) {
        throw InputError(rc.sim.scenarios + ": " + e.what());
    }
}

int cmd_simulate(const Globals& g, int replicates)
{
    RunConfig rc = resolve(g);
    if (replicates > 0)
        rc.sim.replicates = replicates;
    const DesignConfig& ref = rc.designs.front().config;
    for (std::size_t i = 1; i < rc.designs.size(); ++i) {
        const DesignConfig& c = rc.designs[i].config;
        if (c.target != ref.target || c.eps1 != ref.eps1 || c.eps2 != ref.eps2)
            throw ConfigError("designs[" + std::to_string(i) +
                              "].p_T: every simulated design must share p_T, eps1 and eps2 with designs[0]");
    }

    const std::vector<Scenario> scenarios = load_scenarios(rc, ref);
    if (scenarios.empty())
        throw InputError("sim.scenarios: no scenarios");

    std::set<std::size_t> dose_counts;
    for (const Scenario& s : scenarios)
        dose_counts.insert(s.probs.size());
    for (std::size_t i = 0; i < rc.designs.size(); ++i)
        for (std::size_t T : dose_counts) {
            try {
                TrialSpec spec{rc.designs[i].config, T, rc.trial.max_n, rc.trial.cohort_size, rc.trial.start_dose};
                spec.validate();
                DecisionEngine check(spec.design, T);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("designs[" + std::to_string(i) + "]." + e.what() + " (scenarios with T = " +
                                  std::to_string(T) + ")");
            }
        }

    SimSettings settings;
    settings.max_n = rc.trial.max_n;
    settings.cohort_size = rc.trial.cohort_size;
    settings.start_dose = rc.trial.start_dose;
    settings.replicates = rc.sim.replicates;
    settings.seed = rc.sim.seed;
    settings.workers = rc.sim.workers.value_or(std::max(1u, std::thread::hardware_concurrency()));

    std::vector<DesignConfig> configs;
    for (const NamedDesign& d : rc.designs)
        configs.push_back(d.config);
    std::vector<DesignResult> results = evaluate(configs, scenarios, settings);
    for (std::size_t i = 0; i < results.size(); ++i)
        results[i].name = rc.designs[i].name;

    const fs::path dir(rc.out_dir);
    {
        std::ofstream os = open_output(dir / (std::string("summary") + extension(rc.format)));
        if (rc.format == TableFormat::Csv)
            write_summary_csv(os, results);
        else
            write_summary_txt(os, results);
    }
    {
        std::ofstream os = open_output(dir / "per_scenario.csv");
        write_per_scenario_csv(os, results, scenarios);
    }
    {
        std::ofstream os = open_output(dir / "scenarios.csv");
        write_scenarios(os, scenarios);
    }
    std::cout << "# seed=" << settings.seed << ", scenarios=" << scenarios.size()
              << ", replicates=" << settings.replicates << '\n';
    write_summary_txt(std::cout, results);
    return 0;
}

int cmd_verify(const Globals& g, std::optional<double> perturb)
{
    RunConfig rc = resolve(g);
    if (perturb)
        rc.verify.perturb_lambda1 = *perturb;
    const std::vector<CheckResult> results = run_verification(rc.verify);
    std::ofstream os = open_output(fs::path(rc.out_dir) / "certificate.txt");
    write_certificate(os, results);
    write_certificate(std::cout, results);
    return all_passed(results) ? 0 : 1;
}

std::vector<PatientOutcome> read_history(const std::string& path, std::size_t doses)
{
    std::ifstream in(path);
    if (!in)
        throw InputError(path + ": cannot open history file");
    std::vector<PatientOutcome> out;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        std::replace(line.begin(), line.end(), ',', ' ');
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream ss(line);
        long dose = 0;
        int dlt = -1;
        std::string rest;
        if (!(ss >> dose >> dlt) || (ss >> rest) || dose < 1 || static_cast<std::size_t>(dose) > doses ||
            (dlt != 0 && dlt != 1))
            throw InputError(path + ": line " + std::to_string(lineno) + ": expected 'dose dlt' with dose in 1.." +
                             std::to_string(doses) + " and dlt 0 or 1");
        out.push_back({static_cast<std::size_t>(dose - 1), dlt == 1});
    }
    return out;
}

int cmd_decide(const Globals& g, const std::string& design, std::optional<int> n, std::optional<int> y,
               const std::string& history_path, std::size_t doses_flag)
{
    RunConfig rc = resolve(g);
    DesignConfig cfg;
    try {
        cfg.design = parse_design(design);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("design: ") + e.what());
    }
    if (!g.config_path.empty()) {
        auto it = std::find_if(rc.designs.begin(), rc.designs.end(),
                               [&](const NamedDesign& d) { return d.config.design == cfg.design; });
        if (it != rc.designs.end())
            cfg = it->config;
    }

    if (is_tally_design(cfg.design)) {
        if (!n || !y)
            throw InputError("decide: " + std::string(design_name(cfg.design)) + " needs N and Y");
        if (*n < 1 || *y < 0 || *y > *n)
            throw InputError("decide: need N >= 1 and 0 <= Y <= N (got N=" + std::to_string(*n) +
                             ", Y=" + std::to_string(*y) + ")");
        const DoseState s(*n, *y);
        if (excess_toxicity_prob(s, cfg.target) > cfg.safety_threshold)
            std::cout << entry_tag(TableEntry::DU) << '\n';
        else
            std::cout << move_tag(tally_decide(cfg, s)) << '\n';
        return 0;
    }

    if (history_path.empty())
        throw InputError("decide: " + std::string(design_name(cfg.design)) +
                         " needs --history FILE (one 'dose dlt' pair per line)");
    const std::size_t T = doses_flag > 0 ? doses_flag : rc.trial.doses;
    const std::vector<PatientOutcome> history = read_history(history_path, T);
    std::size_t dose = 0;
    try {
        dose = cfg.design == DesignKind::IntCRM ? intcrm_decide(cfg, T, history, std::min(rc.trial.start_dose, T - 1))
                                                : crm_decide(cfg, T, history);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("design.") + e.what());
    }
    std::cout << dose + 1 << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Interval dose-finding designs: decision tables, simulation and verification"};
    app.fallthrough();
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Master seed (unsigned 64-bit); overrides SEED and the config");
    app.add_option("--workers", g.workers, "Simulation worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out_dir, "Output directory (default: out)");
    app.add_option("--format", g.format, "Table/summary format: csv or txt");

    auto* table = app.add_subcommand("table", "Write one decision table per configured tally design");
    std::vector<std::string> table_designs;
    int table_max_n = 0;
    table->add_option("--design", table_designs, "Design(s) to tabulate with default parameters");
    table->add_option("--max-n", table_max_n, "Largest n in the table (default: trial.max_n)");

    auto* simulate = app.add_subcommand("simulate", "Operating characteristics over a scenario set");
    int replicates = 0;
    simulate->add_option("--replicates", replicates, "Trials per scenario (default: sim.replicates)");

    auto* verify = app.add_subcommand("verify", "Check the design rules against the Bayes rule");
    std::optional<double> perturb;
    verify->add_option("--perturb-lambda1", perturb, "Shift BOIN's escalation boundary (mutation test)");

    auto* decide = app.add_subcommand("decide", "Print one decision");
    std::string design;
    std::optional<int> n;
    std::optional<int> y;
    std::string history;
    std::size_t doses = 0;
    decide->add_option("design", design, "Design name")->required();
    decide->add_option("n", n, "Patients treated at the current dose");
    decide->add_option("y", y, "DLTs among them");
    decide->add_option("--history", history, "Int-CRM/CRM history: 'dose dlt' per line, doses 1-based");
    decide->add_option("--doses", doses, "Number of doses for --history (default: trial.doses)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*table)
            return cmd_table(g, table_designs, table_max_n);
        if (*simulate)
            return cmd_simulate(g, replicates);
        if (*verify)
            return cmd_verify(g, perturb);
        if (*decide)
            return cmd_decide(g, design, n, y, history, doses);
    } catch (const ConfigError& e) {
        std::cerr << "doseframe: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "doseframe: error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
