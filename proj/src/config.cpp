#include "doseframe/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>

namespace doseframe {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object())
        fail(path.empty() ? "config" : path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            fail(join(path, it.key()), "unknown key");
}

double number(const json& v, const std::string& path)
{
    if (!v.is_number())
        fail(path, "expected a number");
    return v.get<double>();
}

long long integer(const json& v, const std::string& path, long long min)
{
    if (!v.is_number_integer())
        fail(path, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT32_MAX))
        fail(path, "too large");
    const long long x = v.get<long long>();
    if (x < min)
        fail(path, "must be at least " + std::to_string(min));
    return x;
}

bool boolean(const json& v, const std::string& path)
{
    if (!v.is_boolean())
        fail(path, "expected true or false");
    return v.get<bool>();
}

std::string string(const json& v, const std::string& path)
{
    if (!v.is_string())
        fail(path, "expected a string");
    return v.get<std::string>();
}

/// Re-throws validation messages ("field: problem") under `path`.
template <class F>
void validated(const std::string& path, F&& f)
{
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + "." + e.what());
    }
}

DesignConfig parse_design_object(const json& obj, const std::string& path, std::string* name)
{
    check_keys(obj, path,
               {"design", "name", "p_T", "eps1", "eps2", "boin_phi_E", "boin_phi_D", "skeleton", "delta",
                "prior_mtd", "sigma2", "safety_threshold"});
    DesignConfig cfg;
    if (!obj.contains("design"))
        fail(join(path, "design"), "missing");
    try {
        cfg.design = parse_design(string(obj["design"], join(path, "design")));
    } catch (const std::invalid_argument& e) {
        fail(join(path, "design"), e.what());
    }
    if (name)
        *name = obj.contains("name") ? string(obj["name"], join(path, "name")) : std::string(design_name(cfg.design));
    if (obj.contains("p_T"))
        cfg.target = number(obj["p_T"], join(path, "p_T"));
    if (obj.contains("eps1"))
        cfg.eps1 = number(obj["eps1"], join(path, "eps1"));
    if (obj.contains("eps2"))
        cfg.eps2 = number(obj["eps2"], join(path, "eps2"));
    if (obj.contains("boin_phi_E"))
        cfg.boin_phi_e = number(obj["boin_phi_E"], join(path, "boin_phi_E"));
    if (obj.contains("boin_phi_D"))
        cfg.boin_phi_d = number(obj["boin_phi_D"], join(path, "boin_phi_D"));
    if (obj.contains("skeleton")) {
        const json& sk = obj["skeleton"];
        if (!sk.is_array())
            fail(join(path, "skeleton"), "expected an array of numbers");
        for (std::size_t i = 0; i < sk.size(); ++i)
            cfg.skeleton.push_back(number(sk[i], join(path, "skeleton[" + std::to_string(i) + "]")));
    }
    if (obj.contains("delta"))
        cfg.delta = number(obj["delta"], join(path, "delta"));
    if (obj.contains("prior_mtd"))
        cfg.prior_mtd = static_cast<int>(integer(obj["prior_mtd"], join(path, "prior_mtd"), 1));
    if (obj.contains("sigma2"))
        cfg.sigma2 = number(obj["sigma2"], join(path, "sigma2"));
    if (obj.contains("safety_threshold"))
        cfg.safety_threshold = number(obj["safety_threshold"], join(path, "safety_threshold"));
    validated(path, [&] { cfg.validate(); });
    return cfg;
}

void parse_trial(const json& obj, TrialSpec& trial)
{
    const std::string path = "trial";
    check_keys(obj, path, {"doses", "max_n", "cohort_size", "start_dose"});
    if (obj.contains("doses"))
        trial.doses = static_cast<std::size_t>(integer(obj["doses"], "trial.doses", 1));
    if (obj.contains("max_n"))
        trial.max_n = static_cast<int>(integer(obj["max_n"], "trial.max_n", 1));
    if (obj.contains("cohort_size"))
        trial.cohort_size = static_cast<int>(integer(obj["cohort_size"], "trial.cohort_size", 1));
    if (obj.contains("start_dose"))
        trial.start_dose = static_cast<std::size_t>(integer(obj["start_dose"], "trial.start_dose", 1) - 1);
    validated(path, [&] { trial.validate(); });
}

std::uint64_t seed_value(const json& v, const std::string& path)
{
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_string())
        return parse_seed(v.get<std::string>(), path);
    fail(path, "expected an unsigned 64-bit integer");
}

void parse_sim(const json& obj, SimSection& sim)
{
    check_keys(obj, "sim",
               {"scenarios", "n_random", "dose_counts", "none_above", "none_below", "replicates", "seed", "workers"});
    if (obj.contains("scenarios")) {
        sim.scenarios = string(obj["scenarios"], "sim.scenarios");
        if (sim.scenarios.empty())
            fail("sim.scenarios", "expected \"fixed\", \"random\" or a file path");
    }
    if (obj.contains("n_random"))
        sim.n_random = static_cast<std::size_t>(integer(obj["n_random"], "sim.n_random", 1));
    if (obj.contains("dose_counts")) {
        const json& dc = obj["dose_counts"];
        if (!dc.is_array() || dc.empty())
            fail("sim.dose_counts", "expected a non-empty array of integers");
        sim.dose_counts.clear();
        for (std::size_t i = 0; i < dc.size(); ++i)
            sim.dose_counts.push_back(
                static_cast<std::size_t>(integer(dc[i], "sim.dose_counts[" + std::to_string(i) + "]", 2)));
    }
    if (obj.contains("none_above"))
        sim.support.none_above = boolean(obj["none_above"], "sim.none_above");
    if (obj.contains("none_below"))
        sim.support.none_below = boolean(obj["none_below"], "sim.none_below");
    if (obj.contains("replicates"))
        sim.replicates = static_cast<int>(integer(obj["replicates"], "sim.replicates", 1));
    if (obj.contains("seed"))
        sim.seed = seed_value(obj["seed"], "sim.seed");
    if (obj.contains("workers"))
        sim.workers = static_cast<unsigned>(integer(obj["workers"], "sim.workers", 1));
}

void parse_verify(const json& obj, VerifyOptions& opt)
{
    check_keys(obj, "verify",
               {"design", "max_n", "loss_max_n", "loss_grid", "intcrm_histories", "riemann_points", "intcrm_doses",
                "perturb_lambda1"});
    if (obj.contains("design")) {
        json d = obj["design"];
        // The checks ignore the design kind; only the parameters matter.
        if (d.is_object() && !d.contains("design"))
            d["design"] = "mTPI";
        opt.base = parse_design_object(d, "verify.design", nullptr);
    }
    if (obj.contains("max_n"))
        opt.max_n = static_cast<int>(integer(obj["max_n"], "verify.max_n", 1));
    if (obj.contains("loss_max_n"))
        opt.loss_max_n = static_cast<int>(integer(obj["loss_max_n"], "verify.loss_max_n", 0));
    if (obj.contains("loss_grid"))
        opt.loss_grid = static_cast<int>(integer(obj["loss_grid"], "verify.loss_grid", 100));
    if (obj.contains("intcrm_histories"))
        opt.intcrm_histories = static_cast<int>(integer(obj["intcrm_histories"], "verify.intcrm_histories", 1));
    if (obj.contains("riemann_points"))
        opt.riemann_points = static_cast<int>(integer(obj["riemann_points"], "verify.riemann_points", 100));
    if (obj.contains("intcrm_doses"))
        opt.intcrm_doses = static_cast<std::size_t>(integer(obj["intcrm_doses"], "verify.intcrm_doses", 2));
    if (obj.contains("perturb_lambda1"))
        opt.perturb_lambda1 = number(obj["perturb_lambda1"], "verify.perturb_lambda1");
}

void parse_output(const json& obj, RunConfig& rc)
{
    check_keys(obj, "output", {"dir", "format"});
    if (obj.contains("dir"))
        rc.out_dir = string(obj["dir"], "output.dir");
    if (obj.contains("format")) {
        try {
            rc.format = parse_table_format(string(obj["format"], "output.format"));
        } catch (const std::invalid_argument& e) {
            fail("output.format", e.what());
        }
    }
}

void name_repeats(std::vector<NamedDesign>& designs)
{
    std::map<std::string, int> seen;
    for (NamedDesign& d : designs) {
        const int k = ++seen[d.name];
        if (k > 1)
            d.name += "#" + std::to_string(k);
    }
}

} // namespace

std::vector<NamedDesign> default_designs()
{
    std::vector<NamedDesign> out;
    for (DesignKind k : {DesignKind::mTPI, DesignKind::mTPI2, DesignKind::BOIN, DesignKind::CCD, DesignKind::IntCRM,
                         DesignKind::CRM, DesignKind::i3plus3}) {
        DesignConfig cfg;
        cfg.design = k;
        out.push_back({std::string(design_name(k)), cfg});
    }
    return out;
}

std::uint64_t parse_seed(const std::string& text, const std::string& what)
{
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(what + ": expected an unsigned 64-bit integer, got '" + text + "'");
    return v;
}

RunConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(root, "", {"designs", "trial", "sim", "verify", "output"});

    RunConfig rc;
    rc.verify.seed = rc.sim.seed;
    if (root.contains("designs")) {
        const json& ds = root["designs"];
        if (!ds.is_array() || ds.empty())
            fail("designs", "expected a non-empty array of design objects");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            NamedDesign nd;
            nd.config = parse_design_object(ds[i], "designs[" + std::to_string(i) + "]", &nd.name);
            rc.designs.push_back(std::move(nd));
        }
    } else {
        rc.designs = default_designs();
    }
    name_repeats(rc.designs);
    if (root.contains("trial"))
        parse_trial(root["trial"], rc.trial);
    if (root.contains("sim"))
        parse_sim(root["sim"], rc.sim);
    if (root.contains("verify"))
        parse_verify(root["verify"], rc.verify);
    if (root.contains("output"))
        parse_output(root["output"], rc);
    rc.verify.seed = rc.sim.seed;
    return rc;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace doseframe
