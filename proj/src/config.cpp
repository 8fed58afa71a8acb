#include "nustab/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nustab/errors.hpp"

namespace nustab {

using nlohmann::json;

Task parse_task(const std::string& name) {
    if (name == "modes") return Task::modes;
    if (name == "resolvent-scan") return Task::resolvent_scan;
    if (name == "peaks") return Task::peaks;
    if (name == "decay-sim") return Task::decay_sim;
    if (name == "conditions") return Task::conditions;
    if (name == "optimality") return Task::optimality;
    if (name == "diophantine") return Task::diophantine;
    if (name == "reproduce") return Task::reproduce;
    throw ConfigError("unknown task '" + name + "'");
}

std::string to_string(Task t) {
    switch (t) {
    case Task::modes: return "modes";
    case Task::resolvent_scan: return "resolvent-scan";
    case Task::peaks: return "peaks";
    case Task::decay_sim: return "decay-sim";
    case Task::conditions: return "conditions";
    case Task::optimality: return "optimality";
    case Task::diophantine: return "diophantine";
    case Task::reproduce: return "reproduce";
    }
    throw ConfigError("unrepresentable task value");
}

namespace {

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

// Strict schema walk: every key present must be in `allowed`.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    require_object(j, where);
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!ok.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

const json& require_key(const json& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required key '" + key + "'");
    return *it;
}

double get_double(const json& j, const std::string& where, const char* key) {
    const json& v = require_key(j, where, key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

double get_double_or(const json& j, const std::string& where, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return get_double(j, where, key);
}

long long get_int(const json& j, const std::string& where, const char* key) {
    const json& v = require_key(j, where, key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<long long>();
}

long long get_int_or(const json& j, const std::string& where, const char* key, long long dflt) {
    if (!j.contains(key)) return dflt;
    return get_int(j, where, key);
}

std::string get_string(const json& j, const std::string& where, const char* key) {
    const json& v = require_key(j, where, key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

bool get_bool_or(const json& j, const std::string& where, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::vector<double> get_double_array(const json& j, const std::string& where, const char* key) {
    const json& v = require_key(j, where, key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + "." + key + ": expected numeric entries");
        out.push_back(e.get<double>());
    }
    return out;
}

SystemKind parse_system_kind(const std::string& s, const std::string& where) {
    if (s == "wave1d") return SystemKind::wave1d;
    if (s == "beam1d") return SystemKind::beam1d;
    throw ConfigError(where + ": unknown system kind '" + s + "'");
}

WeakProfile parse_weak_profile(const std::string& s, const std::string& where) {
    if (s == "one_minus_xi") return WeakProfile::one_minus_xi;
    if (s == "xi2_one_minus_xi") return WeakProfile::xi2_one_minus_xi;
    if (s == "indicator") return WeakProfile::indicator;
    if (s == "tabulated") return WeakProfile::tabulated;
    throw ConfigError(where + ": unknown damping profile '" + s + "'");
}

DampingSpec parse_damping(const json& j, const std::string& where) {
    check_keys(j, where, {"type", "profile", "xi0", "samples", "alpha"});
    std::string type = get_string(j, where, "type");
    if (type == "weak") {
        WeakDamping w;
        if (j.contains("alpha"))
            throw ConfigError(where + ": 'alpha' does not apply to weak damping");
        w.profile = parse_weak_profile(get_string(j, where, "profile"), where + ".profile");
        if (w.profile == WeakProfile::indicator) {
            w.xi0 = get_double(j, where, "xi0");
        } else if (j.contains("xi0")) {
            throw ConfigError(where + ": 'xi0' only applies to the indicator profile");
        }
        if (w.profile == WeakProfile::tabulated) {
            const json& v = require_key(j, where, "samples");
            if (!v.is_array()) throw ConfigError(where + ".samples: expected an array");
            for (const auto& row : v) {
                if (!row.is_array() || row.size() != 2 ||
                    !row[0].is_number() || !row[1].is_number())
                    throw ConfigError(where + ".samples: expected [xi, value] pairs");
                w.samples.emplace_back(row[0].get<double>(), row[1].get<double>());
            }
        } else if (j.contains("samples")) {
            throw ConfigError(where + ": 'samples' only applies to the tabulated profile");
        }
        return w;
    }
    if (type == "pointwise") {
        if (j.contains("profile") || j.contains("samples") || j.contains("alpha"))
            throw ConfigError(where + ": pointwise damping takes only 'xi0'");
        PointwiseDamping p;
        p.xi0 = get_double(j, where, "xi0");
        return p;
    }
    if (type == "fractional") {
        if (j.contains("profile") || j.contains("samples") || j.contains("xi0"))
            throw ConfigError(where + ": fractional damping takes only 'alpha'");
        FractionalDamping f;
        f.alpha = get_double(j, where, "alpha");
        return f;
    }
    throw ConfigError(where + ".type: unknown damping type '" + type + "'");
}

SystemSpec parse_system(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "damping", "truncation"});
    SystemSpec spec;
    spec.kind = parse_system_kind(get_string(j, where, "kind"), where + ".kind");
    spec.damping = parse_damping(require_key(j, where, "damping"), where + ".damping");
    long long n = get_int(j, where, "truncation");
    if (n < 2 || n > 200000) throw ConfigError(where + ".truncation: out of range");
    spec.truncation = static_cast<int>(n);
    return spec;
}

SGridSpec parse_s_grid(const json& j, const std::string& where) {
    check_keys(j, where, {"mode", "start", "stop", "points"});
    SGridSpec g;
    std::string mode = get_string(j, where, "mode");
    if (mode == "frequencies") {
        g.mode = SGridSpec::Mode::frequencies;
        if (j.contains("start") || j.contains("stop") || j.contains("points"))
            throw ConfigError(where + ": frequency mode takes no range keys");
    } else if (mode == "linear") {
        g.mode = SGridSpec::Mode::linear;
        g.start = get_double(j, where, "start");
        g.stop = get_double(j, where, "stop");
        long long pts = get_int(j, where, "points");
        if (!(g.stop > g.start)) throw ConfigError(where + ": stop must exceed start");
        if (pts < 2 || pts > 100000000) throw ConfigError(where + ".points: out of range");
        g.points = static_cast<int>(pts);
    } else {
        throw ConfigError(where + ".mode: unknown grid mode '" + mode + "'");
    }
    return g;
}

TGridSpec parse_t_grid(const json& j, const std::string& where) {
    check_keys(j, where, {"start", "stop", "points", "spacing"});
    TGridSpec g;
    g.start = get_double(j, where, "start");
    g.stop = get_double(j, where, "stop");
    long long pts = get_int(j, where, "points");
    if (!(g.start > 0.0)) throw ConfigError(where + ".start: must be positive");
    if (!(g.stop > g.start)) throw ConfigError(where + ": stop must exceed start");
    if (pts < 2 || pts > 100000000) throw ConfigError(where + ".points: out of range");
    g.points = static_cast<int>(pts);
    std::string spacing = j.contains("spacing") ? get_string(j, where, "spacing") : "log";
    if (spacing == "log") g.log_spacing = true;
    else if (spacing == "linear") g.log_spacing = false;
    else throw ConfigError(where + ".spacing: expected 'log' or 'linear'");
    return g;
}

RateFunction parse_rate(const json& j, const std::string& where) {
    check_keys(j, where, {"form", "c", "a", "b", "s0", "s", "m"});
    std::string form = get_string(j, where, "form");
    if (form == "power") {
        double c = get_double(j, where, "c");
        double a = get_double(j, where, "a");
        double s0 = get_double_or(j, where, "s0", 0.0);
        return RateFunction::power(c, a, s0);
    }
    if (form == "power_log") {
        double c = get_double(j, where, "c");
        double a = get_double(j, where, "a");
        double b = get_double(j, where, "b");
        double s0 = get_double_or(j, where, "s0", 0.0);
        return RateFunction::power_log(c, a, b, s0);
    }
    if (form == "shifted_power") {
        double c = get_double(j, where, "c");
        double a = get_double(j, where, "a");
        double s0 = get_double_or(j, where, "s0", 0.0);
        return RateFunction::shifted_power(c, a, s0);
    }
    if (form == "tabulated") {
        auto s = get_double_array(j, where, "s");
        auto m = get_double_array(j, where, "m");
        return RateFunction::tabulated(s, m);
    }
    throw ConfigError(where + ".form: unknown rate form '" + form + "'");
}

FitWindow parse_fit(const json& j, const std::string& where) {
    check_keys(j, where, {"t_lo", "t_hi", "transient_cutoff"});
    FitWindow f;
    f.t_lo = get_double(j, where, "t_lo");
    f.t_hi = get_double(j, where, "t_hi");
    f.transient_cutoff = get_double_or(j, where, "transient_cutoff", 10.0);
    if (!(f.t_hi > f.t_lo)) throw ConfigError(where + ": t_hi must exceed t_lo");
    return f;
}

} // namespace

RateFunction parse_rate_json(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("rate: malformed JSON");
    return parse_rate(j, "rate");
}

ExperimentConfig parse_config(const std::string& json_text, Task task) {
    json j = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("config: malformed JSON");
    require_object(j, "config");

    ExperimentConfig cfg;
    cfg.task = task;

    // Assemble the allowed top-level key set for this task, then walk strictly.
    std::vector<const char*> allowed = {"task", "output", "seed", "debug"};
    auto needs_system = [](Task t) {
        return t != Task::diophantine && t != Task::reproduce;
    };
    if (needs_system(task)) allowed.push_back("system");
    const char* section = nullptr;
    switch (task) {
    case Task::modes: break;
    case Task::resolvent_scan:
        section = "scan";
        allowed.push_back("grids");
        break;
    case Task::peaks: section = "peaks"; break;
    case Task::decay_sim:
        section = "decay";
        allowed.push_back("grids");
        break;
    case Task::conditions: section = "conditions"; break;
    case Task::optimality:
        section = "optimality";
        allowed.push_back("grids");
        break;
    case Task::diophantine: section = "diophantine"; break;
    case Task::reproduce: section = "reproduce"; break;
    }
    if (section) allowed.push_back(section);
    {
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!ok.count(it.key()))
                throw ConfigError("config: key '" + it.key() +
                                  "' is not valid for task '" + to_string(task) + "'");
        }
    }

    if (j.contains("task")) {
        std::string declared = get_string(j, "config", "task");
        if (parse_task(declared) != task)
            throw ConfigError("config.task: document declares '" + declared +
                              "' but the command line selected '" + to_string(task) + "'");
    }

    if (j.contains("output")) {
        const json& out = j.at("output");
        check_keys(out, "output", {"dir"});
        cfg.out_dir = get_string(out, "output", "dir");
        if (cfg.out_dir.empty()) throw ConfigError("output.dir: must be non-empty");
    }
    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_unsigned())
            throw ConfigError("config.seed: expected a non-negative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    if (j.contains("debug")) {
        const json& dbg = j.at("debug");
        check_keys(dbg, "debug", {"dump_generator", "dump_binary"});
        cfg.dump_generator = get_bool_or(dbg, "debug", "dump_generator", false);
        cfg.dump_binary = get_bool_or(dbg, "debug", "dump_binary", false);
    }

    if (needs_system(task)) {
        cfg.system = parse_system(require_key(j, "config", "system"), "system");
    }

    if (j.contains("grids")) {
        const json& g = j.at("grids");
        if (task == Task::resolvent_scan) {
            check_keys(g, "grids", {"s_grid"});
            if (g.contains("s_grid")) cfg.s_grid = parse_s_grid(g.at("s_grid"), "grids.s_grid");
        } else {
            check_keys(g, "grids", {"t_grid"});
            cfg.t_grid = parse_t_grid(require_key(g, "grids", "t_grid"), "grids.t_grid");
        }
    }
    if ((task == Task::decay_sim || task == Task::optimality) && !cfg.t_grid)
        throw ConfigError("config: task '" + to_string(task) + "' requires grids.t_grid");

    switch (task) {
    case Task::modes:
        break;
    case Task::resolvent_scan:
        if (j.contains("scan")) {
            const json& s = j.at("scan");
            check_keys(s, "scan", {"force_dense", "verify_bounds"});
            cfg.scan_force_dense = get_bool_or(s, "scan", "force_dense", false);
            cfg.scan_verify_bounds = get_bool_or(s, "scan", "verify_bounds", true);
        }
        break;
    case Task::peaks: {
        const json& p = require_key(j, "config", "peaks");
        check_keys(p, "peaks", {"n_lo", "n_hi", "force_dense"});
        long long lo = get_int(p, "peaks", "n_lo");
        long long hi = get_int(p, "peaks", "n_hi");
        if (lo < 1 || hi < lo) throw ConfigError("peaks: need 1 <= n_lo <= n_hi");
        cfg.peaks_n_lo = static_cast<int>(lo);
        cfg.peaks_n_hi = static_cast<int>(hi);
        cfg.peaks_force_dense = get_bool_or(p, "peaks", "force_dense", false);
        break;
    }
    case Task::decay_sim:
        if (j.contains("decay")) {
            const json& d = j.at("decay");
            check_keys(d, "decay", {"rate", "fit"});
            if (d.contains("rate")) cfg.rate = parse_rate(d.at("rate"), "decay.rate");
            if (d.contains("fit")) cfg.fit = parse_fit(d.at("fit"), "decay.fit");
        }
        break;
    case Task::conditions: {
        const json& c = require_key(j, "config", "conditions");
        check_keys(c, "conditions", {"tau", "beta", "n_random"});
        cfg.cond_tau = get_double(c, "conditions", "tau");
        if (!(cfg.cond_tau > 0.0)) throw ConfigError("conditions.tau: must be positive");
        cfg.cond_beta = get_double_or(c, "conditions", "beta", 0.0);
        if (cfg.cond_beta < 0.0) throw ConfigError("conditions.beta: must be non-negative");
        long long nr = get_int_or(c, "conditions", "n_random", 100);
        if (nr < 0 || nr > 1000000) throw ConfigError("conditions.n_random: out of range");
        cfg.cond_n_random = static_cast<int>(nr);
        break;
    }
    case Task::optimality: {
        const json& o = require_key(j, "config", "optimality");
        check_keys(o, "optimality", {"rate", "fit"});
        cfg.rate = parse_rate(require_key(o, "optimality", "rate"), "optimality.rate");
        if (o.contains("fit")) cfg.fit = parse_fit(o.at("fit"), "optimality.fit");
        break;
    }
    case Task::diophantine: {
        const json& d = require_key(j, "config", "diophantine");
        check_keys(d, "diophantine", {"xi0", "n_max", "depth"});
        cfg.dio_xi0 = get_string(d, "diophantine", "xi0");
        cfg.dio_n_max = get_int_or(d, "diophantine", "n_max", 100000);
        long long depth = get_int_or(d, "diophantine", "depth", 30);
        if (depth < 1 || depth > 200000) throw ConfigError("diophantine.depth: out of range");
        cfg.dio_depth = static_cast<int>(depth);
        break;
    }
    case Task::reproduce: {
        const json& r = require_key(j, "config", "reproduce");
        check_keys(r, "reproduce", {"recipe", "list"});
        cfg.list_recipes = get_bool_or(r, "reproduce", "list", false);
        if (r.contains("recipe")) cfg.recipe = get_string(r, "reproduce", "recipe");
        if (!cfg.list_recipes && cfg.recipe.empty())
            throw ConfigError("reproduce: need either 'recipe' or 'list': true");
        break;
    }
    }

    return cfg;
}

ExperimentConfig load_config(const std::string& path, Task task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), task);
}

} // namespace nustab
