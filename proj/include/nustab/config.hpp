#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nustab/modal_system.hpp"
#include "nustab/rate_function.hpp"

namespace nustab {

enum class Task {
    modes,
    resolvent_scan,
    peaks,
    decay_sim,
    conditions,
    optimality,
    diophantine,
    reproduce,
};

Task parse_task(const std::string& name);
std::string to_string(Task t);

struct SGridSpec {
    enum class Mode { frequencies, linear };
    Mode mode = Mode::frequencies;
    double start = 0.0, stop = 0.0;
    int points = 0;
};

struct TGridSpec {
    double start = 0.0, stop = 0.0;
    int points = 0;
    bool log_spacing = true;
};

struct FitWindow {
    double t_lo = 0.0, t_hi = 0.0;
    double transient_cutoff = 10.0;
};

// One experiment, fully validated: every key in the JSON document is known,
// typed, and consistent with the task before anything runs.
struct ExperimentConfig {
    Task task = Task::modes;
    std::optional<SystemSpec> system;
    std::optional<SGridSpec> s_grid;
    std::optional<TGridSpec> t_grid;
    std::string out_dir = "out";
    std::uint64_t seed = 0;

    // resolvent-scan
    bool scan_force_dense = false;
    bool scan_verify_bounds = true;

    // peaks
    int peaks_n_lo = 0, peaks_n_hi = 0;
    bool peaks_force_dense = false;

    // decay-sim / optimality
    std::optional<RateFunction> rate;
    std::optional<FitWindow> fit;

    // conditions
    double cond_tau = 1.0;
    double cond_beta = 0.0;
    int cond_n_random = 100;

    // diophantine
    std::string dio_xi0;
    long long dio_n_max = 100000;
    int dio_depth = 30;

    // reproduce
    std::string recipe;
    bool list_recipes = false;

    // debug: dump the assembled generator before running
    bool dump_generator = false;
    bool dump_binary = false;
};

// Parses and validates a config document for the given task.  Unknown keys
// anywhere in the document are rejected; a "task" key, if present, must match.
ExperimentConfig parse_config(const std::string& json_text, Task task);

ExperimentConfig load_config(const std::string& path, Task task);

RateFunction parse_rate_json(const std::string& json_text);

} // namespace nustab
