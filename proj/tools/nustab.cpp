#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "nustab/config.hpp"
#include "nustab/errors.hpp"
#include "nustab/runner.hpp"

namespace {

const char* kTasks[] = {"modes",      "resolvent-scan", "peaks",
                        "decay-sim",  "conditions",     "optimality",
                        "diophantine", "reproduce"};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for damped modal systems: resolvent "
                 "growth, decay rates, observability conditions"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool want_list = false, dump_gen = false, dump_bin = false;
    std::map<std::string, CLI::Option*> seed_opts;

    for (const char* name : kTasks) {
        CLI::App* sub = app.add_subcommand(name, "");
        sub->add_option("--config", config_path, "JSON experiment config");
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        seed_opts[name] =
            sub->add_option("--seed", seed, "sample seed (overrides config)");
        sub->add_flag("--dump-generator", dump_gen,
                      "write the assembled generator to the output directory");
        sub->add_flag("--dump-binary", dump_bin,
                      "generator dump as raw little-endian doubles");
        if (std::string(name) == "reproduce")
            sub->add_flag("--list", want_list, "print the recipe catalogue");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string task_name = sub->get_name();

    try {
        nustab::Task task = nustab::parse_task(task_name);
        nustab::ExperimentConfig cfg;
        if (!config_path.empty()) {
            cfg = nustab::load_config(config_path, task);
        } else if (task == nustab::Task::reproduce && want_list) {
            cfg.task = task;
            cfg.list_recipes = true;
        } else {
            throw nustab::ConfigError("--config is required for task '" +
                                      task_name + "'");
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_opts[task_name]->count() > 0) cfg.seed = seed;
        if (want_list) cfg.list_recipes = true;
        if (dump_gen) cfg.dump_generator = true;
        if (dump_bin) cfg.dump_binary = true;

        nustab::RunOutcome outcome = nustab::run_experiment(cfg);
        std::puts(outcome.summary.c_str());
        return outcome.exit_code;
    } catch (const nustab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
}
