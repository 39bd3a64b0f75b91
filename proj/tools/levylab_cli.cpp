#include "levylab/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"levylab: Malliavin/Bismut experiments for Levy-driven SDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", levylab::kVersion);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 0;
    for (const auto& name : levylab::subcommand_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    }
    CLI11_PARSE(app, argc, argv);

    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    levylab::RunOverrides overrides;
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--out")) overrides.out = out;
    if (sub->count("--threads")) overrides.threads = threads;

    levylab::ExperimentConfig cfg;
    try {
        cfg = levylab::load_config(config_path);
    } catch (const levylab::ConfigError& e) {
        nlohmann::json record{{"subcommand", name}, {"status", "error"}, {"error", "configuration"},
                              {"details", e.errors()}};
        std::cerr << record.dump() << '\n';
        const char* env = std::getenv("LEVYLAB_OUT");
        levylab::write_error_record(overrides.out ? *overrides.out : (env && *env ? env : "."), name, e.what());
        return 2;
    }
    const int status = levylab::run(cfg, name, overrides);
    if (status != 0) std::cerr << "levylab " << name << ": failed, see runs.jsonl in "
                               << levylab::resolve_output_dir(cfg, overrides) << '\n';
    return status;
}
