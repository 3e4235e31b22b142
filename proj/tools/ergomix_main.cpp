#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ergomix/experiment.hpp"

namespace {

// 0 = success, 1 = config error, 2 = assertion failure (bound violated etc.)
int dispatch(int argc, char** argv) {
    CLI::App app{"ergomix: spread-out random walks on torus and lattice cover models - "
                 "mixing certificates, recurrence classification, and limit-theorem experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
    run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    run_cmd->add_option("--out", out_override, "override the output directory");

    auto* validate_cmd = app.add_subcommand("validate", "validate a config without running it");
    std::string validate_path;
    validate_cmd->add_option("config", validate_path, "experiment config (JSON)")->required();

    std::string repro_out = "paper-example-out";
    auto* repro_cmd = app.add_subcommand(
        "reproduce-paper-example",
        "run the bundled reference model at density floors 1 and 1/2 and emit the "
        "bound-vs-exact comparison tables");
    repro_cmd->add_option("--out", repro_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run_cmd->parsed()) {
            auto config = ergomix::cli::load_config(config_path);
            if (seed_given) {
                config.seed = seed_override;
                config.canonical["seed"] = seed_override;
            }
            if (!out_override.empty()) config.output = out_override;
            auto manifest = ergomix::cli::run(config, ergomix::cli::worker_count_from_env());
            std::printf("ok: %s (%zu files, config %s)\n", config.output.c_str(),
                        manifest.files.size(), manifest.config_hash.c_str());
        } else if (validate_cmd->parsed()) {
            ergomix::cli::load_config(validate_path);
            std::printf("ok: config is valid\n");
        } else if (repro_cmd->parsed()) {
            auto manifest = ergomix::cli::reproduce_paper_example(repro_out);
            std::printf("ok: %s (%zu files)\n", repro_out.c_str(), manifest.files.size());
        }
    } catch (const ergomix::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const ergomix::CheckFailure& e) {
        std::fprintf(stderr, "check failed: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
