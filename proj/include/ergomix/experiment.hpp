#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergomix/serialize.hpp"

namespace ergomix::cli {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    std::string kind;
    io::json model;   // empty for chain-parameter kinds
    io::json params;
    std::uint64_t seed = 0;
    std::string output = "ergomix-out";
    io::json canonical;  // the validated config document (hash input)
};

// Strict parse: unknown keys anywhere in the config are fatal, and each kind
// checks its own parameter table.
ExperimentConfig parse_config(const io::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunManifest {
    std::string config_hash;
    std::string tool_version;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> files;  // relative to the output directory
};

io::json to_json(const RunManifest& m);

// Executes the experiment and writes report.json, curve CSVs, and
// manifest.json under the output directory. Throws CheckFailure after
// writing outputs when an asserted bound or statistic fails.
RunManifest run(const ExperimentConfig& config, int workers);

// Bundled reference model: linear parts [[2,1],[1,1]] and [[1,1],[1,2]] with
// equal weights, displacement along e1 with a density floor delta on [0,1)
// (delta = 1 is the pure uniform law; delta < 1 adds an atom at 0).
models::AffineTorusModel make_reference_torus_model(double delta);

// Runs the bundled reference configuration at delta in {1, 1/2} and emits the
// bound-vs-exact comparison tables.
RunManifest reproduce_paper_example(const std::filesystem::path& out_dir);

// Worker count from ERGOMIX_WORKERS (results never depend on it).
int worker_count_from_env();

std::string config_hash(const io::json& canonical);

}  // namespace ergomix::cli
