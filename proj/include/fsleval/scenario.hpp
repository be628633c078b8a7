#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fsleval/learners.hpp"
#include "fsleval/ranking.hpp"
#include "fsleval/task_model.hpp"

namespace fsleval {

// Config-shape problems (malformed JSON, missing fields, missing files).
// The CLI maps these to exit code 2; genuine runtime failures exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunManifest {
    std::string version;
    std::string config_hash;  // 16 hex digits over the canonical config dump
    std::uint64_t seed = 0;
    std::string started_at;   // timestamps live only here; every other output
    std::string finished_at;  // byte depends on (config, seed) alone
    std::vector<std::string> outputs;  // file names relative to out_dir
};

struct ScenarioResult {
    RunManifest manifest;
    std::filesystem::path out_dir;
};

// FNV-1a of the canonical (sorted-key) JSON dump, as fixed-width hex.
std::string config_hash(const nlohmann::json& config);

// Evaluates one snapshot on the lambda-interpolated family between the
// universe's base and novel sets. Row i uses the task-seed stream
// derive_seed(sweep_seed, "lambda", i), and the endpoint distributions consume
// RNG exactly like plain base/novel evaluation, so estimate_gen with the same
// stream reproduces rows 0/1 bit for bit.
struct SweepRow {
    double lambda = 0.0;
    GenEstimate estimate;
};
std::vector<SweepRow> interpolate_sweep(const ClassUniverse& universe,
                                        const LearnerKind& kind,
                                        const EmbeddingParams& params,
                                        const EpisodeSpec& spec,
                                        const std::vector<double>& lambdas,
                                        int n_tasks, std::uint64_t sweep_seed);

// Executes the scenario named by config["scenario"] ("coverage", "split",
// "train", "trajectory-report", "rank-corr", "flip", "sweep"), writing data
// files plus manifest.json. Output directory: out_dir_override if non-empty,
// else config["output_dir"], else $FSLEVAL_OUT, else ./fsleval-out.
ScenarioResult run_scenario(const nlohmann::json& config,
                            const std::filesystem::path& out_dir_override = {});

ScenarioResult run_scenario_file(const std::filesystem::path& config_path,
                                 const std::filesystem::path& out_dir_override = {});

}  // namespace fsleval
