#pragma once

#include "a2gan/cgan_train.hpp"
#include "a2gan/dataset.hpp"
#include "a2gan/io.hpp"
#include "a2gan/scene.hpp"
#include "a2gan/syseval.hpp"
#include "a2gan/trajectory.hpp"

#include <filesystem>
#include <string>

namespace a2gan {

struct StageToggles {
    bool scene = true;
    bool trajectories = true;
    bool dataset = true;
    bool train = true;
    bool evaluate = true;
    bool simulate = true;
};

struct SceneStageConfig {
    SceneConfig scene;
    double spacing_m = 2.0;
    double map_height_m = 30.0;
};

struct TrajectoriesStageConfig {
    int count = 200;
    TrajectoryConfig trajectory;
};

struct EvaluateStageConfig {
    int trend_bins = 20;
};

struct SimulateStageConfig {
    int n_trajectories = 20;
    double noise_dbm = -94.0;
    double hysteresis_db = 3.0;
    int stitch_stride = 64;
};

/// Whole-pipeline configuration: one nested, human-readable file; every
/// stage's randomness derives from the global seed.
struct PipelineConfig {
    uint64_t seed = 7;
    std::string out_dir = "run";
    StageToggles stages;
    SceneStageConfig scene;
    TrajectoriesStageConfig trajectories;
    DatasetConfig dataset;
    GanConfig gan;
    EvaluateStageConfig evaluate;
    SimulateStageConfig simulate;
};

PipelineConfig parse_pipeline_config(const Json& j);
Json pipeline_config_to_json(const PipelineConfig& c);

/// Applies a `section.key=value` override to a config JSON tree.
void apply_dotted_override(Json& config, const std::string& assignment);

/// Output root: config out_dir, or $A2GAN_OUT_ROOT/<out_dir> when the
/// environment variable is set and out_dir is relative.
std::filesystem::path resolve_out_dir(const std::string& out_dir);

struct RunOptions {
    bool force = false;  // rerun every enabled stage
    bool strict = false; // error on stale upstream hashes instead of recomputing
    bool quiet = false;
};

/// Executes the enabled stages in order with hash-based skip/resume.
/// Returns the artifact manifest (also written to <out>/manifest.json).
Json run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Parses the CSV produced by trajectory_to_csv back into trajectories.
std::vector<Trajectory> trajectories_from_csv(const std::string& csv);

/// History CSV with one row per eval record (losses, per-gNB CMD and KS).
std::string history_to_csv(const std::vector<EvalRecord>& history, int n_classes);

/// Final-state evaluation of a trained bundle against a dataset's test
/// split: CDF curves, correlation matrices, CMD history, and distance-trend
/// tables written under out_dir. Returns the summary.
Json evaluate_checkpoint(GanBundle<float>& bundle, const SequenceDataset& dataset,
                         const std::filesystem::path& out_dir, int trend_bins);

} // namespace a2gan
