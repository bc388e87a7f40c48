#pragma once

#include "a2gan/common.hpp"
#include "a2gan/scene.hpp"
#include "a2gan/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace a2gan {

/// One trajectory-gNB link: RSS read off the power map plus the matching
/// 3-D distance sequence, both in physical units.
struct SequencePair {
    int32_t traj_id = 0;
    uint8_t gnb_id = 0;
    bool augmented = false;
    std::vector<double> rss_dbm;
    std::vector<double> dist_m;
};

struct NormStats {
    double rss_mean = 0.0;
    double rss_std = 1.0;
    double dist_mean = 0.0;
    double dist_std = 1.0;
};

enum class Split : uint8_t { Train = 0, Test = 1 };

/// Aligned training corpus: normalized RSS windows X, normalized distance
/// windows U, gNB labels c, plus per-row provenance. Raw sequences are kept
/// so augmentation and statistics can be re-derived from the bundle.
struct SequenceDataset {
    MatF x;                        // K x W, normalized
    MatF u;                        // K x W, normalized
    std::vector<uint8_t> labels;   // K, in 0..C-1
    std::vector<int32_t> traj_ids; // K
    std::vector<int32_t> window_start;
    std::vector<uint8_t> split;    // K, Split enum
    std::vector<uint8_t> augmented;
    NormStats norm_stats;
    int window_w = 0;
    int stride = 0;
    int n_classes = 0;
    int n_short_sequences = 0; // sequences shorter than W, dropped from windows
    std::vector<SequencePair> sequences;
    std::vector<int32_t> test_traj_ids;
    std::string scene_hash;

    int64_t rows() const { return x.rows(); }
    std::vector<int64_t> rows_of(Split s) const;
    std::vector<int64_t> rows_of(Split s, int gnb_id) const;
    void validate() const;
};

struct DatasetConfig {
    int window_w = 128;
    int stride = 64;
    double test_fraction = 0.2;
    bool augment = false;
    int augment_kernel = 20;
    bool nearest_interp = false; // nearest-cell power-map sampling, for exactness tests
    int gnb_filter = -1;         // >= 0: keep only this gNB's links, relabeled to class 0
};

/// Bilinear interpolation of the power map at (x, y); exact on grid nodes.
double sample_power_map(const PowerMap& map, double x, double y, bool nearest = false);

/// RSS + distance sequences for one trajectory against one gNB's map.
SequencePair extract_sequences(const Trajectory& trajectory, const PowerMap& power_map,
                               const Point3& gnb_position, bool nearest_interp = false);

/// Sliding windows [i, i+W) at the given stride; trailing partials dropped.
/// Returns the start offsets (count = floor((N-W)/stride) + 1, or 0 when
/// the sequence is shorter than W).
std::vector<int> window_offsets(int sequence_length, int window_w, int stride);

/// Moving-average smoothing with a flat kernel and symmetric-reflection
/// padding; output length equals input length.
std::vector<double> augment_convolve(const std::vector<double>& x, int kernel_size);

/// Trajectory-level split: whole trajectories go to test so no window of a
/// test trajectory shares its source with train. Deterministic in seed.
std::vector<int32_t> choose_test_trajectories(const std::vector<int32_t>& traj_ids,
                                              double test_fraction, uint64_t seed);

double normalize_value(double v, double mean, double std);
double denormalize_value(double v, double mean, double std);
MatD denormalize(const MatF& values, double mean, double std);

/// Assembles the corpus: extract per-(trajectory, gNB) sequences, split by
/// trajectory, augment the train split (optionally), window, and normalize
/// with train-split statistics.
SequenceDataset build_dataset(const SceneBundle& scene_bundle,
                              const std::vector<Trajectory>& trajectories,
                              const DatasetConfig& config, uint64_t seed);

/// Re-derives a dataset from the raw sequences carried by an existing one,
/// adding augmented train copies and keeping the original split. For equal
/// configs, build(augment=true) and augment_dataset(build(augment=false))
/// agree bit-exactly.
SequenceDataset augment_dataset(const SequenceDataset& dataset, int kernel_size);

std::string dataset_stats_text(const SequenceDataset& dataset);

void save_dataset(const SequenceDataset& dataset, const std::filesystem::path& dir);
SequenceDataset load_dataset(const std::filesystem::path& dir);

} // namespace a2gan
