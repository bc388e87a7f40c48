#include "a2gan/dataset.hpp"

#include "a2gan/io.hpp"
#include "a2gan/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace a2gan {

std::vector<int64_t> SequenceDataset::rows_of(Split s) const {
    std::vector<int64_t> out;
    for (int64_t k = 0; k < rows(); ++k) {
        if (split[static_cast<size_t>(k)] == static_cast<uint8_t>(s)) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<int64_t> SequenceDataset::rows_of(Split s, int gnb_id) const {
    std::vector<int64_t> out;
    for (int64_t k = 0; k < rows(); ++k) {
        if (split[static_cast<size_t>(k)] == static_cast<uint8_t>(s) &&
            labels[static_cast<size_t>(k)] == static_cast<uint8_t>(gnb_id)) {
            out.push_back(k);
        }
    }
    return out;
}

void SequenceDataset::validate() const {
    const auto k = static_cast<size_t>(rows());
    require(u.rows() == x.rows() && u.cols() == x.cols(), "X/U shape mismatch");
    require(labels.size() == k && traj_ids.size() == k && split.size() == k &&
                augmented.size() == k && window_start.size() == k,
            "row metadata out of sync with X");
    require(x.cols() == window_w, "window width mismatch");
    for (size_t i = 0; i < k; ++i) {
        require(labels[i] < n_classes, "label out of range");
        if (split[i] == static_cast<uint8_t>(Split::Test)) {
            require(augmented[i] == 0, "augmented row in test split");
        }
    }
    require(x.allFinite() && u.allFinite(), "non-finite dataset entries");
}

double sample_power_map(const PowerMap& map, double x, double y, bool nearest) {
    const double gx = (x - map.origin_x) / map.spacing_m;
    const double gy = (y - map.origin_y) / map.spacing_m;
    require(gx >= 0.0 && gy >= 0.0 && gx <= map.cols() - 1 && gy <= map.rows() - 1,
            "sample position outside power map grid");
    if (nearest) {
        const int c = static_cast<int>(std::lround(gx));
        const int r = static_cast<int>(std::lround(gy));
        return map.rss_dbm(r, c);
    }
    int c0 = static_cast<int>(std::floor(gx));
    int r0 = static_cast<int>(std::floor(gy));
    c0 = std::min(c0, map.cols() - 2 >= 0 ? map.cols() - 2 : 0);
    r0 = std::min(r0, map.rows() - 2 >= 0 ? map.rows() - 2 : 0);
    const int c1 = std::min(c0 + 1, map.cols() - 1);
    const int r1 = std::min(r0 + 1, map.rows() - 1);
    const double fx = gx - c0;
    const double fy = gy - r0;
    const double v00 = map.rss_dbm(r0, c0);
    const double v01 = map.rss_dbm(r0, c1);
    const double v10 = map.rss_dbm(r1, c0);
    const double v11 = map.rss_dbm(r1, c1);
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
}

SequencePair extract_sequences(const Trajectory& trajectory, const PowerMap& power_map,
                               const Point3& gnb_position, bool nearest_interp) {
    SequencePair pair;
    pair.traj_id = trajectory.id;
    pair.gnb_id = static_cast<uint8_t>(power_map.gnb_id);
    pair.rss_dbm.reserve(trajectory.waypoints.size());
    for (size_t n = 0; n < trajectory.waypoints.size(); ++n) {
        const auto& w = trajectory.waypoints[n];
        try {
            pair.rss_dbm.push_back(sample_power_map(power_map, w.x, w.y, nearest_interp));
        } catch (const Error&) {
            fail("waypoint " + std::to_string(n) + " of trajectory " +
                 std::to_string(trajectory.id) + " lies outside the power map grid");
        }
    }
    pair.dist_m = distance_sequence(trajectory, gnb_position);
    return pair;
}

std::vector<int> window_offsets(int sequence_length, int window_w, int stride) {
    require(window_w >= 1, "window_w must be >= 1");
    require(stride >= 1, "stride must be >= 1");
    std::vector<int> offsets;
    if (sequence_length < window_w) {
        return offsets;
    }
    for (int i = 0; i + window_w <= sequence_length; i += stride) {
        offsets.push_back(i);
    }
    return offsets;
}

std::vector<double> augment_convolve(const std::vector<double>& x, int kernel_size) {
    const int n = static_cast<int>(x.size());
    require(kernel_size >= 1, "kernel_size must be >= 1");
    require(kernel_size <= n, "kernel_size " + std::to_string(kernel_size) +
                                  " exceeds sequence length " + std::to_string(n));
    // Symmetric (edge-repeating) mirror: x[-1-t] = x[t], x[n+t] = x[n-1-t].
    // This extension makes the flat-kernel operator doubly stochastic, so
    // smoothing never increases the deviation spread.
    const auto at = [&](int i) {
        if (i < 0) {
            i = -1 - i;
        }
        if (i >= n) {
            i = 2 * n - 1 - i;
        }
        return x[static_cast<size_t>(i)];
    };
    const int left = (kernel_size - 1) / 2;
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = 0; t < kernel_size; ++t) {
            acc += at(i - left + t);
        }
        out[static_cast<size_t>(i)] = acc / kernel_size;
    }
    return out;
}

std::vector<int32_t> choose_test_trajectories(const std::vector<int32_t>& traj_ids,
                                              double test_fraction, uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must be in (0, 1)");
    std::vector<int32_t> unique = traj_ids;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    require(unique.size() >= 2, "split requires at least 2 source trajectories");

    const auto n = static_cast<int64_t>(unique.size());
    int64_t n_test = std::llround(test_fraction * static_cast<double>(n));
    n_test = std::clamp<int64_t>(n_test, 1, n - 1);

    RngStream rng = RngStream::derive(seed, "split");
    rng.shuffle(unique);
    std::vector<int32_t> test(unique.begin(), unique.begin() + n_test);
    std::sort(test.begin(), test.end());
    return test;
}

double normalize_value(double v, double mean, double std) { return (v - mean) / std; }

double denormalize_value(double v, double mean, double std) { return v * std + mean; }

MatD denormalize(const MatF& values, double mean, double std) {
    return values.cast<double>() * std + MatD::Constant(values.rows(), values.cols(), mean);
}

namespace {

/// Shared assembly: window + normalize a list of sequences whose split is
/// already decided.
SequenceDataset assemble(std::vector<SequencePair> sequences,
                         const std::vector<int32_t>& test_traj_ids, int n_classes,
                         const DatasetConfig& config, const std::string& scene_hash) {
    const std::set<int32_t> test_set(test_traj_ids.begin(), test_traj_ids.end());

    struct Row {
        size_t seq_index;
        int offset;
    };
    std::vector<Row> rows;
    int n_short = 0;
    for (size_t s = 0; s < sequences.size(); ++s) {
        const auto offs = window_offsets(static_cast<int>(sequences[s].rss_dbm.size()),
                                         config.window_w, config.stride);
        if (offs.empty()) {
            ++n_short;
            continue;
        }
        for (int o : offs) {
            rows.push_back({s, o});
        }
    }

    SequenceDataset ds;
    ds.window_w = config.window_w;
    ds.stride = config.stride;
    ds.n_classes = n_classes;
    ds.n_short_sequences = n_short;
    ds.scene_hash = scene_hash;
    ds.test_traj_ids = test_traj_ids;

    const auto k = static_cast<int64_t>(rows.size());
    require(k > 0, "dataset has no windows: all sequences shorter than window_w");
    ds.x.resize(k, config.window_w);
    ds.u.resize(k, config.window_w);
    ds.labels.resize(static_cast<size_t>(k));
    ds.traj_ids.resize(static_cast<size_t>(k));
    ds.window_start.resize(static_cast<size_t>(k));
    ds.split.resize(static_cast<size_t>(k));
    ds.augmented.resize(static_cast<size_t>(k));

    // Train-split statistics in physical units (population std).
    double sx = 0.0, sxx = 0.0, su = 0.0, suu = 0.0;
    int64_t n_train_vals = 0;
    for (const auto& row : rows) {
        const auto& seq = sequences[row.seq_index];
        if (test_set.count(seq.traj_id) != 0) {
            continue;
        }
        for (int j = 0; j < config.window_w; ++j) {
            const double xv = seq.rss_dbm[static_cast<size_t>(row.offset + j)];
            const double uv = seq.dist_m[static_cast<size_t>(row.offset + j)];
            sx += xv;
            sxx += xv * xv;
            su += uv;
            suu += uv * uv;
            ++n_train_vals;
        }
    }
    require(n_train_vals > 0, "train split is empty");
    const double nd = static_cast<double>(n_train_vals);
    ds.norm_stats.rss_mean = sx / nd;
    ds.norm_stats.dist_mean = su / nd;
    ds.norm_stats.rss_std = std::sqrt(std::max(0.0, sxx / nd - ds.norm_stats.rss_mean * ds.norm_stats.rss_mean));
    ds.norm_stats.dist_std = std::sqrt(std::max(0.0, suu / nd - ds.norm_stats.dist_mean * ds.norm_stats.dist_mean));
    require(ds.norm_stats.rss_std > 0.0, "zero-variance RSS field in train split");
    require(ds.norm_stats.dist_std > 0.0, "zero-variance distance field in train split");

    for (int64_t r = 0; r < k; ++r) {
        const auto& row = rows[static_cast<size_t>(r)];
        const auto& seq = sequences[row.seq_index];
        const bool is_test = test_set.count(seq.traj_id) != 0;
        ds.labels[static_cast<size_t>(r)] = seq.gnb_id;
        ds.traj_ids[static_cast<size_t>(r)] = seq.traj_id;
        ds.window_start[static_cast<size_t>(r)] = row.offset;
        ds.split[static_cast<size_t>(r)] =
            static_cast<uint8_t>(is_test ? Split::Test : Split::Train);
        ds.augmented[static_cast<size_t>(r)] = seq.augmented ? 1 : 0;
        for (int j = 0; j < config.window_w; ++j) {
            ds.x(r, j) = static_cast<float>(normalize_value(
                seq.rss_dbm[static_cast<size_t>(row.offset + j)], ds.norm_stats.rss_mean,
                ds.norm_stats.rss_std));
            ds.u(r, j) = static_cast<float>(normalize_value(
                seq.dist_m[static_cast<size_t>(row.offset + j)], ds.norm_stats.dist_mean,
                ds.norm_stats.dist_std));
        }
    }

    ds.sequences = std::move(sequences);
    ds.validate();
    return ds;
}

std::vector<SequencePair> with_augmented_train(const std::vector<SequencePair>& sequences,
                                               const std::vector<int32_t>& test_traj_ids,
                                               int kernel_size) {
    const std::set<int32_t> test_set(test_traj_ids.begin(), test_traj_ids.end());
    std::vector<SequencePair> out = sequences;
    for (const auto& seq : sequences) {
        if (seq.augmented || test_set.count(seq.traj_id) != 0) {
            continue;
        }
        if (static_cast<int>(seq.rss_dbm.size()) < kernel_size) {
            continue;
        }
        SequencePair aug = seq;
        aug.augmented = true;
        aug.rss_dbm = augment_convolve(seq.rss_dbm, kernel_size);
        out.push_back(std::move(aug));
    }
    return out;
}

} // namespace

SequenceDataset build_dataset(const SceneBundle& scene_bundle,
                              const std::vector<Trajectory>& trajectories,
                              const DatasetConfig& config, uint64_t seed) {
    require(!trajectories.empty(), "no trajectories");
    const int n_gnbs = scene_bundle.scene.num_gnbs();
    require(static_cast<int>(scene_bundle.power_maps.size()) == n_gnbs,
            "scene bundle is missing power maps");
    require(config.gnb_filter < n_gnbs, "gnb_filter out of range");

    std::vector<SequencePair> sequences;
    std::vector<int32_t> traj_ids;
    for (const auto& traj : trajectories) {
        traj_ids.push_back(traj.id);
        for (int g = 0; g < n_gnbs; ++g) {
            if (config.gnb_filter >= 0 && g != config.gnb_filter) {
                continue;
            }
            auto pair = extract_sequences(traj, scene_bundle.power_maps[static_cast<size_t>(g)],
                                          scene_bundle.scene.gnbs[static_cast<size_t>(g)].position,
                                          config.nearest_interp);
            if (config.gnb_filter >= 0) {
                pair.gnb_id = 0; // single-link corpus, one class
            }
            sequences.push_back(std::move(pair));
        }
    }
    const int n_classes = config.gnb_filter >= 0 ? 1 : n_gnbs;

    const auto test_ids = choose_test_trajectories(traj_ids, config.test_fraction, seed);
    if (config.augment) {
        sequences = with_augmented_train(sequences, test_ids, config.augment_kernel);
    }
    return assemble(std::move(sequences), test_ids, n_classes, config, /*scene_hash=*/"");
}

SequenceDataset augment_dataset(const SequenceDataset& dataset, int kernel_size) {
    require(!dataset.sequences.empty(), "dataset carries no raw sequences");
    std::vector<SequencePair> base;
    for (const auto& seq : dataset.sequences) {
        if (!seq.augmented) {
            base.push_back(seq);
        }
    }
    auto sequences = with_augmented_train(base, dataset.test_traj_ids, kernel_size);
    DatasetConfig config;
    config.window_w = dataset.window_w;
    config.stride = dataset.stride;
    config.augment = true;
    config.augment_kernel = kernel_size;
    return assemble(std::move(sequences), dataset.test_traj_ids, dataset.n_classes, config,
                    dataset.scene_hash);
}

std::string dataset_stats_text(const SequenceDataset& ds) {
    int64_t n_train = 0, n_test = 0, n_aug = 0;
    std::vector<int64_t> per_class(static_cast<size_t>(ds.n_classes), 0);
    for (int64_t k = 0; k < ds.rows(); ++k) {
        if (ds.split[static_cast<size_t>(k)] == static_cast<uint8_t>(Split::Train)) {
            ++n_train;
        } else {
            ++n_test;
        }
        if (ds.augmented[static_cast<size_t>(k)] != 0) {
            ++n_aug;
        }
        ++per_class[ds.labels[static_cast<size_t>(k)]];
    }
    std::ostringstream out;
    out << "windows: " << ds.rows() << " (train " << n_train << ", test " << n_test
        << ", augmented " << n_aug << ")\n";
    out << "window_w: " << ds.window_w << ", classes: " << ds.n_classes << "\n";
    out << "sequences: " << ds.sequences.size() << " (dropped short: " << ds.n_short_sequences
        << ")\n";
    for (int c = 0; c < ds.n_classes; ++c) {
        out << "  class " << c << ": " << per_class[static_cast<size_t>(c)] << " windows\n";
    }
    out << "rss_mean: " << format_double(ds.norm_stats.rss_mean)
        << " dBm, rss_std: " << format_double(ds.norm_stats.rss_std) << " dB\n";
    out << "dist_mean: " << format_double(ds.norm_stats.dist_mean)
        << " m, dist_std: " << format_double(ds.norm_stats.dist_std) << " m\n";
    return out.str();
}

namespace {
constexpr int kDatasetFormatVersion = 1;
}

void save_dataset(const SequenceDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_f32_matrix(dir / "x.f32", ds.x);
    write_f32_matrix(dir / "u.f32", ds.u);
    write_u8_vector(dir / "labels.u8", ds.labels);
    write_i32_vector(dir / "traj_ids.i32", ds.traj_ids);
    write_i32_vector(dir / "window_start.i32", ds.window_start);
    write_u8_vector(dir / "split.u8", ds.split);
    write_u8_vector(dir / "augmented.u8", ds.augmented);

    Json seq_index = Json::array();
    std::vector<double> seq_data;
    for (const auto& seq : ds.sequences) {
        seq_index.push_back(Json{{"traj_id", seq.traj_id},
                                 {"gnb_id", static_cast<int>(seq.gnb_id)},
                                 {"augmented", seq.augmented},
                                 {"length", seq.rss_dbm.size()}});
        seq_data.insert(seq_data.end(), seq.rss_dbm.begin(), seq.rss_dbm.end());
        seq_data.insert(seq_data.end(), seq.dist_m.begin(), seq.dist_m.end());
    }
    write_f64_vector(dir / "sequences.f64", seq_data);

    Json manifest{{"format_version", kDatasetFormatVersion},
                  {"kind", "dataset_bundle"},
                  {"rows", ds.rows()},
                  {"window_w", ds.window_w},
                  {"stride", ds.stride},
                  {"n_classes", ds.n_classes},
                  {"n_short_sequences", ds.n_short_sequences},
                  {"scene_hash", ds.scene_hash},
                  {"test_traj_ids", ds.test_traj_ids},
                  {"norm_stats",
                   Json{{"rss_mean", ds.norm_stats.rss_mean},
                        {"rss_std", ds.norm_stats.rss_std},
                        {"dist_mean", ds.norm_stats.dist_mean},
                        {"dist_std", ds.norm_stats.dist_std}}},
                  {"sequences", seq_index}};
    write_json_file(dir / "manifest.json", manifest);
}

SequenceDataset load_dataset(const std::filesystem::path& dir) {
    const Json manifest = read_json_file(dir / "manifest.json");
    require(manifest.value("kind", "") == "dataset_bundle", dir.string() + ": not a dataset bundle");
    const int version = manifest.at("format_version").get<int>();
    require(version == kDatasetFormatVersion,
            "unsupported dataset format version " + std::to_string(version));

    SequenceDataset ds;
    const auto k = manifest.at("rows").get<int64_t>();
    ds.window_w = manifest.at("window_w").get<int>();
    ds.stride = manifest.at("stride").get<int>();
    ds.n_classes = manifest.at("n_classes").get<int>();
    ds.n_short_sequences = manifest.at("n_short_sequences").get<int>();
    ds.scene_hash = manifest.value("scene_hash", "");
    ds.test_traj_ids = manifest.at("test_traj_ids").get<std::vector<int32_t>>();
    const Json& stats = manifest.at("norm_stats");
    ds.norm_stats.rss_mean = stats.at("rss_mean").get<double>();
    ds.norm_stats.rss_std = stats.at("rss_std").get<double>();
    ds.norm_stats.dist_mean = stats.at("dist_mean").get<double>();
    ds.norm_stats.dist_std = stats.at("dist_std").get<double>();

    ds.x = read_f32_matrix(dir / "x.f32", static_cast<int>(k), ds.window_w);
    ds.u = read_f32_matrix(dir / "u.f32", static_cast<int>(k), ds.window_w);
    ds.labels = read_u8_vector(dir / "labels.u8", static_cast<size_t>(k));
    ds.traj_ids = read_i32_vector(dir / "traj_ids.i32", static_cast<size_t>(k));
    ds.window_start = read_i32_vector(dir / "window_start.i32", static_cast<size_t>(k));
    ds.split = read_u8_vector(dir / "split.u8", static_cast<size_t>(k));
    ds.augmented = read_u8_vector(dir / "augmented.u8", static_cast<size_t>(k));

    size_t total = 0;
    for (const auto& js : manifest.at("sequences")) {
        total += 2 * js.at("length").get<size_t>();
    }
    const auto seq_data = read_f64_vector(dir / "sequences.f64", total);
    size_t pos = 0;
    for (const auto& js : manifest.at("sequences")) {
        SequencePair seq;
        seq.traj_id = js.at("traj_id").get<int32_t>();
        seq.gnb_id = static_cast<uint8_t>(js.at("gnb_id").get<int>());
        seq.augmented = js.at("augmented").get<bool>();
        const auto len = js.at("length").get<size_t>();
        seq.rss_dbm.assign(seq_data.begin() + pos, seq_data.begin() + pos + len);
        pos += len;
        seq.dist_m.assign(seq_data.begin() + pos, seq_data.begin() + pos + len);
        pos += len;
        ds.sequences.push_back(std::move(seq));
    }
    ds.validate();
    return ds;
}

} // namespace a2gan
