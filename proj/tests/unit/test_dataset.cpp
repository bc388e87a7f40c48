#include "a2gan/dataset.hpp"

#include "a2gan/io.hpp"
#include "a2gan/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace a2gan;

namespace {

SceneBundle tiny_bundle(int n_gnbs = 2, uint64_t seed = 7) {
    SceneConfig cfg;
    cfg.area_width_m = 240.0;
    cfg.area_depth_m = 240.0;
    cfg.n_buildings = 6;
    cfg.building_max_height_m = 28.0;
    cfg.n_gnbs = n_gnbs;
    return make_scene_bundle(build_scene(cfg, seed), 2.0, 30.0);
}

std::vector<Trajectory> tiny_trajectories(const Scene& scene, int count, int steps,
                                          uint64_t seed = 100) {
    TrajectoryConfig cfg;
    cfg.min_steps = steps;
    cfg.max_steps = steps;
    std::vector<Trajectory> out;
    for (int i = 0; i < count; ++i) {
        Trajectory t = generate_trajectory(scene, seed + static_cast<uint64_t>(i), cfg);
        t.id = i;
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace

TEST_CASE("bilinear sampling: node identity, midpoint, neighborhood bounds") {
    PowerMap map;
    map.spacing_m = 2.0;
    map.rss_dbm.resize(2, 2);
    map.rss_dbm << -80.0, -80.0, -90.0, -90.0;

    CHECK(sample_power_map(map, 0.0, 0.0) == -80.0);
    CHECK(sample_power_map(map, 2.0, 2.0) == -90.0);
    CHECK(sample_power_map(map, 1.0, 1.0) == doctest::Approx(-85.0));

    RngStream rng(4);
    PowerMap big;
    big.spacing_m = 2.0;
    big.rss_dbm.resize(20, 20);
    for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) {
            big.rss_dbm(r, c) = -120.0 + 60.0 * rng.u01();
        }
    }
    for (int i = 0; i < 500; ++i) {
        const double x = 38.0 * rng.u01();
        const double y = 38.0 * rng.u01();
        const double v = sample_power_map(big, x, y);
        const int c0 = static_cast<int>(x / 2.0);
        const int r0 = static_cast<int>(y / 2.0);
        double lo = 1e9;
        double hi = -1e9;
        for (int dr = 0; dr <= 1; ++dr) {
            for (int dc = 0; dc <= 1; ++dc) {
                lo = std::min(lo, big.rss_dbm(std::min(r0 + dr, 19), std::min(c0 + dc, 19)));
                hi = std::max(hi, big.rss_dbm(std::min(r0 + dr, 19), std::min(c0 + dc, 19)));
            }
        }
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
    }

    CHECK_THROWS_AS(sample_power_map(big, -0.5, 3.0), Error);
    CHECK_THROWS_AS(sample_power_map(big, 3.0, 39.0), Error);
}

TEST_CASE("window offsets: counts and boundaries") {
    CHECK(window_offsets(700, 128, 64).size() == 9);
    CHECK(window_offsets(128, 128, 64).size() == 1);
    CHECK(window_offsets(127, 128, 64).empty());
    const auto offs = window_offsets(700, 128, 64);
    CHECK(offs.front() == 0);
    CHECK(offs.back() + 128 <= 700);
}

TEST_CASE("augment_convolve: fixed points, impulse, contraction") {
    const std::vector<double> constant(50, -90.0);
    const auto smoothed = augment_convolve(constant, 20);
    REQUIRE(smoothed.size() == 50);
    for (double v : smoothed) {
        CHECK(v == doctest::Approx(-90.0).epsilon(1e-15));
    }

    std::vector<double> impulse(101, 0.0);
    impulse[50] = 1.0;
    const auto box = augment_convolve(impulse, 20);
    REQUIRE(box.size() == 101);
    int n_hot = 0;
    for (size_t i = 0; i < box.size(); ++i) {
        if (box[i] != 0.0) {
            CHECK(box[i] == doctest::Approx(1.0 / 20.0).epsilon(1e-12));
            ++n_hot;
        }
    }
    CHECK(n_hot == 20);

    std::vector<double> any{1.0, 5.0, -2.0, 0.5};
    CHECK(augment_convolve(any, 1) == any);
    CHECK_THROWS_AS(augment_convolve(any, 5), Error);

    // moving average never widens the deviation spread
    RngStream rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(140);
        for (auto& v : x) {
            v = -100.0 + 30.0 * rng.normal();
        }
        const auto y = augment_convolve(x, 20);
        const auto stddev = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double a : v) {
                m += a;
            }
            m /= static_cast<double>(v.size());
            double s = 0.0;
            for (double a : v) {
                s += (a - m) * (a - m);
            }
            return std::sqrt(s / static_cast<double>(v.size()));
        };
        CHECK(stddev(y) <= stddev(x) + 1e-12);
    }
}

TEST_CASE("normalization: affine map and round trip") {
    CHECK(normalize_value(-85.0, -95.0, 10.0) == doctest::Approx(1.0));
    RngStream rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = -150.0 + 100.0 * rng.u01();
        const double round = denormalize_value(normalize_value(v, -95.2, 7.3), -95.2, 7.3);
        CHECK(std::abs(round - v) < 1e-9);
    }
}

TEST_CASE("trajectory-level split") {
    std::vector<int32_t> ids;
    for (int32_t i = 0; i < 10; ++i) {
        ids.push_back(i);
        ids.push_back(i); // several sequences share a trajectory
    }
    const auto test_a = choose_test_trajectories(ids, 0.2, 42);
    const auto test_b = choose_test_trajectories(ids, 0.2, 42);
    CHECK(test_a == test_b);
    CHECK(test_a.size() == 2);
    CHECK_THROWS_AS(choose_test_trajectories(ids, 0.0, 1), Error);
    CHECK_THROWS_AS(choose_test_trajectories(ids, 1.0, 1), Error);
    CHECK_THROWS_AS(choose_test_trajectories(std::vector<int32_t>{3}, 0.2, 1), Error);
}

TEST_CASE("build_dataset: alignment, stats, split and augmentation rules") {
    const SceneBundle bundle = tiny_bundle(2);
    const auto trajectories = tiny_trajectories(bundle.scene, 10, 200);
    DatasetConfig cfg;
    cfg.window_w = 64;
    cfg.stride = 32;
    cfg.test_fraction = 0.2;
    cfg.augment = true;
    cfg.augment_kernel = 20;
    const SequenceDataset ds = build_dataset(bundle, trajectories, cfg, 7);

    CHECK(ds.n_classes == 2);
    CHECK(ds.window_w == 64);
    REQUIRE(ds.rows() > 0);

    // train-split normalization status
    const auto train_rows = ds.rows_of(Split::Train);
    double sum = 0.0;
    double sq = 0.0;
    for (auto r : train_rows) {
        for (int j = 0; j < ds.window_w; ++j) {
            sum += ds.x(r, j);
            sq += static_cast<double>(ds.x(r, j)) * ds.x(r, j);
        }
    }
    const double n = static_cast<double>(train_rows.size()) * ds.window_w;
    const double mean = sum / n;
    const double std = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(std - 1.0) < 1e-6);

    // no augmented rows in test; no trajectory in both splits
    std::set<int32_t> train_ids;
    std::set<int32_t> test_ids;
    for (int64_t k = 0; k < ds.rows(); ++k) {
        if (ds.split[static_cast<size_t>(k)] == static_cast<uint8_t>(Split::Test)) {
            CHECK(ds.augmented[static_cast<size_t>(k)] == 0);
            test_ids.insert(ds.traj_ids[static_cast<size_t>(k)]);
        } else {
            train_ids.insert(ds.traj_ids[static_cast<size_t>(k)]);
        }
    }
    for (int32_t id : test_ids) {
        CHECK(train_ids.count(id) == 0);
    }

    // row alignment against a recomputation from the raw sequences
    for (int64_t k = 0; k < ds.rows(); k += 37) {
        const auto label = ds.labels[static_cast<size_t>(k)];
        const auto tid = ds.traj_ids[static_cast<size_t>(k)];
        const auto aug = ds.augmented[static_cast<size_t>(k)] != 0;
        const auto start = ds.window_start[static_cast<size_t>(k)];
        const SequencePair* src = nullptr;
        for (const auto& seq : ds.sequences) {
            if (seq.traj_id == tid && seq.gnb_id == label && seq.augmented == aug) {
                src = &seq;
                break;
            }
        }
        REQUIRE(src != nullptr);
        for (int j = 0; j < ds.window_w; ++j) {
            const float expect_x = static_cast<float>(normalize_value(
                src->rss_dbm[static_cast<size_t>(start + j)], ds.norm_stats.rss_mean,
                ds.norm_stats.rss_std));
            const float expect_u = static_cast<float>(normalize_value(
                src->dist_m[static_cast<size_t>(start + j)], ds.norm_stats.dist_mean,
                ds.norm_stats.dist_std));
            CHECK(ds.x(k, j) == expect_x);
            CHECK(ds.u(k, j) == expect_u);
        }
    }
}

TEST_CASE("test-split normalized mean is generally nonzero") {
    const SceneBundle bundle = tiny_bundle(1);
    const auto trajectories = tiny_trajectories(bundle.scene, 8, 150);
    DatasetConfig cfg;
    cfg.window_w = 64;
    cfg.stride = 64;
    cfg.test_fraction = 0.25;
    const SequenceDataset ds = build_dataset(bundle, trajectories, cfg, 3);
    const auto test_rows = ds.rows_of(Split::Test);
    REQUIRE(!test_rows.empty());
    double sum = 0.0;
    for (auto r : test_rows) {
        for (int j = 0; j < ds.window_w; ++j) {
            sum += ds.x(r, j);
        }
    }
    const double mean = sum / (static_cast<double>(test_rows.size()) * ds.window_w);
    CHECK(std::abs(mean) > 1e-6); // train-only stats do not center the test split
}

TEST_CASE("augment_dataset equals build with augmentation") {
    const SceneBundle bundle = tiny_bundle(2);
    const auto trajectories = tiny_trajectories(bundle.scene, 6, 150);
    DatasetConfig cfg;
    cfg.window_w = 64;
    cfg.stride = 32;
    cfg.augment = false;
    const SequenceDataset plain = build_dataset(bundle, trajectories, cfg, 9);
    DatasetConfig cfg_aug = cfg;
    cfg_aug.augment = true;
    const SequenceDataset direct = build_dataset(bundle, trajectories, cfg_aug, 9);
    const SequenceDataset derived = augment_dataset(plain, cfg.augment_kernel);

    REQUIRE(direct.rows() == derived.rows());
    CHECK((direct.x - derived.x).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((direct.u - derived.u).cwiseAbs().maxCoeff() == 0.0f);
    CHECK(direct.labels == derived.labels);
    CHECK(direct.norm_stats.rss_mean == derived.norm_stats.rss_mean);
}

TEST_CASE("dataset serialization round-trips bit-exactly") {
    const SceneBundle bundle = tiny_bundle(2);
    const auto trajectories = tiny_trajectories(bundle.scene, 6, 150);
    DatasetConfig cfg;
    cfg.window_w = 64;
    cfg.stride = 32;
    cfg.augment = true;
    const SequenceDataset ds = build_dataset(bundle, trajectories, cfg, 5);

    const auto dir = std::filesystem::temp_directory_path() / "a2gan_test_dataset";
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    const SequenceDataset loaded = load_dataset(dir);
    std::filesystem::remove_all(dir);

    REQUIRE(loaded.rows() == ds.rows());
    CHECK((loaded.x - ds.x).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((loaded.u - ds.u).cwiseAbs().maxCoeff() == 0.0f);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.split == ds.split);
    CHECK(loaded.augmented == ds.augmented);
    CHECK(std::abs(loaded.norm_stats.rss_mean - ds.norm_stats.rss_mean) < 1e-12);
    CHECK(std::abs(loaded.norm_stats.rss_std - ds.norm_stats.rss_std) < 1e-12);
    CHECK(std::abs(loaded.norm_stats.dist_mean - ds.norm_stats.dist_mean) < 1e-12);
    CHECK(std::abs(loaded.norm_stats.dist_std - ds.norm_stats.dist_std) < 1e-12);
    REQUIRE(loaded.sequences.size() == ds.sequences.size());
    CHECK(loaded.sequences.back().rss_dbm == ds.sequences.back().rss_dbm);
}

TEST_CASE("gnb_filter keeps one link set and relabels to class 0") {
    const SceneBundle bundle = tiny_bundle(2);
    const auto trajectories = tiny_trajectories(bundle.scene, 6, 150);
    DatasetConfig cfg;
    cfg.window_w = 64;
    cfg.stride = 32;
    cfg.gnb_filter = 1;
    const SequenceDataset ds = build_dataset(bundle, trajectories, cfg, 5);
    CHECK(ds.n_classes == 1);
    for (auto label : ds.labels) {
        CHECK(label == 0);
    }
    // matches the unfiltered gNB-1 sequences
    DatasetConfig full = cfg;
    full.gnb_filter = -1;
    const SequenceDataset all = build_dataset(bundle, trajectories, full, 5);
    int64_t gnb1_rows = 0;
    for (auto label : all.labels) {
        gnb1_rows += label == 1 ? 1 : 0;
    }
    CHECK(ds.rows() == gnb1_rows);
}
