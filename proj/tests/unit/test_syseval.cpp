#include "a2gan/syseval.hpp"

#include <doctest.h>

#include <cmath>

using namespace a2gan;

TEST_CASE("stitching reproduces a sequence cut into overlapping windows") {
    RngStream rng(3);
    const int n = 300;
    const int w = 64;
    std::vector<double> seq(n);
    for (auto& v : seq) {
        v = -100.0 + 10.0 * rng.normal();
    }
    const auto offsets = stitch_offsets(n, w, 32);
    CHECK(offsets.back() + w == n);
    MatD windows(static_cast<Eigen::Index>(offsets.size()), w);
    for (size_t m = 0; m < offsets.size(); ++m) {
        for (int j = 0; j < w; ++j) {
            windows(static_cast<Eigen::Index>(m), j) = seq[static_cast<size_t>(offsets[m] + j)];
        }
    }
    const auto stitched = stitch_windows(windows, offsets, n);
    for (int i = 0; i < n; ++i) {
        CHECK(stitched[static_cast<size_t>(i)] ==
              doctest::Approx(seq[static_cast<size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("single-cell traces have no handovers and SINR equals SNR exactly") {
    MatD rss(1, 50);
    RngStream rng(5);
    for (int i = 0; i < 50; ++i) {
        rss(0, i) = -95.0 + 5.0 * rng.normal();
    }
    SimulateConfig cfg;
    cfg.noise_dbm = -94.0;
    const LinkSetTrace trace = make_trace(0, 2.0, rss, cfg);
    CHECK(trace.handover_steps.empty());
    for (int i = 0; i < 50; ++i) {
        CHECK(trace.sinr_db[static_cast<size_t>(i)] == rss(0, i) - (-94.0)); // exact
        CHECK(trace.serving[static_cast<size_t>(i)] == 0);
    }
    CHECK(handover_stats(trace, 0.0).count == 0);
}

TEST_CASE("one crossing with zero hysteresis gives exactly one handover") {
    const int n = 20;
    MatD rss(2, n);
    for (int i = 0; i < n; ++i) {
        rss(0, i) = -80.0 - i;        // falling
        rss(1, i) = -99.0 + i;        // rising, crosses at i = 10
    }
    const auto [serving, handovers] = reselect_serving(rss, 0.0);
    REQUIRE(handovers.size() == 1);
    CHECK(handovers[0] == 10);
    CHECK(serving[9] == 0);
    CHECK(serving[10] == 1);
    CHECK(serving[n - 1] == 1);
}

TEST_CASE("hysteresis suppresses ping-pong and is monotone") {
    const int n = 200;
    MatD rss(2, n);
    RngStream rng(9);
    for (int i = 0; i < n; ++i) {
        // two cells within a couple of dB of each other, noisy
        rss(0, i) = -90.0 + 1.5 * rng.normal();
        rss(1, i) = -90.0 + 1.5 * rng.normal();
    }
    SimulateConfig cfg;
    const LinkSetTrace trace = make_trace(1, 2.0, rss, cfg);
    const auto count_at = [&](double h) { return handover_stats(trace, h).count; };
    CHECK(count_at(3.0) <= count_at(0.0));
    int64_t prev = count_at(0.0);
    for (double h : {0.5, 1.0, 2.0, 3.0, 5.0, 8.0}) {
        const int64_t now = count_at(h);
        CHECK(now <= prev);
        prev = now;
    }
}

TEST_CASE("serving cell maximizes RSS up to the hysteresis band") {
    RngStream rng(12);
    MatD rss(3, 150);
    for (int g = 0; g < 3; ++g) {
        rss(g, 0) = -90.0 + 5.0 * rng.normal();
        for (int i = 1; i < 150; ++i) {
            rss(g, i) = rss(g, i - 1) + 0.8 * rng.normal();
        }
    }
    const double h = 3.0;
    const auto [serving, handovers] = reselect_serving(rss, h);
    (void)handovers;
    for (int i = 0; i < 150; ++i) {
        const int s = serving[static_cast<size_t>(i)];
        for (int g = 0; g < 3; ++g) {
            CHECK(rss(g, i) < rss(s, i) + h + 1e-12);
        }
    }
}

TEST_CASE("equal-power interferers match the closed form and SINR <= SNR") {
    const double r = -85.0;
    const double noise = -94.0;
    MatD rss = MatD::Constant(3, 10, r);
    SimulateConfig cfg;
    cfg.noise_dbm = noise;
    const LinkSetTrace trace = make_trace(2, 2.0, rss, cfg);
    const double expected =
        r - 10.0 * std::log10(2.0 * std::pow(10.0, r / 10.0) + std::pow(10.0, noise / 10.0));
    for (double s : trace.sinr_db) {
        CHECK(s == doctest::Approx(expected).epsilon(1e-12));
        CHECK(s <= r - noise); // SINR <= SNR
    }

    RngStream rng(31);
    MatD noisy(3, 100);
    for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < 100; ++i) {
            noisy(g, i) = -95.0 + 8.0 * rng.normal();
        }
    }
    const LinkSetTrace t2 = make_trace(3, 2.0, noisy, cfg);
    for (size_t i = 0; i < t2.sinr_db.size(); ++i) {
        const double snr = noisy(t2.serving[i], static_cast<Eigen::Index>(i)) - noise;
        CHECK(t2.sinr_db[i] <= snr + 1e-12);
    }
}

TEST_CASE("handover stats: occupancy and dwell") {
    MatD rss(2, 12);
    for (int i = 0; i < 12; ++i) {
        rss(0, i) = i < 6 ? -80.0 : -100.0;
        rss(1, i) = i < 6 ? -100.0 : -80.0;
    }
    SimulateConfig cfg;
    cfg.hysteresis_db = 0.0;
    const LinkSetTrace trace = make_trace(4, 2.0, rss, cfg);
    const HandoverStats stats = handover_stats(trace, 0.0);
    CHECK(stats.count == 1);
    CHECK(stats.occupancy[0] == doctest::Approx(0.5));
    CHECK(stats.occupancy[1] == doctest::Approx(0.5));
}

TEST_CASE("simulate_links is deterministic and honors the 1-gNB contract") {
    SceneConfig scfg;
    scfg.area_width_m = 200.0;
    scfg.area_depth_m = 200.0;
    scfg.n_buildings = 4;
    scfg.building_max_height_m = 28.0;
    scfg.n_gnbs = 1;
    const Scene scene = build_scene(scfg, 3);

    GanConfig gcfg;
    gcfg.latent_dim = 8;
    gcfg.embed_dim = 10;
    gcfg.n_layers = 1;
    gcfg.n_heads = 2;
    gcfg.patch_size = 8;
    gcfg.window_w = 32;
    gcfg.n_classes = 1;
    gcfg.mode = GanMode::SingleGnb;
    GanBundle<float> bundle = init_gan_bundle<float>(gcfg, 6);
    bundle.has_norm_stats = true;
    bundle.norm_stats = {-95.0, 6.0, 150.0, 60.0};

    SimulateConfig sim;
    sim.n_trajectories = 2;
    sim.stitch_stride = 16;
    sim.trajectory.min_steps = 60;
    sim.trajectory.max_steps = 80;

    const auto traces = simulate_links(scene, bundle, sim, 44);
    REQUIRE(traces.size() == 2);
    for (const auto& t : traces) {
        CHECK(t.rss_dbm.rows() == 1);
        CHECK(t.handover_steps.empty());
        for (size_t i = 0; i < t.sinr_db.size(); ++i) {
            CHECK(t.sinr_db[i] == t.rss_dbm(0, static_cast<Eigen::Index>(i)) - sim.noise_dbm);
        }
    }
    const auto traces2 = simulate_links(scene, bundle, sim, 44);
    CHECK((traces[0].rss_dbm - traces2[0].rss_dbm).cwiseAbs().maxCoeff() == 0.0);
    const auto traces3 = simulate_links(scene, bundle, sim, 45);
    CHECK((traces[0].rss_dbm - traces3[0].rss_dbm).cwiseAbs().maxCoeff() > 0.0);
}
