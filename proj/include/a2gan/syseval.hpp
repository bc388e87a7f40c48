#pragma once

#include "a2gan/cgan_train.hpp"
#include "a2gan/scene.hpp"
#include "a2gan/trajectory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace a2gan {

/// Per-trajectory link-level trace: RSS towards every gNB, the serving
/// cell chosen by hysteresis reselection, SINR, and handover instants.
struct LinkSetTrace {
    int traj_id = 0;
    double step_m = 2.0;
    MatD rss_dbm;                    // C x N
    std::vector<int> serving;        // N
    std::vector<double> sinr_db;     // N
    std::vector<double> rate_bps_hz; // N, via the configured SINR-to-rate map
    std::vector<int> handover_steps; // strictly increasing
};

struct HandoverStats {
    int64_t count = 0;
    double mean_steps_between = 0.0;
    std::vector<double> occupancy; // fraction of steps served per gNB
};

/// SINR (dB) to spectral efficiency; defaults to log2(1 + sinr).
using RateMapper = std::function<double(double sinr_db)>;
double shannon_rate(double sinr_db);

struct SimulateConfig {
    int n_trajectories = 100;
    double noise_dbm = -94.0;
    double hysteresis_db = 3.0;
    int stitch_stride = 64; // < window_w so windows overlap
    TrajectoryConfig trajectory;
    RateMapper rate_mapper = shannon_rate;
};

/// Mean-over-overlaps stitching of sliding windows back into a length-n
/// sequence. Offsets must cover every index.
std::vector<double> stitch_windows(const MatD& windows, const std::vector<int>& offsets, int n);

/// Window offsets for generation covering the whole sequence: regular
/// stride plus a tail window anchored at n - w when needed.
std::vector<int> stitch_offsets(int n, int window_w, int stride);

/// Strongest-cell reselection with hysteresis: starting from the strongest
/// cell, switch at step n iff the best competitor exceeds the serving RSS
/// by at least hysteresis_db. Returns serving index per step and switch
/// instants.
std::pair<std::vector<int>, std::vector<int>> reselect_serving(const MatD& rss_dbm,
                                                               double hysteresis_db);

/// SINR per step in dB: serving power over summed interference plus noise,
/// all in linear units. Reduces to exact RSS - noise when nothing
/// interferes.
std::vector<double> compute_sinr(const MatD& rss_dbm, const std::vector<int>& serving,
                                 double noise_dbm);

HandoverStats handover_stats(const LinkSetTrace& trace, double hysteresis_db);

std::string trace_to_csv(const LinkSetTrace& trace);
std::string traces_summary_csv(const std::vector<LinkSetTrace>& traces);

/// Builds a trace from per-gNB RSS already at hand (used by tests and by
/// simulate_links).
LinkSetTrace make_trace(int traj_id, double step_m, MatD rss_dbm, const SimulateConfig& config);

/// Seed mixing for per-trajectory / per-link substreams.
inline uint64_t splitmix_mix(uint64_t seed, std::string_view name, int64_t index) {
    uint64_t s = seed ^ hash64(name);
    s += 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(index + 1);
    return splitmix64(s);
}

/// The exploitation loop: sample fresh trajectories, condition the trained
/// generator on per-gNB distance sequences, stitch windows, and derive
/// serving cell, SINR, and handovers. Deterministic in seed.
template <typename S>
std::vector<LinkSetTrace> simulate_links(const Scene& scene, GanBundle<S>& bundle,
                                         const SimulateConfig& config, uint64_t seed) {
    require(bundle.has_norm_stats, "simulate_links requires a trained bundle");
    const int n_gnbs = scene.num_gnbs();
    require(n_gnbs >= 1, "scene has no gNBs");
    const int w = bundle.config.window_w;
    require(config.stitch_stride >= 1 && config.stitch_stride <= w,
            "stitch_stride must be in [1, window_w]");
    const bool class_agnostic = bundle.config.n_classes == 1;
    require(class_agnostic || bundle.config.n_classes == n_gnbs,
            "bundle classes do not match scene gNB count");

    std::vector<LinkSetTrace> traces;
    for (int t = 0; t < config.n_trajectories; ++t) {
        Trajectory traj =
            generate_trajectory(scene, splitmix_mix(seed, "sim_traj", t), config.trajectory);
        traj.id = t;
        const int n = traj.length();
        require(n >= w, "simulated trajectory shorter than window_w");
        const auto offsets = stitch_offsets(n, w, config.stitch_stride);

        MatD rss(n_gnbs, n);
        for (int g = 0; g < n_gnbs; ++g) {
            const auto dist = distance_sequence(traj, scene.gnbs[static_cast<size_t>(g)].position);
            MatD u_windows(static_cast<Eigen::Index>(offsets.size()), w);
            for (size_t m = 0; m < offsets.size(); ++m) {
                for (int j = 0; j < w; ++j) {
                    u_windows(static_cast<Eigen::Index>(m), j) =
                        dist[static_cast<size_t>(offsets[m] + j)];
                }
            }
            const std::vector<uint8_t> labels(offsets.size(),
                                              static_cast<uint8_t>(class_agnostic ? 0 : g));
            const MatD gen = generate_sequences(bundle, u_windows, labels,
                                                splitmix_mix(seed, "sim_gen", t * n_gnbs + g));
            const auto stitched = stitch_windows(gen, offsets, n);
            for (int j = 0; j < n; ++j) {
                rss(g, j) = stitched[static_cast<size_t>(j)];
            }
        }
        traces.push_back(make_trace(t, traj.step_m, std::move(rss), config));
    }
    return traces;
}

} // namespace a2gan
