#include "a2gan/syseval.hpp"

#include "a2gan/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace a2gan {

double shannon_rate(double sinr_db) { return std::log2(1.0 + db_to_linear(sinr_db)); }

std::vector<int> stitch_offsets(int n, int window_w, int stride) {
    require(n >= window_w, "sequence shorter than window");
    auto offsets = window_offsets(n, window_w, stride);
    if (offsets.back() + window_w < n) {
        offsets.push_back(n - window_w); // tail window so every step is covered
    }
    return offsets;
}

std::vector<double> stitch_windows(const MatD& windows, const std::vector<int>& offsets, int n) {
    require(windows.rows() == static_cast<Eigen::Index>(offsets.size()),
            "stitch_windows: offset count mismatch");
    const int w = static_cast<int>(windows.cols());
    std::vector<double> acc(static_cast<size_t>(n), 0.0);
    std::vector<int> hits(static_cast<size_t>(n), 0);
    for (size_t m = 0; m < offsets.size(); ++m) {
        for (int j = 0; j < w; ++j) {
            acc[static_cast<size_t>(offsets[m] + j)] += windows(static_cast<Eigen::Index>(m), j);
            hits[static_cast<size_t>(offsets[m] + j)] += 1;
        }
    }
    for (int i = 0; i < n; ++i) {
        require(hits[static_cast<size_t>(i)] > 0, "stitch_windows: uncovered step");
        acc[static_cast<size_t>(i)] /= hits[static_cast<size_t>(i)];
    }
    return acc;
}

std::pair<std::vector<int>, std::vector<int>> reselect_serving(const MatD& rss_dbm,
                                                               double hysteresis_db) {
    const auto c = rss_dbm.rows();
    const auto n = rss_dbm.cols();
    require(c >= 1 && n >= 1, "reselect_serving: empty trace");
    std::vector<int> serving(static_cast<size_t>(n));
    std::vector<int> handovers;

    Eigen::Index current = 0;
    rss_dbm.col(0).maxCoeff(&current);
    serving[0] = static_cast<int>(current);
    for (Eigen::Index step = 1; step < n; ++step) {
        Eigen::Index best = 0;
        rss_dbm.col(step).maxCoeff(&best);
        if (best != current &&
            rss_dbm(best, step) >= rss_dbm(current, step) + hysteresis_db) {
            current = best;
            handovers.push_back(static_cast<int>(step));
        }
        serving[static_cast<size_t>(step)] = static_cast<int>(current);
    }
    return {std::move(serving), std::move(handovers)};
}

std::vector<double> compute_sinr(const MatD& rss_dbm, const std::vector<int>& serving,
                                 double noise_dbm) {
    const auto c = rss_dbm.rows();
    const auto n = rss_dbm.cols();
    std::vector<double> sinr(static_cast<size_t>(n));
    for (Eigen::Index step = 0; step < n; ++step) {
        const int s = serving[static_cast<size_t>(step)];
        double interference = 0.0;
        for (Eigen::Index g = 0; g < c; ++g) {
            if (g != s) {
                interference += db_to_linear(rss_dbm(g, step));
            }
        }
        if (interference == 0.0) {
            // no interferers: SINR is exactly RSS - noise in dB
            sinr[static_cast<size_t>(step)] = rss_dbm(s, step) - noise_dbm;
        } else {
            sinr[static_cast<size_t>(step)] = linear_to_db(
                db_to_linear(rss_dbm(s, step)) / (interference + db_to_linear(noise_dbm)));
        }
    }
    return sinr;
}

LinkSetTrace make_trace(int traj_id, double step_m, MatD rss_dbm, const SimulateConfig& config) {
    LinkSetTrace trace;
    trace.traj_id = traj_id;
    trace.step_m = step_m;
    trace.rss_dbm = std::move(rss_dbm);
    auto [serving, handovers] = reselect_serving(trace.rss_dbm, config.hysteresis_db);
    trace.serving = std::move(serving);
    trace.handover_steps = std::move(handovers);
    trace.sinr_db = compute_sinr(trace.rss_dbm, trace.serving, config.noise_dbm);
    trace.rate_bps_hz.reserve(trace.sinr_db.size());
    for (double s : trace.sinr_db) {
        trace.rate_bps_hz.push_back(config.rate_mapper ? config.rate_mapper(s) : shannon_rate(s));
    }
    return trace;
}

HandoverStats handover_stats(const LinkSetTrace& trace, double hysteresis_db) {
    HandoverStats stats;
    const auto [serving, handovers] = reselect_serving(trace.rss_dbm, hysteresis_db);
    stats.count = static_cast<int64_t>(handovers.size());
    if (handovers.size() >= 2) {
        double gaps = 0.0;
        for (size_t i = 1; i < handovers.size(); ++i) {
            gaps += handovers[i] - handovers[i - 1];
        }
        stats.mean_steps_between = gaps / static_cast<double>(handovers.size() - 1);
    }
    stats.occupancy.assign(static_cast<size_t>(trace.rss_dbm.rows()), 0.0);
    for (int s : serving) {
        stats.occupancy[static_cast<size_t>(s)] += 1.0;
    }
    for (auto& o : stats.occupancy) {
        o /= static_cast<double>(serving.size());
    }
    return stats;
}

std::string trace_to_csv(const LinkSetTrace& trace) {
    std::ostringstream out;
    out << "step";
    for (Eigen::Index g = 0; g < trace.rss_dbm.rows(); ++g) {
        out << ",rss_gnb" << g;
    }
    out << ",serving,sinr_db,rate_bps_hz,handover\n";
    std::vector<uint8_t> ho(static_cast<size_t>(trace.rss_dbm.cols()), 0);
    for (int h : trace.handover_steps) {
        ho[static_cast<size_t>(h)] = 1;
    }
    for (Eigen::Index n = 0; n < trace.rss_dbm.cols(); ++n) {
        out << n;
        for (Eigen::Index g = 0; g < trace.rss_dbm.rows(); ++g) {
            out << ',' << format_double(trace.rss_dbm(g, n));
        }
        out << ',' << trace.serving[static_cast<size_t>(n)] << ','
            << format_double(trace.sinr_db[static_cast<size_t>(n)]) << ','
            << format_double(trace.rate_bps_hz[static_cast<size_t>(n)]) << ','
            << static_cast<int>(ho[static_cast<size_t>(n)]) << '\n';
    }
    return out.str();
}

std::string traces_summary_csv(const std::vector<LinkSetTrace>& traces) {
    std::ostringstream out;
    out << "traj_id,steps,handovers,handovers_per_km,sinr_p5_db,sinr_p50_db,sinr_p95_db,"
           "mean_rate_bps_hz\n";
    const auto percentile = [](std::vector<double> v, double p) {
        std::sort(v.begin(), v.end());
        const double idx = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<size_t>(std::floor(idx));
        const auto hi = static_cast<size_t>(std::ceil(idx));
        const double frac = idx - static_cast<double>(lo);
        return v[lo] * (1.0 - frac) + v[hi] * frac;
    };
    for (const auto& t : traces) {
        const auto n = static_cast<double>(t.sinr_db.size());
        const double km = n * t.step_m / 1000.0;
        double mean_rate = 0.0;
        for (double r : t.rate_bps_hz) {
            mean_rate += r;
        }
        mean_rate /= n;
        out << t.traj_id << ',' << t.sinr_db.size() << ',' << t.handover_steps.size() << ','
            << format_double(static_cast<double>(t.handover_steps.size()) / km) << ','
            << format_double(percentile(t.sinr_db, 0.05)) << ','
            << format_double(percentile(t.sinr_db, 0.50)) << ','
            << format_double(percentile(t.sinr_db, 0.95)) << ',' << format_double(mean_rate)
            << '\n';
    }
    return out.str();
}

} // namespace a2gan
