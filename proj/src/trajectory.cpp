#include "a2gan/trajectory.hpp"

#include "a2gan/io.hpp"
#include "a2gan/rng.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace a2gan {

namespace {

constexpr std::array<std::pair<int, int>, 4> kStep = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

struct Grid {
    int nx = 0;
    int ny = 0;
    std::vector<uint8_t> blocked; // nx*ny, row-major by y

    bool is_blocked(int i, int j) const { return blocked[static_cast<size_t>(j) * nx + i] != 0; }
    bool legal(int i, int j) const {
        return i >= 0 && i < nx && j >= 0 && j < ny && !is_blocked(i, j);
    }
};

Grid build_grid(const Scene& scene, double step_m, double height_m) {
    Grid grid;
    grid.nx = static_cast<int>(std::floor(scene.area_width_m / step_m)) + 1;
    grid.ny = static_cast<int>(std::floor(scene.area_depth_m / step_m)) + 1;
    grid.blocked.assign(static_cast<size_t>(grid.nx) * grid.ny, 0);
    for (const auto& b : scene.buildings) {
        if (b.height_m <= height_m) {
            continue; // overflown
        }
        const int i0 = std::max(0, static_cast<int>(std::floor(b.x0 / step_m)));
        const int i1 = std::min(grid.nx - 1, static_cast<int>(std::ceil(b.x1 / step_m)));
        const int j0 = std::max(0, static_cast<int>(std::floor(b.y0 / step_m)));
        const int j1 = std::min(grid.ny - 1, static_cast<int>(std::ceil(b.y1 / step_m)));
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
                if (b.contains_xy(i * step_m, j * step_m)) {
                    grid.blocked[static_cast<size_t>(j) * grid.nx + i] = 1;
                }
            }
        }
    }
    return grid;
}

} // namespace

Trajectory generate_trajectory(const Scene& scene, uint64_t seed, const TrajectoryConfig& config) {
    require(config.min_steps >= 1 && config.max_steps >= config.min_steps,
            "invalid n_steps range");
    require(config.step_m > 0.0, "step_m must be > 0");
    require(config.p_straight >= 0.0 && config.p_straight <= 1.0,
            "p_straight must be in [0, 1]");

    const Grid grid = build_grid(scene, config.step_m, config.height_m);
    RngStream rng = RngStream::derive(seed, "trajectory");

    int ci = 0;
    int cj = 0;
    if (config.start_cell) {
        ci = config.start_cell->first;
        cj = config.start_cell->second;
        require(grid.legal(ci, cj), "configured start cell is blocked or out of bounds");
    } else {
        std::vector<int> open;
        open.reserve(grid.blocked.size());
        for (int idx = 0; idx < static_cast<int>(grid.blocked.size()); ++idx) {
            if (grid.blocked[static_cast<size_t>(idx)] == 0) {
                open.push_back(idx);
            }
        }
        require(!open.empty(), "no valid start cell: every grid node is blocked at flight height");
        const int pick = open[static_cast<size_t>(rng.uniform_int(open.size()))];
        ci = pick % grid.nx;
        cj = pick / grid.nx;
    }

    int heading = config.start_heading ? static_cast<int>(*config.start_heading)
                                       : static_cast<int>(rng.uniform_int(4));

    const int n_steps = static_cast<int>(rng.uniform_range(config.min_steps, config.max_steps));

    Trajectory traj;
    traj.step_m = config.step_m;
    traj.height_m = config.height_m;
    traj.waypoints.reserve(static_cast<size_t>(n_steps) + 1);
    traj.waypoints.push_back({ci * config.step_m, cj * config.step_m, config.height_m});

    for (int s = 0; s < n_steps; ++s) {
        const auto legal_dir = [&](int d) {
            return grid.legal(ci + kStep[static_cast<size_t>(d)].first,
                              cj + kStep[static_cast<size_t>(d)].second);
        };
        int chosen = -1;
        const bool straight_ok = legal_dir(heading);
        // Draw the persistence variable every step so the decision sequence
        // does not depend on local geometry.
        const bool keep = rng.u01() < config.p_straight;
        if (keep && straight_ok) {
            chosen = heading;
        } else {
            std::array<int, 3> alt{};
            int n_alt = 0;
            for (int d = 0; d < 4; ++d) {
                if (d != heading && legal_dir(d)) {
                    alt[static_cast<size_t>(n_alt++)] = d;
                }
            }
            if (n_alt > 0) {
                chosen = alt[static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(n_alt)))];
            } else if (straight_ok) {
                chosen = heading; // dead-ahead corridor
            } else {
                fail("trajectory trapped at step " + std::to_string(s) +
                     ": no legal move from (" + std::to_string(ci) + "," + std::to_string(cj) + ")");
            }
        }
        heading = chosen;
        ci += kStep[static_cast<size_t>(heading)].first;
        cj += kStep[static_cast<size_t>(heading)].second;
        traj.waypoints.push_back({ci * config.step_m, cj * config.step_m, config.height_m});
    }
    return traj;
}

std::vector<double> distance_sequence(const Trajectory& trajectory, const Point3& gnb_position) {
    require(!trajectory.waypoints.empty(), "distance_sequence: empty trajectory");
    std::vector<double> d;
    d.reserve(trajectory.waypoints.size());
    for (const auto& w : trajectory.waypoints) {
        d.push_back(distance3d(w, gnb_position));
    }
    return d;
}

std::string trajectory_to_csv(const std::vector<Trajectory>& trajectories) {
    std::ostringstream out;
    out << "id,step,x,y,z\n";
    for (const auto& t : trajectories) {
        for (size_t n = 0; n < t.waypoints.size(); ++n) {
            const auto& w = t.waypoints[n];
            out << t.id << ',' << n << ',' << format_double(w.x) << ',' << format_double(w.y)
                << ',' << format_double(w.z) << '\n';
        }
    }
    return out.str();
}

} // namespace a2gan
