#pragma once

#include "a2gan/common.hpp"
#include "a2gan/scene.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace a2gan {

struct Trajectory {
    int id = 0;
    std::vector<Point3> waypoints;
    double step_m = 2.0;
    double height_m = 30.0;

    int length() const { return static_cast<int>(waypoints.size()); }
};

/// Heading on the street grid.
enum class Heading { PosX = 0, NegX = 1, PosY = 2, NegY = 3 };

struct TrajectoryConfig {
    // Number of movement steps (segments); a walk of n steps visits n+1
    // waypoints. Defaults keep the waypoint count in [600, 800].
    int min_steps = 599;
    int max_steps = 799;
    double step_m = 2.0;
    double height_m = 30.0;
    double p_straight = 0.8;
    // Fixed start node/heading for reproducing specific paths in tests.
    std::optional<std::pair<int, int>> start_cell;
    std::optional<Heading> start_heading;
};

/// Street-grid random walk at constant altitude. Movement happens between
/// nodes of the power-map grid (spacing step_m); a node is blocked when it
/// lies strictly inside a footprint taller than the flight height, so
/// shorter buildings are overflown. At each step the walk keeps its heading
/// with probability p_straight, otherwise it turns uniformly at random onto
/// one of the other legal directions.
Trajectory generate_trajectory(const Scene& scene, uint64_t seed, const TrajectoryConfig& config);

/// Per-step 3-D distance to a gNB position.
std::vector<double> distance_sequence(const Trajectory& trajectory, const Point3& gnb_position);

/// Plain CSV (id, step, x, y, z), one row per waypoint.
std::string trajectory_to_csv(const std::vector<Trajectory>& trajectories);

} // namespace a2gan
