#pragma once

#include "a2gan/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace a2gan {

/// Axis-aligned rectangular building footprint extruded from the ground.
struct Footprint {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
    double height_m = 0.0;

    bool contains_xy(double x, double y) const {
        return x > x0 && x < x1 && y > y0 && y < y1; // open boundary
    }
};

struct PropagationParams {
    double tx_power_dbm = 0.0; // 0 dBm so RSS equals large-scale gain
    double pathloss_exponent_los = 2.4;
    double pathloss_exponent_nlos = 3.2;
    double reference_loss_db = 61.4; // at 1 m
    double shadowing_std_db = 6.0;
    double shadowing_decorrelation_m = 25.0;
    double nlos_penalty_db = 15.0;

    void validate() const;
};

struct Gnb {
    int id = 0;
    Point3 position;
};

struct Scene {
    double area_width_m = 0.0; // x extent
    double area_depth_m = 0.0; // y extent
    std::vector<Footprint> buildings;
    std::vector<Gnb> gnbs;
    uint64_t seed = 0;
    PropagationParams propagation;

    int num_gnbs() const { return static_cast<int>(gnbs.size()); }
    bool in_bounds(double x, double y) const {
        return x >= 0.0 && x <= area_width_m && y >= 0.0 && y <= area_depth_m;
    }
    void validate() const;
};

struct SceneConfig {
    double area_width_m = 600.0;
    double area_depth_m = 560.0;
    int n_buildings = 40;
    double building_min_size_m = 20.0;
    double building_max_size_m = 40.0;
    double building_min_height_m = 10.0;
    double building_max_height_m = 50.0;
    double street_width_m = 20.0;
    int n_gnbs = 3;
    double gnb_height_m = 30.0;
    PropagationParams propagation;
};

/// Per-gNB grid of ground-truth RSS samples at fixed height, with nodes at
/// multiples of spacing_m from the origin: (col*spacing, row*spacing).
/// Held in double; quantized to float32 only on disk.
struct PowerMap {
    int gnb_id = 0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double spacing_m = 2.0;
    double height_m = 30.0;
    MatD rss_dbm; // (rows, cols) indexed (row=y, col=x)

    int rows() const { return static_cast<int>(rss_dbm.rows()); }
    int cols() const { return static_cast<int>(rss_dbm.cols()); }
};

/// Deterministic synthetic urban deployment: a jittered block grid of
/// buildings separated by streets, with gNBs on rooftop sites.
Scene build_scene(const SceneConfig& config, uint64_t seed);

/// True iff the open segment p1-p2 misses the interior of every building
/// volume. Grazing a footprint face or edge counts as line-of-sight
/// (buildings are open boxes). Symmetric in its arguments.
bool is_los(const Scene& scene, const Point3& p1, const Point3& p2);

/// Log-distance path loss in dB at 3-D distance d (clamped to 1 m).
double path_loss_db(const PropagationParams& p, double d_m, bool los);

/// Ground-truth RSS grid for one gNB:
///   RSS(q) = tx - PL(d3d) - shadow(q) - nlos_penalty * [not LOS]
/// with the shadow field a separable AR(1) sweep in x then y whose axis
/// correlation decays as exp(-lag / decorrelation).
PowerMap compute_power_map(const Scene& scene, int gnb_id, double spacing_m,
                           double height_m, uint64_t seed);

/// Scene bundle on disk: manifest.json + powermap_<id>.f32 per gNB
/// (little-endian float32, row-major).
struct SceneBundle {
    Scene scene;
    std::vector<PowerMap> power_maps;
};

SceneBundle make_scene_bundle(const Scene& scene, double spacing_m, double height_m);

void save_scene_bundle(const SceneBundle& bundle, const std::filesystem::path& dir);
SceneBundle load_scene_bundle(const std::filesystem::path& dir);

} // namespace a2gan
