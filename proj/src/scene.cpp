#include "a2gan/scene.hpp"

#include "a2gan/io.hpp"
#include "a2gan/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace a2gan {

void PropagationParams::validate() const {
    require(pathloss_exponent_los > 0.0 && pathloss_exponent_nlos > 0.0,
            "path-loss exponents must be > 0");
    require(shadowing_std_db >= 0.0, "shadowing_std_db must be >= 0");
    require(shadowing_decorrelation_m > 0.0, "shadowing_decorrelation_m must be > 0");
}

void Scene::validate() const {
    require(area_width_m > 0.0 && area_depth_m > 0.0, "area bounds must be positive");
    propagation.validate();
    for (const auto& b : buildings) {
        require(b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= area_width_m && b.y1 <= area_depth_m,
                "building footprint outside area bounds");
        require(b.x1 > b.x0 && b.y1 > b.y0, "degenerate building footprint");
        require(b.height_m > 0.0, "building height must be > 0");
    }
    for (size_t i = 0; i < gnbs.size(); ++i) {
        require(gnbs[i].id == static_cast<int>(i), "gNB ids must be 0..C-1 with no gaps");
        require(in_bounds(gnbs[i].position.x, gnbs[i].position.y),
                "gNB position outside area bounds");
    }
}

Scene build_scene(const SceneConfig& config, uint64_t seed) {
    require(config.n_gnbs >= 1, "scene requires at least one gNB");
    require(config.n_buildings >= 0, "n_buildings must be >= 0");
    require(config.building_min_size_m > 0.0 &&
                config.building_max_size_m >= config.building_min_size_m,
            "invalid building size range");
    require(config.building_min_height_m > 0.0 &&
                config.building_max_height_m >= config.building_min_height_m,
            "invalid building height range");

    Scene scene;
    scene.area_width_m = config.area_width_m;
    scene.area_depth_m = config.area_depth_m;
    scene.seed = seed;
    scene.propagation = config.propagation;

    RngStream rng = RngStream::derive(seed, "scene");

    // Jittered block grid: one candidate slot per block, streets in between.
    const double pitch = config.building_max_size_m + config.street_width_m;
    const int nx = static_cast<int>(std::floor((config.area_width_m - config.street_width_m) / pitch));
    const int ny = static_cast<int>(std::floor((config.area_depth_m - config.street_width_m) / pitch));
    const int n_slots = std::max(0, nx) * std::max(0, ny);
    if (config.n_buildings > 0) {
        require(n_slots >= config.n_buildings,
                "area too small: " + std::to_string(config.n_buildings) + " buildings requested but only " +
                    std::to_string(n_slots) + " street-grid slots fit without overlap");
    }

    std::vector<int> slots(static_cast<size_t>(n_slots));
    std::iota(slots.begin(), slots.end(), 0);
    rng.shuffle(slots);

    for (int k = 0; k < config.n_buildings; ++k) {
        const int slot = slots[static_cast<size_t>(k)];
        const int sx = slot % nx;
        const int sy = slot / nx;
        const double slot_x0 = config.street_width_m + sx * pitch;
        const double slot_y0 = config.street_width_m + sy * pitch;

        const double w = config.building_min_size_m +
                         (config.building_max_size_m - config.building_min_size_m) * rng.u01();
        const double d = config.building_min_size_m +
                         (config.building_max_size_m - config.building_min_size_m) * rng.u01();
        const double jx = (config.building_max_size_m - w) * rng.u01();
        const double jy = (config.building_max_size_m - d) * rng.u01();

        Footprint b;
        b.x0 = slot_x0 + jx;
        b.y0 = slot_y0 + jy;
        b.x1 = b.x0 + w;
        b.y1 = b.y0 + d;
        b.height_m = config.building_min_height_m +
                     (config.building_max_height_m - config.building_min_height_m) * rng.u01();
        scene.buildings.push_back(b);
    }
    std::sort(scene.buildings.begin(), scene.buildings.end(),
              [](const Footprint& a, const Footprint& b) {
                  return std::tie(a.x0, a.y0) < std::tie(b.x0, b.y0);
              });

    // gNBs on rooftop sites no taller than the antenna height, so a mast at
    // gnb_height_m sits at or above its own roof. Free-standing when the
    // scene has no buildings.
    if (scene.buildings.empty()) {
        for (int g = 0; g < config.n_gnbs; ++g) {
            Gnb gnb;
            gnb.id = g;
            gnb.position = {config.area_width_m * rng.u01(), config.area_depth_m * rng.u01(),
                            config.gnb_height_m};
            scene.gnbs.push_back(gnb);
        }
    } else {
        std::vector<size_t> candidates;
        for (size_t i = 0; i < scene.buildings.size(); ++i) {
            if (scene.buildings[i].height_m <= config.gnb_height_m) {
                candidates.push_back(i);
            }
        }
        require(static_cast<int>(candidates.size()) >= config.n_gnbs,
                "not enough rooftop sites at or below gnb_height_m: need " +
                    std::to_string(config.n_gnbs) + ", have " + std::to_string(candidates.size()));
        rng.shuffle(candidates);
        for (int g = 0; g < config.n_gnbs; ++g) {
            const Footprint& b = scene.buildings[candidates[static_cast<size_t>(g)]];
            Gnb gnb;
            gnb.id = g;
            gnb.position = {0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1), config.gnb_height_m};
            scene.gnbs.push_back(gnb);
        }
    }

    scene.validate();
    return scene;
}

namespace {

// Open-box segment test: intersects only the interior, so grazing contact
// with faces or edges is not an occlusion.
bool segment_hits_box(const Point3& p1, const Point3& p2, double x0, double x1, double y0,
                      double y1, double z0, double z1) {
    double tmin = 0.0;
    double tmax = 1.0;
    const double start[3] = {p1.x, p1.y, p1.z};
    const double delta[3] = {p2.x - p1.x, p2.y - p1.y, p2.z - p1.z};
    const double lo[3] = {x0, y0, z0};
    const double hi[3] = {x1, y1, z1};
    for (int axis = 0; axis < 3; ++axis) {
        if (delta[axis] == 0.0) {
            if (start[axis] <= lo[axis] || start[axis] >= hi[axis]) {
                return false;
            }
            continue;
        }
        double t0 = (lo[axis] - start[axis]) / delta[axis];
        double t1 = (hi[axis] - start[axis]) / delta[axis];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin >= tmax) {
            return false;
        }
    }
    return true;
}

} // namespace

bool is_los(const Scene& scene, const Point3& p1, const Point3& p2) {
    for (const auto& b : scene.buildings) {
        if (segment_hits_box(p1, p2, b.x0, b.x1, b.y0, b.y1, 0.0, b.height_m)) {
            return false;
        }
    }
    return true;
}

double path_loss_db(const PropagationParams& p, double d_m, bool los) {
    const double d = std::max(d_m, 1.0); // model reference distance
    const double n = los ? p.pathloss_exponent_los : p.pathloss_exponent_nlos;
    return p.reference_loss_db + 10.0 * n * std::log10(d);
}

namespace {

// Separable AR(1) shadow field: unit-variance white noise swept along x
// then y with coefficient a = exp(-spacing/decorrelation). Axis-lag
// correlation decays as exp(-lag/decorrelation); variance stays 1 because
// innovations are scaled by sqrt(1 - a^2) and each sweep starts from the
// stationary distribution.
MatD shadow_field(int rows, int cols, double spacing_m, double decorrelation_m, RngStream& rng) {
    MatD g(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            g(r, c) = rng.normal();
        }
    }
    const double a = std::exp(-spacing_m / decorrelation_m);
    const double innov = std::sqrt(1.0 - a * a);
    for (int r = 0; r < rows; ++r) {
        for (int c = 1; c < cols; ++c) {
            g(r, c) = a * g(r, c - 1) + innov * g(r, c);
        }
    }
    for (int c = 0; c < cols; ++c) {
        for (int r = 1; r < rows; ++r) {
            g(r, c) = a * g(r - 1, c) + innov * g(r, c);
        }
    }
    return g;
}

} // namespace

PowerMap compute_power_map(const Scene& scene, int gnb_id, double spacing_m, double height_m,
                           uint64_t seed) {
    require(gnb_id >= 0 && gnb_id < scene.num_gnbs(),
            "invalid gnb_id " + std::to_string(gnb_id));
    require(spacing_m > 0.0, "spacing_m must be > 0");

    PowerMap map;
    map.gnb_id = gnb_id;
    map.spacing_m = spacing_m;
    map.height_m = height_m;
    const int cols = static_cast<int>(std::floor(scene.area_width_m / spacing_m)) + 1;
    const int rows = static_cast<int>(std::floor(scene.area_depth_m / spacing_m)) + 1;
    map.rss_dbm.resize(rows, cols);

    RngStream rng = RngStream::derive(seed, "shadowing", static_cast<uint64_t>(gnb_id));
    MatD shadow;
    if (scene.propagation.shadowing_std_db > 0.0) {
        shadow = shadow_field(rows, cols, spacing_m, scene.propagation.shadowing_decorrelation_m, rng) *
                 scene.propagation.shadowing_std_db;
    }

    const Point3 tx = scene.gnbs[static_cast<size_t>(gnb_id)].position;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const Point3 q{c * spacing_m, r * spacing_m, height_m};
            const bool los = is_los(scene, tx, q);
            double rss = scene.propagation.tx_power_dbm -
                         path_loss_db(scene.propagation, distance3d(tx, q), los);
            if (!los) {
                rss -= scene.propagation.nlos_penalty_db;
            }
            if (shadow.size() > 0) {
                rss -= shadow(r, c);
            }
            map.rss_dbm(r, c) = rss;
        }
    }
    return map;
}

SceneBundle make_scene_bundle(const Scene& scene, double spacing_m, double height_m) {
    SceneBundle bundle;
    bundle.scene = scene;
    for (int g = 0; g < scene.num_gnbs(); ++g) {
        bundle.power_maps.push_back(compute_power_map(scene, g, spacing_m, height_m, scene.seed));
    }
    return bundle;
}

namespace {

constexpr int kSceneFormatVersion = 1;

Json propagation_to_json(const PropagationParams& p) {
    return Json{{"tx_power_dbm", p.tx_power_dbm},
                {"pathloss_exponent_los", p.pathloss_exponent_los},
                {"pathloss_exponent_nlos", p.pathloss_exponent_nlos},
                {"reference_loss_db", p.reference_loss_db},
                {"shadowing_std_db", p.shadowing_std_db},
                {"shadowing_decorrelation_m", p.shadowing_decorrelation_m},
                {"nlos_penalty_db", p.nlos_penalty_db}};
}

PropagationParams propagation_from_json(const Json& j) {
    PropagationParams p;
    p.tx_power_dbm = j.at("tx_power_dbm").get<double>();
    p.pathloss_exponent_los = j.at("pathloss_exponent_los").get<double>();
    p.pathloss_exponent_nlos = j.at("pathloss_exponent_nlos").get<double>();
    p.reference_loss_db = j.at("reference_loss_db").get<double>();
    p.shadowing_std_db = j.at("shadowing_std_db").get<double>();
    p.shadowing_decorrelation_m = j.at("shadowing_decorrelation_m").get<double>();
    p.nlos_penalty_db = j.at("nlos_penalty_db").get<double>();
    return p;
}

} // namespace

void save_scene_bundle(const SceneBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Scene& s = bundle.scene;

    Json buildings = Json::array();
    for (const auto& b : s.buildings) {
        buildings.push_back(Json{{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1},
                                 {"height_m", b.height_m}});
    }
    Json gnbs = Json::array();
    for (const auto& g : s.gnbs) {
        gnbs.push_back(Json{{"id", g.id},
                            {"x", g.position.x},
                            {"y", g.position.y},
                            {"z", g.position.z}});
    }
    Json maps = Json::array();
    for (const auto& m : bundle.power_maps) {
        const std::string file = "powermap_" + std::to_string(m.gnb_id) + ".f32";
        write_f32_matrix(dir / file, m.rss_dbm.cast<float>());
        maps.push_back(Json{{"gnb_id", m.gnb_id},
                            {"file", file},
                            {"origin_x", m.origin_x},
                            {"origin_y", m.origin_y},
                            {"spacing_m", m.spacing_m},
                            {"height_m", m.height_m},
                            {"rows", m.rows()},
                            {"cols", m.cols()}});
    }

    Json manifest{{"format_version", kSceneFormatVersion},
                  {"kind", "scene_bundle"},
                  {"seed", s.seed},
                  {"area_width_m", s.area_width_m},
                  {"area_depth_m", s.area_depth_m},
                  {"propagation", propagation_to_json(s.propagation)},
                  {"buildings", buildings},
                  {"gnbs", gnbs},
                  {"power_maps", maps}};
    write_json_file(dir / "manifest.json", manifest);
}

SceneBundle load_scene_bundle(const std::filesystem::path& dir) {
    const Json manifest = read_json_file(dir / "manifest.json");
    require(manifest.value("kind", "") == "scene_bundle",
            dir.string() + ": not a scene bundle");
    const int version = manifest.at("format_version").get<int>();
    require(version == kSceneFormatVersion,
            "unsupported scene bundle format version " + std::to_string(version));

    SceneBundle bundle;
    Scene& s = bundle.scene;
    s.seed = manifest.at("seed").get<uint64_t>();
    s.area_width_m = manifest.at("area_width_m").get<double>();
    s.area_depth_m = manifest.at("area_depth_m").get<double>();
    s.propagation = propagation_from_json(manifest.at("propagation"));
    for (const auto& jb : manifest.at("buildings")) {
        Footprint b;
        b.x0 = jb.at("x0").get<double>();
        b.y0 = jb.at("y0").get<double>();
        b.x1 = jb.at("x1").get<double>();
        b.y1 = jb.at("y1").get<double>();
        b.height_m = jb.at("height_m").get<double>();
        s.buildings.push_back(b);
    }
    for (const auto& jg : manifest.at("gnbs")) {
        Gnb g;
        g.id = jg.at("id").get<int>();
        g.position = {jg.at("x").get<double>(), jg.at("y").get<double>(), jg.at("z").get<double>()};
        s.gnbs.push_back(g);
    }
    s.validate();
    for (const auto& jm : manifest.at("power_maps")) {
        PowerMap m;
        m.gnb_id = jm.at("gnb_id").get<int>();
        m.origin_x = jm.at("origin_x").get<double>();
        m.origin_y = jm.at("origin_y").get<double>();
        m.spacing_m = jm.at("spacing_m").get<double>();
        m.height_m = jm.at("height_m").get<double>();
        const int rows = jm.at("rows").get<int>();
        const int cols = jm.at("cols").get<int>();
        m.rss_dbm =
            read_f32_matrix(dir / jm.at("file").get<std::string>(), rows, cols).cast<double>();
        bundle.power_maps.push_back(std::move(m));
    }
    return bundle;
}

} // namespace a2gan
