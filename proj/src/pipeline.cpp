#include "a2gan/pipeline.hpp"

#include "a2gan/cgan_checkpoint.hpp"
#include "a2gan/cgan_train.hpp"
#include "a2gan/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace a2gan {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    require(j.is_object(), where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        require(allowed.count(key) != 0, where + ": unknown key '" + key + "'");
    }
}

PropagationParams parse_propagation(const Json& j) {
    check_keys(j,
               {"tx_power_dbm", "pathloss_exponent_los", "pathloss_exponent_nlos",
                "reference_loss_db", "shadowing_std_db", "shadowing_decorrelation_m",
                "nlos_penalty_db"},
               "scene.propagation");
    PropagationParams p;
    p.tx_power_dbm = j.value("tx_power_dbm", p.tx_power_dbm);
    p.pathloss_exponent_los = j.value("pathloss_exponent_los", p.pathloss_exponent_los);
    p.pathloss_exponent_nlos = j.value("pathloss_exponent_nlos", p.pathloss_exponent_nlos);
    p.reference_loss_db = j.value("reference_loss_db", p.reference_loss_db);
    p.shadowing_std_db = j.value("shadowing_std_db", p.shadowing_std_db);
    p.shadowing_decorrelation_m = j.value("shadowing_decorrelation_m", p.shadowing_decorrelation_m);
    p.nlos_penalty_db = j.value("nlos_penalty_db", p.nlos_penalty_db);
    return p;
}

Json propagation_json(const PropagationParams& p) {
    return Json{{"tx_power_dbm", p.tx_power_dbm},
                {"pathloss_exponent_los", p.pathloss_exponent_los},
                {"pathloss_exponent_nlos", p.pathloss_exponent_nlos},
                {"reference_loss_db", p.reference_loss_db},
                {"shadowing_std_db", p.shadowing_std_db},
                {"shadowing_decorrelation_m", p.shadowing_decorrelation_m},
                {"nlos_penalty_db", p.nlos_penalty_db}};
}

SceneStageConfig parse_scene_stage(const Json& j) {
    check_keys(j,
               {"area_width_m", "area_depth_m", "n_buildings", "building_min_size_m",
                "building_max_size_m", "building_min_height_m", "building_max_height_m",
                "street_width_m", "n_gnbs", "gnb_height_m", "spacing_m", "map_height_m",
                "propagation"},
               "scene");
    SceneStageConfig c;
    c.scene.area_width_m = j.value("area_width_m", c.scene.area_width_m);
    c.scene.area_depth_m = j.value("area_depth_m", c.scene.area_depth_m);
    c.scene.n_buildings = j.value("n_buildings", c.scene.n_buildings);
    c.scene.building_min_size_m = j.value("building_min_size_m", c.scene.building_min_size_m);
    c.scene.building_max_size_m = j.value("building_max_size_m", c.scene.building_max_size_m);
    c.scene.building_min_height_m =
        j.value("building_min_height_m", c.scene.building_min_height_m);
    c.scene.building_max_height_m =
        j.value("building_max_height_m", c.scene.building_max_height_m);
    c.scene.street_width_m = j.value("street_width_m", c.scene.street_width_m);
    c.scene.n_gnbs = j.value("n_gnbs", c.scene.n_gnbs);
    c.scene.gnb_height_m = j.value("gnb_height_m", c.scene.gnb_height_m);
    c.spacing_m = j.value("spacing_m", c.spacing_m);
    c.map_height_m = j.value("map_height_m", c.map_height_m);
    if (j.contains("propagation")) {
        c.scene.propagation = parse_propagation(j.at("propagation"));
    }
    return c;
}

Json scene_stage_json(const SceneStageConfig& c) {
    return Json{{"area_width_m", c.scene.area_width_m},
                {"area_depth_m", c.scene.area_depth_m},
                {"n_buildings", c.scene.n_buildings},
                {"building_min_size_m", c.scene.building_min_size_m},
                {"building_max_size_m", c.scene.building_max_size_m},
                {"building_min_height_m", c.scene.building_min_height_m},
                {"building_max_height_m", c.scene.building_max_height_m},
                {"street_width_m", c.scene.street_width_m},
                {"n_gnbs", c.scene.n_gnbs},
                {"gnb_height_m", c.scene.gnb_height_m},
                {"spacing_m", c.spacing_m},
                {"map_height_m", c.map_height_m},
                {"propagation", propagation_json(c.scene.propagation)}};
}

TrajectoriesStageConfig parse_traj_stage(const Json& j) {
    check_keys(j, {"count", "min_steps", "max_steps", "step_m", "height_m", "p_straight"},
               "trajectories");
    TrajectoriesStageConfig c;
    c.count = j.value("count", c.count);
    c.trajectory.min_steps = j.value("min_steps", c.trajectory.min_steps);
    c.trajectory.max_steps = j.value("max_steps", c.trajectory.max_steps);
    c.trajectory.step_m = j.value("step_m", c.trajectory.step_m);
    c.trajectory.height_m = j.value("height_m", c.trajectory.height_m);
    c.trajectory.p_straight = j.value("p_straight", c.trajectory.p_straight);
    return c;
}

Json traj_stage_json(const TrajectoriesStageConfig& c) {
    return Json{{"count", c.count},
                {"min_steps", c.trajectory.min_steps},
                {"max_steps", c.trajectory.max_steps},
                {"step_m", c.trajectory.step_m},
                {"height_m", c.trajectory.height_m},
                {"p_straight", c.trajectory.p_straight}};
}

DatasetConfig parse_dataset_stage(const Json& j) {
    check_keys(j,
               {"window_w", "stride", "test_fraction", "augment", "augment_kernel",
                "nearest_interp", "gnb_filter"},
               "dataset");
    DatasetConfig c;
    c.window_w = j.value("window_w", c.window_w);
    c.stride = j.value("stride", c.stride);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.augment = j.value("augment", c.augment);
    c.augment_kernel = j.value("augment_kernel", c.augment_kernel);
    c.nearest_interp = j.value("nearest_interp", c.nearest_interp);
    c.gnb_filter = j.value("gnb_filter", c.gnb_filter);
    return c;
}

Json dataset_stage_json(const DatasetConfig& c) {
    return Json{{"window_w", c.window_w},
                {"stride", c.stride},
                {"test_fraction", c.test_fraction},
                {"augment", c.augment},
                {"augment_kernel", c.augment_kernel},
                {"nearest_interp", c.nearest_interp},
                {"gnb_filter", c.gnb_filter}};
}

GanConfig parse_gan_stage(const Json& j) {
    check_keys(j,
               {"latent_dim", "embed_dim", "n_layers", "n_heads", "dropout", "patch_size", "lr_g",
                "lr_d", "adam_beta1", "adam_beta2", "batch_size", "n_iterations", "eval_interval",
                "t_real", "t_fake", "n_classes", "window_w", "mode"},
               "gan");
    GanConfig c;
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.dropout = j.value("dropout", c.dropout);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.lr_g = j.value("lr_g", c.lr_g);
    c.lr_d = j.value("lr_d", c.lr_d);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.n_iterations = j.value("n_iterations", c.n_iterations);
    c.eval_interval = j.value("eval_interval", c.eval_interval);
    c.t_real = j.value("t_real", c.t_real);
    c.t_fake = j.value("t_fake", c.t_fake);
    c.n_classes = j.value("n_classes", c.n_classes);
    c.window_w = j.value("window_w", c.window_w);
    if (j.contains("mode")) {
        c.mode = gan_mode_from_string(j.at("mode").get<std::string>());
    }
    return c;
}

Json gan_stage_json(const GanConfig& c) { return ckpt::config_to_json(c); }

EvaluateStageConfig parse_evaluate_stage(const Json& j) {
    check_keys(j, {"trend_bins"}, "evaluate");
    EvaluateStageConfig c;
    c.trend_bins = j.value("trend_bins", c.trend_bins);
    return c;
}

Json evaluate_stage_json(const EvaluateStageConfig& c) {
    return Json{{"trend_bins", c.trend_bins}};
}

SimulateStageConfig parse_simulate_stage(const Json& j) {
    check_keys(j, {"n_trajectories", "noise_dbm", "hysteresis_db", "stitch_stride"}, "simulate");
    SimulateStageConfig c;
    c.n_trajectories = j.value("n_trajectories", c.n_trajectories);
    c.noise_dbm = j.value("noise_dbm", c.noise_dbm);
    c.hysteresis_db = j.value("hysteresis_db", c.hysteresis_db);
    c.stitch_stride = j.value("stitch_stride", c.stitch_stride);
    return c;
}

Json simulate_stage_json(const SimulateStageConfig& c) {
    return Json{{"n_trajectories", c.n_trajectories},
                {"noise_dbm", c.noise_dbm},
                {"hysteresis_db", c.hysteresis_db},
                {"stitch_stride", c.stitch_stride}};
}

StageToggles parse_stage_toggles(const Json& j) {
    check_keys(j, {"scene", "trajectories", "dataset", "train", "evaluate", "simulate"}, "stages");
    StageToggles t;
    t.scene = j.value("scene", t.scene);
    t.trajectories = j.value("trajectories", t.trajectories);
    t.dataset = j.value("dataset", t.dataset);
    t.train = j.value("train", t.train);
    t.evaluate = j.value("evaluate", t.evaluate);
    t.simulate = j.value("simulate", t.simulate);
    return t;
}

Json stage_toggles_json(const StageToggles& t) {
    return Json{{"scene", t.scene},         {"trajectories", t.trajectories},
                {"dataset", t.dataset},     {"train", t.train},
                {"evaluate", t.evaluate},   {"simulate", t.simulate}};
}

} // namespace

PipelineConfig parse_pipeline_config(const Json& j) {
    check_keys(j,
               {"seed", "out_dir", "stages", "scene", "trajectories", "dataset", "gan", "evaluate",
                "simulate"},
               "config");
    PipelineConfig c;
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("stages")) {
        c.stages = parse_stage_toggles(j.at("stages"));
    }
    if (j.contains("scene")) {
        c.scene = parse_scene_stage(j.at("scene"));
    }
    if (j.contains("trajectories")) {
        c.trajectories = parse_traj_stage(j.at("trajectories"));
    }
    if (j.contains("dataset")) {
        c.dataset = parse_dataset_stage(j.at("dataset"));
    }
    if (j.contains("gan")) {
        c.gan = parse_gan_stage(j.at("gan"));
    }
    if (j.contains("evaluate")) {
        c.evaluate = parse_evaluate_stage(j.at("evaluate"));
    }
    if (j.contains("simulate")) {
        c.simulate = parse_simulate_stage(j.at("simulate"));
    }
    return c;
}

Json pipeline_config_to_json(const PipelineConfig& c) {
    return Json{{"seed", c.seed},
                {"out_dir", c.out_dir},
                {"stages", stage_toggles_json(c.stages)},
                {"scene", scene_stage_json(c.scene)},
                {"trajectories", traj_stage_json(c.trajectories)},
                {"dataset", dataset_stage_json(c.dataset)},
                {"gan", gan_stage_json(c.gan)},
                {"evaluate", evaluate_stage_json(c.evaluate)},
                {"simulate", simulate_stage_json(c.simulate)}};
}

void apply_dotted_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, "override must look like section.key=value: " +
                                                   assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    Json* node = &config;
    size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        require(!key.empty(), "empty key in override path: " + path);
        if (dot == std::string::npos) {
            Json parsed = Json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::filesystem::path resolve_out_dir(const std::string& out_dir) {
    std::filesystem::path p(out_dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("A2GAN_OUT_ROOT"); root != nullptr && *root != '\0') {
            return std::filesystem::path(root) / p;
        }
    }
    return p;
}

std::vector<Trajectory> trajectories_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty trajectory CSV");
    require(line == "id,step,x,y,z", "unexpected trajectory CSV header: " + line);
    std::vector<Trajectory> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string field;
        Trajectory* traj = nullptr;
        std::getline(row, field, ',');
        const int id = std::stoi(field);
        if (out.empty() || out.back().id != id) {
            out.push_back(Trajectory{});
            out.back().id = id;
        }
        traj = &out.back();
        std::getline(row, field, ','); // step index, implicit by order
        Point3 p;
        std::getline(row, field, ',');
        p.x = std::stod(field);
        std::getline(row, field, ',');
        p.y = std::stod(field);
        std::getline(row, field, ',');
        p.z = std::stod(field);
        traj->waypoints.push_back(p);
        traj->height_m = p.z;
    }
    for (auto& traj : out) {
        if (traj.waypoints.size() >= 2) {
            traj.step_m = distance3d(traj.waypoints[0], traj.waypoints[1]);
        }
    }
    return out;
}

std::string history_to_csv(const std::vector<EvalRecord>& history, int n_classes) {
    std::ostringstream out;
    out << "seq,iteration,is_final,steps_averaged,train_ls_d,train_ce_d,train_ls_g,train_ce_g";
    for (int g = 0; g < n_classes; ++g) {
        out << ",cmd_gnb" << g;
    }
    out << ",cmd_avg";
    for (int g = 0; g < n_classes; ++g) {
        out << ",ks_gnb" << g;
    }
    out << ",ks_max,eval_ls_g,eval_ce_g\n";
    for (const auto& r : history) {
        out << r.seq << ',' << r.iteration << ',' << (r.is_final ? 1 : 0) << ','
            << r.steps_averaged << ',' << format_double(r.train_ls_d) << ','
            << format_double(r.train_ce_d) << ',' << format_double(r.train_ls_g) << ','
            << format_double(r.train_ce_g);
        for (double v : r.cmd_per_gnb) {
            out << ',' << format_double(v);
        }
        out << ',' << format_double(r.cmd_avg);
        for (double v : r.ks_per_gnb) {
            out << ',' << format_double(v);
        }
        out << ',' << format_double(r.ks_max) << ',' << format_double(r.eval_ls_g) << ','
            << format_double(r.eval_ce_g) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Stage orchestration.

namespace {

std::string stage_fingerprint(const std::string& stage, uint64_t seed, const Json& stage_cfg,
                              const std::vector<std::string>& upstream) {
    const Json j{{"stage", stage}, {"seed", seed}, {"config", stage_cfg}, {"upstream", upstream}};
    return sha256_string(j.dump());
}

Json hash_outputs(const std::filesystem::path& dir) {
    Json outputs = Json::object();
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "stamp.json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        outputs[std::filesystem::relative(f, dir).generic_string()] = sha256_file(f);
    }
    return outputs;
}

struct StageRunner {
    std::filesystem::path out_root;
    RunOptions options;
    Json manifest_stages = Json::object();

    /// Runs `body` unless the stage's stamp matches its fingerprint and all
    /// recorded outputs are still present (and unchanged, under --strict).
    /// Returns the stage fingerprint for downstream chaining.
    template <typename Body>
    std::string run(const std::string& name, bool enabled, const std::string& fingerprint,
                    Body&& body) {
        const auto dir = out_root / name;
        const auto stamp_path = dir / "stamp.json";

        if (!enabled) {
            require(std::filesystem::exists(stamp_path),
                    "stage '" + name + "' is disabled but its artifact is missing: " +
                        dir.string());
            const Json stamp = read_json_file(stamp_path);
            manifest_stages[name] = stamp;
            manifest_stages[name]["skipped"] = true;
            return stamp.at("fingerprint").get<std::string>();
        }

        if (!options.force && std::filesystem::exists(stamp_path)) {
            const Json stamp = read_json_file(stamp_path);
            const bool hash_ok = stamp.value("fingerprint", "") == fingerprint;
            bool outputs_ok = hash_ok;
            if (hash_ok) {
                for (const auto& [rel, sha] : stamp.at("outputs").items()) {
                    const auto path = dir / rel;
                    if (!std::filesystem::exists(path)) {
                        outputs_ok = false;
                        break;
                    }
                    if (options.strict && sha256_file(path) != sha.template get<std::string>()) {
                        fail("stage '" + name + "': output hash mismatch for " + rel +
                             " (--strict)");
                    }
                }
            } else if (options.strict) {
                fail("stage '" + name + "': configuration hash mismatch (--strict); rerun with "
                     "--force to rebuild");
            }
            if (hash_ok && outputs_ok) {
                if (!options.quiet) {
                    std::cout << "[pipeline] " << name << ": up to date, skipping\n";
                }
                manifest_stages[name] = stamp;
                manifest_stages[name]["skipped"] = true;
                return fingerprint;
            }
        }

        if (!options.quiet) {
            std::cout << "[pipeline] " << name << ": running\n";
        }
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        body(dir);

        Json stamp{{"stage", name}, {"fingerprint", fingerprint}, {"outputs", hash_outputs(dir)}};
        write_json_file(stamp_path, stamp);
        manifest_stages[name] = stamp;
        manifest_stages[name]["skipped"] = false;
        return fingerprint;
    }
};

} // namespace

Json evaluate_checkpoint(GanBundle<float>& bundle, const SequenceDataset& ds,
                         const std::filesystem::path& out_dir, int trend_bins) {
    std::filesystem::create_directories(out_dir);
    EvalContext<float> ctx = make_eval_context<float>(ds);
    RngStream eval_z = RngStream::derive(bundle.seed, "evaluate");

    Json summary;
    summary["iteration"] = bundle.iteration;
    Json per_gnb = Json::array();

    std::vector<double> real_flat, gen_flat, dist_flat;
    double cmd_sum = 0.0;
    for (auto& slot : ctx.gnbs) {
        MatX<float> gen_norm = generate_normalized(bundle, slot.u_norm, slot.labels, eval_z);
        MatD gen_phys = gen_norm.cast<double>() * bundle.norm_stats.rss_std +
                        MatD::Constant(gen_norm.rows(), gen_norm.cols(), bundle.norm_stats.rss_mean);

        const MatD r_real = correlation_matrix(slot.real_phys);
        const MatD r_gen = correlation_matrix(gen_phys);
        const double cmd_value = cmd(r_real, r_gen);
        cmd_sum += cmd_value;
        const CdfReport cdf = marginal_cdf_report(slot.real_phys, gen_phys);

        const std::string suffix = "gnb" + std::to_string(slot.gnb_id);
        write_text_file(out_dir / ("cdf_" + suffix + ".csv"), cdf_report_to_csv(cdf));
        write_text_file(out_dir / ("corr_real_" + suffix + ".csv"), matrix_to_csv(r_real));
        write_text_file(out_dir / ("corr_gen_" + suffix + ".csv"), matrix_to_csv(r_gen));
        per_gnb.push_back(Json{{"gnb_id", slot.gnb_id},
                               {"cmd", cmd_value},
                               {"ks_distance", cdf.ks_distance},
                               {"windows", slot.real_phys.rows()}});

        for (Eigen::Index r = 0; r < slot.real_phys.rows(); ++r) {
            for (Eigen::Index c = 0; c < slot.real_phys.cols(); ++c) {
                real_flat.push_back(slot.real_phys(r, c));
                gen_flat.push_back(gen_phys(r, c));
                dist_flat.push_back(denormalize_value(slot.u_norm(r, c),
                                                      bundle.norm_stats.dist_mean,
                                                      bundle.norm_stats.dist_std));
            }
        }
    }

    const DistanceTrend trend_real = distance_trend(real_flat, dist_flat, trend_bins);
    const DistanceTrend trend_gen = distance_trend(gen_flat, dist_flat, trend_bins);
    write_text_file(out_dir / "distance_trend_real.csv", distance_trend_to_csv(trend_real));
    write_text_file(out_dir / "distance_trend_gen.csv", distance_trend_to_csv(trend_gen));
    write_text_file(out_dir / "cmd_history.csv",
                    history_to_csv(bundle.history, bundle.config.n_classes));

    summary["per_gnb"] = per_gnb;
    summary["cmd_avg"] = cmd_sum / static_cast<double>(ctx.gnbs.size());
    summary["pathloss_exponent_real"] = trend_real.exponent;
    summary["pathloss_exponent_generated"] = trend_gen.exponent;
    summary["d_ref_m"] = trend_real.d_ref_m;
    write_json_file(out_dir / "summary.json", summary);
    return summary;
}

Json run_pipeline(const PipelineConfig& config, const RunOptions& options) {
    const auto out_root = resolve_out_dir(config.out_dir);
    std::filesystem::create_directories(out_root);

    StageRunner runner{out_root, options, Json::object()};

    // --- scene ---
    const std::string scene_fp =
        stage_fingerprint("scene", config.seed, scene_stage_json(config.scene), {});
    runner.run("scene", config.stages.scene, scene_fp, [&](const std::filesystem::path& dir) {
        const Scene scene = build_scene(config.scene.scene, config.seed);
        const SceneBundle bundle =
            make_scene_bundle(scene, config.scene.spacing_m, config.scene.map_height_m);
        save_scene_bundle(bundle, dir);
    });

    // --- trajectories ---
    const std::string traj_fp = stage_fingerprint(
        "trajectories", config.seed, traj_stage_json(config.trajectories), {scene_fp});
    runner.run("trajectories", config.stages.trajectories, traj_fp,
               [&](const std::filesystem::path& dir) {
                   const SceneBundle scene_bundle = load_scene_bundle(out_root / "scene");
                   std::vector<Trajectory> trajectories;
                   for (int i = 0; i < config.trajectories.count; ++i) {
                       Trajectory t = generate_trajectory(scene_bundle.scene,
                                                          splitmix_mix(config.seed, "traj", i),
                                                          config.trajectories.trajectory);
                       t.id = i;
                       trajectories.push_back(std::move(t));
                   }
                   write_text_file(dir / "trajectories.csv", trajectory_to_csv(trajectories));
               });

    // --- dataset ---
    const std::string dataset_fp = stage_fingerprint(
        "dataset", config.seed, dataset_stage_json(config.dataset), {scene_fp, traj_fp});
    runner.run("dataset", config.stages.dataset, dataset_fp, [&](const std::filesystem::path& dir) {
        const SceneBundle scene_bundle = load_scene_bundle(out_root / "scene");
        std::ifstream f(out_root / "trajectories" / "trajectories.csv");
        require(f.good(), "missing upstream artifact: trajectories.csv");
        std::stringstream buf;
        buf << f.rdbuf();
        const auto trajectories = trajectories_from_csv(buf.str());
        SequenceDataset ds = build_dataset(scene_bundle, trajectories, config.dataset, config.seed);
        ds.scene_hash = scene_fp;
        save_dataset(ds, dir);
    });

    // --- train ---
    const std::string train_fp =
        stage_fingerprint("train", config.seed, gan_stage_json(config.gan), {dataset_fp});
    runner.run("train", config.stages.train, train_fp, [&](const std::filesystem::path& dir) {
        SequenceDataset ds = load_dataset(out_root / "dataset");
        GanConfig gan_cfg = config.gan;
        gan_cfg.n_classes = ds.n_classes;
        gan_cfg.window_w = ds.window_w;
        GanBundle<float> bundle = init_gan_bundle<float>(gan_cfg, config.seed);
        train(bundle, ds, [&](const EvalRecord& rec) {
            if (!options.quiet) {
                std::cout << "[train] iter " << rec.iteration << " cmd_avg "
                          << rec.cmd_avg << " ls_d " << rec.train_ls_d << " ls_g "
                          << rec.train_ls_g << (rec.is_final ? " (final)" : "") << "\n";
            }
        });
        save_checkpoint(bundle, dir / "checkpoint.bin");
        write_text_file(dir / "history.csv", history_to_csv(bundle.history, gan_cfg.n_classes));
    });

    // --- evaluate ---
    const std::string eval_fp = stage_fingerprint(
        "evaluate", config.seed, evaluate_stage_json(config.evaluate), {train_fp, dataset_fp});
    runner.run("evaluate", config.stages.evaluate, eval_fp, [&](const std::filesystem::path& dir) {
        GanBundle<float> bundle = load_checkpoint<float>(out_root / "train" / "checkpoint.bin");
        const SequenceDataset ds = load_dataset(out_root / "dataset");
        evaluate_checkpoint(bundle, ds, dir, config.evaluate.trend_bins);
    });

    // --- simulate ---
    Json sim_cfg_json = simulate_stage_json(config.simulate);
    sim_cfg_json["trajectory"] = traj_stage_json(config.trajectories);
    const std::string sim_fp =
        stage_fingerprint("simulate", config.seed, sim_cfg_json, {train_fp, scene_fp});
    runner.run("simulate", config.stages.simulate, sim_fp, [&](const std::filesystem::path& dir) {
        GanBundle<float> bundle = load_checkpoint<float>(out_root / "train" / "checkpoint.bin");
        const SceneBundle scene_bundle = load_scene_bundle(out_root / "scene");
        SimulateConfig sim;
        sim.n_trajectories = config.simulate.n_trajectories;
        sim.noise_dbm = config.simulate.noise_dbm;
        sim.hysteresis_db = config.simulate.hysteresis_db;
        sim.stitch_stride = config.simulate.stitch_stride;
        sim.trajectory = config.trajectories.trajectory;
        const auto traces = simulate_links(scene_bundle.scene, bundle, sim, config.seed);
        for (const auto& trace : traces) {
            write_text_file(dir / ("trace_" + std::to_string(trace.traj_id) + ".csv"),
                            trace_to_csv(trace));
        }
        write_text_file(dir / "summary.csv", traces_summary_csv(traces));
    });

    Json manifest{{"config", pipeline_config_to_json(config)},
                  {"config_hash", sha256_string(pipeline_config_to_json(config).dump())},
                  {"stages", runner.manifest_stages}};
    write_json_file(out_root / "manifest.json", manifest);
    return manifest;
}

} // namespace a2gan
