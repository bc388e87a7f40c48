#include "a2gan/pipeline.hpp"

#include "a2gan/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace a2gan;

namespace {

Json mini_config(const std::string& out_dir) {
    Json j;
    j["seed"] = 11;
    j["out_dir"] = out_dir;
    j["scene"] = {{"area_width_m", 160.0}, {"area_depth_m", 160.0}, {"n_buildings", 4},
                  {"n_gnbs", 2},           {"spacing_m", 4.0},      {"building_max_height_m", 28.0}};
    j["trajectories"] = {{"count", 6}, {"min_steps", 120}, {"max_steps", 140}};
    j["dataset"] = {{"window_w", 32}, {"stride", 16}, {"test_fraction", 0.34}, {"augment", true}};
    j["gan"] = {{"latent_dim", 8},  {"embed_dim", 8},    {"n_layers", 1}, {"n_heads", 2},
                {"patch_size", 8},  {"batch_size", 8},   {"n_iterations", 12},
                {"eval_interval", 6}, {"window_w", 32},  {"mode", "multi_gnb"}};
    j["evaluate"] = {{"trend_bins", 8}};
    j["simulate"] = {{"n_trajectories", 2}, {"stitch_stride", 16}};
    return j;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("pipeline config parses, rejects unknown keys, applies overrides") {
    Json j = mini_config("x");
    PipelineConfig cfg = parse_pipeline_config(j);
    CHECK(cfg.seed == 11);
    CHECK(cfg.scene.scene.n_gnbs == 2);
    CHECK(cfg.dataset.augment);
    CHECK(cfg.gan.mode == GanMode::MultiGnb);

    // round trip preserves every field it carries
    const Json round = pipeline_config_to_json(parse_pipeline_config(pipeline_config_to_json(cfg)));
    CHECK(round == pipeline_config_to_json(cfg));

    Json bad = j;
    bad["gan"]["learning_rate"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_pipeline_config(bad), doctest::Contains("unknown key"), Error);

    apply_dotted_override(j, "gan.lr_g=0.0005");
    apply_dotted_override(j, "scene.n_buildings=7");
    apply_dotted_override(j, "out_dir=elsewhere");
    const PipelineConfig cfg2 = parse_pipeline_config(j);
    CHECK(cfg2.gan.lr_g == 0.0005);
    CHECK(cfg2.scene.scene.n_buildings == 7);
    CHECK(cfg2.out_dir == "elsewhere");
    CHECK_THROWS_AS(apply_dotted_override(j, "no_equals_sign"), Error);
}

TEST_CASE("trajectory CSV round-trips exactly") {
    SceneConfig scfg;
    scfg.area_width_m = 120.0;
    scfg.area_depth_m = 120.0;
    scfg.n_buildings = 0;
    scfg.n_gnbs = 1;
    const Scene scene = build_scene(scfg, 2);
    TrajectoryConfig tcfg;
    tcfg.min_steps = 40;
    tcfg.max_steps = 50;
    std::vector<Trajectory> trajectories;
    for (int i = 0; i < 3; ++i) {
        Trajectory t = generate_trajectory(scene, 10 + static_cast<uint64_t>(i), tcfg);
        t.id = i;
        trajectories.push_back(std::move(t));
    }
    const auto parsed = trajectories_from_csv(trajectory_to_csv(trajectories));
    REQUIRE(parsed.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(parsed[i].waypoints.size() == trajectories[i].waypoints.size());
        for (size_t n = 0; n < parsed[i].waypoints.size(); ++n) {
            CHECK(parsed[i].waypoints[n].x == trajectories[i].waypoints[n].x);
            CHECK(parsed[i].waypoints[n].y == trajectories[i].waypoints[n].y);
            CHECK(parsed[i].waypoints[n].z == trajectories[i].waypoints[n].z);
        }
    }
}

TEST_CASE("mini pipeline: stages run, skip on rerun, rerun downstream on change") {
    const auto root = std::filesystem::temp_directory_path() / "a2gan_test_pipeline";
    std::filesystem::remove_all(root);

    RunOptions quiet;
    quiet.quiet = true;

    const PipelineConfig cfg = parse_pipeline_config(mini_config((root / "run").string()));
    const Json manifest = run_pipeline(cfg, quiet);

    for (const char* stage :
         {"scene", "trajectories", "dataset", "train", "evaluate", "simulate"}) {
        CAPTURE(stage);
        CHECK(std::filesystem::exists(root / "run" / stage / "stamp.json"));
        CHECK_FALSE(manifest.at("stages").at(stage).at("skipped").get<bool>());
        CHECK(!manifest.at("stages").at(stage).at("outputs").empty());
    }
    CHECK(std::filesystem::exists(root / "run" / "train" / "checkpoint.bin"));
    CHECK(std::filesystem::exists(root / "run" / "evaluate" / "summary.json"));

    // rerun: everything skipped
    const Json manifest2 = run_pipeline(cfg, quiet);
    for (const char* stage :
         {"scene", "trajectories", "dataset", "train", "evaluate", "simulate"}) {
        CAPTURE(stage);
        CHECK(manifest2.at("stages").at(stage).at("skipped").get<bool>());
    }

    // changing a gan knob reruns train and downstream only
    Json changed_json = mini_config((root / "run").string());
    changed_json["gan"]["lr_g"] = 0.00025;
    const Json manifest3 = run_pipeline(parse_pipeline_config(changed_json), quiet);
    CHECK(manifest3.at("stages").at("scene").at("skipped").get<bool>());
    CHECK(manifest3.at("stages").at("trajectories").at("skipped").get<bool>());
    CHECK(manifest3.at("stages").at("dataset").at("skipped").get<bool>());
    CHECK_FALSE(manifest3.at("stages").at("train").at("skipped").get<bool>());
    CHECK_FALSE(manifest3.at("stages").at("evaluate").at("skipped").get<bool>());
    CHECK_FALSE(manifest3.at("stages").at("simulate").at("skipped").get<bool>());

    std::filesystem::remove_all(root);
}

TEST_CASE("two identical pipeline runs emit bit-identical metric files") {
    const auto root = std::filesystem::temp_directory_path() / "a2gan_test_pipeline_det";
    std::filesystem::remove_all(root);
    RunOptions quiet;
    quiet.quiet = true;

    run_pipeline(parse_pipeline_config(mini_config((root / "a").string())), quiet);
    run_pipeline(parse_pipeline_config(mini_config((root / "b").string())), quiet);

    for (const char* rel : {"train/history.csv", "evaluate/cmd_history.csv",
                            "evaluate/cdf_gnb0.csv", "evaluate/corr_gen_gnb1.csv",
                            "evaluate/distance_trend_gen.csv", "simulate/summary.csv"}) {
        CAPTURE(rel);
        CHECK(slurp(root / "a" / rel) == slurp(root / "b" / rel));
    }
    std::filesystem::remove_all(root);
}

TEST_CASE("history CSV layout") {
    EvalRecord r;
    r.seq = 0;
    r.iteration = 5;
    r.cmd_per_gnb = {0.5, 0.25};
    r.cmd_avg = 0.375;
    r.ks_per_gnb = {0.1, 0.2};
    r.ks_max = 0.2;
    const std::string csv = history_to_csv({r}, 2);
    CHECK(csv.find("cmd_gnb0") != std::string::npos);
    CHECK(csv.find("cmd_gnb1") != std::string::npos);
    CHECK(csv.find("ks_gnb1") != std::string::npos);
    CHECK(csv.find("0.375") != std::string::npos);
}
