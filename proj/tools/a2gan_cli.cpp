// Command-line front end: scene | trajectories | dataset build/augment/stats |
// train | evaluate | generate | simulate | pipeline.

#include "a2gan/cgan_checkpoint.hpp"
#include "a2gan/cgan_train.hpp"
#include "a2gan/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace a2gan;

Json load_config_with_overrides(const std::string& config_path,
                                const std::vector<std::string>& overrides) {
    Json j = config_path.empty() ? pipeline_config_to_json(PipelineConfig{})
                                 : read_json_file(config_path);
    for (const auto& o : overrides) {
        apply_dotted_override(j, o);
    }
    return j;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

/// CSV of doubles, one sequence per row.
MatD read_csv_matrix(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::istringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            row.push_back(std::stod(field));
        }
        if (!rows.empty()) {
            require(row.size() == rows.front().size(), "ragged CSV: " + path.string());
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "empty CSV: " + path.string());
    MatD m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

std::vector<uint8_t> read_csv_labels(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string token;
    std::vector<uint8_t> labels;
    while (std::getline(in, token)) {
        std::istringstream fields(token);
        std::string field;
        while (std::getline(fields, field, ',')) {
            if (!field.empty()) {
                labels.push_back(static_cast<uint8_t>(std::stoi(field)));
            }
        }
    }
    require(!labels.empty(), "empty label CSV: " + path.string());
    return labels;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional-GAN toolkit for spatially consistent UAV-gNB RSS sequences"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "pipeline config JSON");
        cmd->add_option("--set", overrides, "dotted-path override, e.g. gan.lr_g=1e-4");
        cmd->add_option("--out", out_dir, "output directory override");
    };

    // pipeline
    auto* cmd_pipeline = app.add_subcommand("pipeline", "run all enabled stages");
    add_common(cmd_pipeline);
    bool force = false;
    bool strict = false;
    cmd_pipeline->add_flag("--force", force, "rerun stages even when up to date");
    cmd_pipeline->add_flag("--strict", strict, "fail on artifact hash mismatches");

    // scene
    auto* cmd_scene = app.add_subcommand("scene", "build the synthetic scene and power maps");
    add_common(cmd_scene);

    // trajectories
    auto* cmd_traj = app.add_subcommand("trajectories", "generate UAV trajectories");
    add_common(cmd_traj);

    // dataset build|augment|stats
    auto* cmd_dataset = app.add_subcommand("dataset", "dataset operations");
    cmd_dataset->require_subcommand(1);
    auto* cmd_ds_build = cmd_dataset->add_subcommand("build", "extract, window and normalize");
    add_common(cmd_ds_build);
    std::string ds_path;
    auto* cmd_ds_augment =
        cmd_dataset->add_subcommand("augment", "append smoothed train copies to a dataset");
    cmd_ds_augment->add_option("--dataset", ds_path, "dataset bundle directory")->required();
    cmd_ds_augment->add_option("--out", out_dir, "output bundle directory")->required();
    int kernel = 20;
    cmd_ds_augment->add_option("--kernel", kernel, "flat kernel size");
    auto* cmd_ds_stats = cmd_dataset->add_subcommand("stats", "print dataset statistics");
    cmd_ds_stats->add_option("--dataset", ds_path, "dataset bundle directory")->required();

    // train
    auto* cmd_train = app.add_subcommand("train", "train the conditional GAN");
    add_common(cmd_train);
    std::string mode_flag;
    bool augment_flag = false;
    std::string train_dataset;
    cmd_train->add_option("--mode", mode_flag, "single|multi (overrides gan.mode)");
    cmd_train->add_flag("--augment", augment_flag, "augment the train split in memory if needed");
    cmd_train->add_option("--dataset", train_dataset, "dataset bundle (defaults to <out>/dataset)");

    // evaluate
    auto* cmd_eval = app.add_subcommand("evaluate", "evaluate a checkpoint against a dataset");
    std::string ckpt_path;
    cmd_eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    cmd_eval->add_option("--dataset", ds_path, "dataset bundle directory")->required();
    cmd_eval->add_option("--out", out_dir, "output directory")->required();
    int trend_bins = 20;
    cmd_eval->add_option("--trend-bins", trend_bins, "distance-trend bin count");

    // generate
    auto* cmd_gen = app.add_subcommand("generate", "generate RSS sequences from distances");
    std::string dist_csv, labels_csv;
    uint64_t gen_seed = 0;
    cmd_gen->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    cmd_gen->add_option("--distances", dist_csv, "CSV of distance windows (one row per sequence)")
        ->required();
    cmd_gen->add_option("--labels", labels_csv, "CSV of gNB labels (one per row)")->required();
    cmd_gen->add_option("--seed", gen_seed, "latent sampling seed")->required();
    cmd_gen->add_option("--out", out_dir, "output CSV path (default stdout)");

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "SINR/handover evaluation on fresh trajectories");
    std::string scene_path;
    int sim_n = 100;
    double hysteresis = 3.0;
    double noise_dbm = -94.0;
    uint64_t sim_seed = 7;
    cmd_sim->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    cmd_sim->add_option("--scene", scene_path, "scene bundle directory")->required();
    cmd_sim->add_option("--n", sim_n, "number of trajectories");
    cmd_sim->add_option("--hysteresis", hysteresis, "reselection hysteresis in dB");
    cmd_sim->add_option("--noise", noise_dbm, "noise floor in dBm");
    cmd_sim->add_option("--seed", sim_seed, "simulation seed");
    cmd_sim->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cmd_pipeline) || app.got_subcommand(cmd_scene) ||
            app.got_subcommand(cmd_traj) || app.got_subcommand(cmd_ds_build) ||
            app.got_subcommand(cmd_train)) {
            Json cfg_json = load_config_with_overrides(config_path, overrides);
            if (!out_dir.empty()) {
                cfg_json["out_dir"] = out_dir;
            }
            PipelineConfig config = parse_pipeline_config(cfg_json);
            RunOptions options;
            options.force = force;
            options.strict = strict;

            if (app.got_subcommand(cmd_pipeline)) {
                run_pipeline(config, options);
                return 0;
            }
            // Single-stage invocations: enable the requested stage only; the
            // runner reuses existing upstream artifacts.
            config.stages = StageToggles{false, false, false, false, false, false};
            if (app.got_subcommand(cmd_scene)) {
                config.stages.scene = true;
            } else if (app.got_subcommand(cmd_traj)) {
                config.stages.trajectories = true;
            } else if (app.got_subcommand(cmd_ds_build)) {
                config.stages.dataset = true;
            } else if (app.got_subcommand(cmd_train)) {
                if (!mode_flag.empty()) {
                    config.gan.mode = gan_mode_from_string(mode_flag);
                }
                if (augment_flag) {
                    config.dataset.augment = true;
                }
                // train directly (no stage hashing) when an explicit dataset is given
                const auto ds_dir = train_dataset.empty()
                                        ? resolve_out_dir(config.out_dir) / "dataset"
                                        : std::filesystem::path(train_dataset);
                SequenceDataset ds = load_dataset(ds_dir);
                if (augment_flag) {
                    bool has_aug = false;
                    for (auto a : ds.augmented) {
                        has_aug |= a != 0;
                    }
                    if (!has_aug) {
                        ds = augment_dataset(ds, config.dataset.augment_kernel);
                    }
                }
                GanConfig gan_cfg = config.gan;
                gan_cfg.n_classes = ds.n_classes;
                gan_cfg.window_w = ds.window_w;
                GanBundle<float> bundle = init_gan_bundle<float>(gan_cfg, config.seed);
                train(bundle, ds, [&](const EvalRecord& rec) {
                    std::cout << "[train] iter " << rec.iteration << " cmd_avg " << rec.cmd_avg
                              << " eval_ce_g " << rec.eval_ce_g
                              << (rec.is_final ? " (final)" : "") << "\n";
                });
                const auto train_dir = resolve_out_dir(config.out_dir) / "train";
                std::filesystem::create_directories(train_dir);
                save_checkpoint(bundle, train_dir / "checkpoint.bin");
                write_text_file(train_dir / "history.csv",
                                history_to_csv(bundle.history, gan_cfg.n_classes));
                std::cout << "checkpoint: " << (train_dir / "checkpoint.bin").string() << "\n";
                return 0;
            }
            run_pipeline(config, options);
            return 0;
        }

        if (app.got_subcommand(cmd_ds_augment)) {
            SequenceDataset ds = load_dataset(ds_path);
            SequenceDataset augmented = augment_dataset(ds, kernel);
            save_dataset(augmented, out_dir);
            std::cout << dataset_stats_text(augmented);
            return 0;
        }
        if (app.got_subcommand(cmd_ds_stats)) {
            const SequenceDataset ds = load_dataset(ds_path);
            std::cout << dataset_stats_text(ds);
            return 0;
        }
        if (app.got_subcommand(cmd_eval)) {
            GanBundle<float> bundle = load_checkpoint<float>(ckpt_path);
            const SequenceDataset ds = load_dataset(ds_path);
            const Json summary = evaluate_checkpoint(bundle, ds, out_dir, trend_bins);
            std::cout << summary.dump(2) << "\n";
            return 0;
        }
        if (app.got_subcommand(cmd_gen)) {
            GanBundle<float> bundle = load_checkpoint<float>(ckpt_path);
            const MatD u = read_csv_matrix(dist_csv);
            const auto labels = read_csv_labels(labels_csv);
            const MatD rss = generate_sequences(bundle, u, labels, gen_seed);
            std::ostringstream out;
            for (Eigen::Index r = 0; r < rss.rows(); ++r) {
                for (Eigen::Index c = 0; c < rss.cols(); ++c) {
                    if (c > 0) {
                        out << ',';
                    }
                    out << format_double(rss(r, c));
                }
                out << '\n';
            }
            if (out_dir.empty()) {
                std::cout << out.str();
            } else {
                write_text_file(out_dir, out.str());
            }
            return 0;
        }
        if (app.got_subcommand(cmd_sim)) {
            GanBundle<float> bundle = load_checkpoint<float>(ckpt_path);
            const SceneBundle scene_bundle = load_scene_bundle(scene_path);
            SimulateConfig sim;
            sim.n_trajectories = sim_n;
            sim.noise_dbm = noise_dbm;
            sim.hysteresis_db = hysteresis;
            const auto traces = simulate_links(scene_bundle.scene, bundle, sim, sim_seed);
            std::filesystem::create_directories(out_dir);
            for (const auto& trace : traces) {
                write_text_file(std::filesystem::path(out_dir) /
                                    ("trace_" + std::to_string(trace.traj_id) + ".csv"),
                                trace_to_csv(trace));
            }
            write_text_file(std::filesystem::path(out_dir) / "summary.csv",
                            traces_summary_csv(traces));
            std::cout << "wrote " << traces.size() << " traces to " << out_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
