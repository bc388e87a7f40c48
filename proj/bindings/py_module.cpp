// Python bindings for the main operations: scene/power-map construction,
// trajectory generation, dataset assembly, GAN training and generation,
// metrics, and the link-level simulation loop.

#include "a2gan/cgan_checkpoint.hpp"
#include "a2gan/cgan_train.hpp"
#include "a2gan/metrics.hpp"
#include "a2gan/pipeline.hpp"
#include "a2gan/syseval.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace a2gan;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Conditional-GAN toolkit for spatially consistent UAV-gNB RSS sequences";

    py::register_exception<Error>(m, "A2ganError");

    // --- scene ---
    py::class_<PropagationParams>(m, "PropagationParams")
        .def(py::init<>())
        .def_readwrite("tx_power_dbm", &PropagationParams::tx_power_dbm)
        .def_readwrite("pathloss_exponent_los", &PropagationParams::pathloss_exponent_los)
        .def_readwrite("pathloss_exponent_nlos", &PropagationParams::pathloss_exponent_nlos)
        .def_readwrite("reference_loss_db", &PropagationParams::reference_loss_db)
        .def_readwrite("shadowing_std_db", &PropagationParams::shadowing_std_db)
        .def_readwrite("shadowing_decorrelation_m", &PropagationParams::shadowing_decorrelation_m)
        .def_readwrite("nlos_penalty_db", &PropagationParams::nlos_penalty_db);

    py::class_<SceneConfig>(m, "SceneConfig")
        .def(py::init<>())
        .def_readwrite("area_width_m", &SceneConfig::area_width_m)
        .def_readwrite("area_depth_m", &SceneConfig::area_depth_m)
        .def_readwrite("n_buildings", &SceneConfig::n_buildings)
        .def_readwrite("building_min_size_m", &SceneConfig::building_min_size_m)
        .def_readwrite("building_max_size_m", &SceneConfig::building_max_size_m)
        .def_readwrite("building_min_height_m", &SceneConfig::building_min_height_m)
        .def_readwrite("building_max_height_m", &SceneConfig::building_max_height_m)
        .def_readwrite("street_width_m", &SceneConfig::street_width_m)
        .def_readwrite("n_gnbs", &SceneConfig::n_gnbs)
        .def_readwrite("gnb_height_m", &SceneConfig::gnb_height_m)
        .def_readwrite("propagation", &SceneConfig::propagation);

    py::class_<Footprint>(m, "Footprint")
        .def_readonly("x0", &Footprint::x0)
        .def_readonly("y0", &Footprint::y0)
        .def_readonly("x1", &Footprint::x1)
        .def_readonly("y1", &Footprint::y1)
        .def_readonly("height_m", &Footprint::height_m);

    py::class_<Gnb>(m, "Gnb")
        .def_readonly("id", &Gnb::id)
        .def_property_readonly("position", [](const Gnb& g) {
            return py::make_tuple(g.position.x, g.position.y, g.position.z);
        });

    py::class_<Scene>(m, "Scene")
        .def_readonly("area_width_m", &Scene::area_width_m)
        .def_readonly("area_depth_m", &Scene::area_depth_m)
        .def_readonly("buildings", &Scene::buildings)
        .def_readonly("gnbs", &Scene::gnbs)
        .def_readonly("seed", &Scene::seed)
        .def("num_gnbs", &Scene::num_gnbs);

    py::class_<PowerMap>(m, "PowerMap")
        .def_readonly("gnb_id", &PowerMap::gnb_id)
        .def_readonly("spacing_m", &PowerMap::spacing_m)
        .def_readonly("height_m", &PowerMap::height_m)
        .def_readonly("rss_dbm", &PowerMap::rss_dbm);

    m.def("build_scene", &build_scene, py::arg("config"), py::arg("seed"));
    m.def(
        "is_los",
        [](const Scene& scene, std::array<double, 3> p1, std::array<double, 3> p2) {
            return is_los(scene, {p1[0], p1[1], p1[2]}, {p2[0], p2[1], p2[2]});
        },
        py::arg("scene"), py::arg("p1"), py::arg("p2"));
    m.def("compute_power_map", &compute_power_map, py::arg("scene"), py::arg("gnb_id"),
          py::arg("spacing_m") = 2.0, py::arg("height_m") = 30.0, py::arg("seed") = 0);

    // --- trajectories ---
    py::class_<TrajectoryConfig>(m, "TrajectoryConfig")
        .def(py::init<>())
        .def_readwrite("min_steps", &TrajectoryConfig::min_steps)
        .def_readwrite("max_steps", &TrajectoryConfig::max_steps)
        .def_readwrite("step_m", &TrajectoryConfig::step_m)
        .def_readwrite("height_m", &TrajectoryConfig::height_m)
        .def_readwrite("p_straight", &TrajectoryConfig::p_straight);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("id", &Trajectory::id)
        .def_readonly("step_m", &Trajectory::step_m)
        .def_readonly("height_m", &Trajectory::height_m)
        .def("length", &Trajectory::length)
        .def_property_readonly("waypoints", [](const Trajectory& t) {
            MatD w(static_cast<Eigen::Index>(t.waypoints.size()), 3);
            for (size_t i = 0; i < t.waypoints.size(); ++i) {
                w(static_cast<Eigen::Index>(i), 0) = t.waypoints[i].x;
                w(static_cast<Eigen::Index>(i), 1) = t.waypoints[i].y;
                w(static_cast<Eigen::Index>(i), 2) = t.waypoints[i].z;
            }
            return w;
        });

    m.def("generate_trajectory", &generate_trajectory, py::arg("scene"), py::arg("seed"),
          py::arg("config") = TrajectoryConfig{});
    m.def(
        "distance_sequence",
        [](const Trajectory& t, std::array<double, 3> gnb) {
            return distance_sequence(t, {gnb[0], gnb[1], gnb[2]});
        },
        py::arg("trajectory"), py::arg("gnb_position"));

    // --- dataset ---
    py::class_<NormStats>(m, "NormStats")
        .def_readonly("rss_mean", &NormStats::rss_mean)
        .def_readonly("rss_std", &NormStats::rss_std)
        .def_readonly("dist_mean", &NormStats::dist_mean)
        .def_readonly("dist_std", &NormStats::dist_std);

    py::class_<DatasetConfig>(m, "DatasetConfig")
        .def(py::init<>())
        .def_readwrite("window_w", &DatasetConfig::window_w)
        .def_readwrite("stride", &DatasetConfig::stride)
        .def_readwrite("test_fraction", &DatasetConfig::test_fraction)
        .def_readwrite("augment", &DatasetConfig::augment)
        .def_readwrite("augment_kernel", &DatasetConfig::augment_kernel)
        .def_readwrite("gnb_filter", &DatasetConfig::gnb_filter);

    py::class_<SequenceDataset>(m, "SequenceDataset")
        .def_property_readonly("x", [](const SequenceDataset& d) { return d.x; })
        .def_property_readonly("u", [](const SequenceDataset& d) { return d.u; })
        .def_readonly("labels", &SequenceDataset::labels)
        .def_readonly("traj_ids", &SequenceDataset::traj_ids)
        .def_readonly("split", &SequenceDataset::split)
        .def_readonly("augmented", &SequenceDataset::augmented)
        .def_readonly("norm_stats", &SequenceDataset::norm_stats)
        .def_readonly("window_w", &SequenceDataset::window_w)
        .def_readonly("n_classes", &SequenceDataset::n_classes)
        .def("rows", &SequenceDataset::rows)
        .def("stats_text", [](const SequenceDataset& d) { return dataset_stats_text(d); });

    py::class_<SceneBundle>(m, "SceneBundle")
        .def_readonly("scene", &SceneBundle::scene)
        .def_readonly("power_maps", &SceneBundle::power_maps);

    m.def("make_scene_bundle", &make_scene_bundle, py::arg("scene"), py::arg("spacing_m") = 2.0,
          py::arg("height_m") = 30.0);
    m.def("save_scene_bundle", &save_scene_bundle, py::arg("bundle"), py::arg("dir"));
    m.def("load_scene_bundle", &load_scene_bundle, py::arg("dir"));
    m.def("build_dataset", &build_dataset, py::arg("scene_bundle"), py::arg("trajectories"),
          py::arg("config"), py::arg("seed"));
    m.def("augment_dataset", &augment_dataset, py::arg("dataset"), py::arg("kernel_size") = 20);
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("dir"));
    m.def("load_dataset", &load_dataset, py::arg("dir"));
    m.def("augment_convolve", &augment_convolve, py::arg("x"), py::arg("kernel_size"));

    // --- metrics ---
    m.def("correlation_matrix", &correlation_matrix, py::arg("sequences"));
    m.def("cmd", &cmd, py::arg("r1"), py::arg("r2"));
    py::class_<CdfReport>(m, "CdfReport")
        .def_readonly("grid", &CdfReport::grid)
        .def_readonly("cdf_real", &CdfReport::cdf_real)
        .def_readonly("cdf_gen", &CdfReport::cdf_gen)
        .def_readonly("ks_distance", &CdfReport::ks_distance);
    m.def("marginal_cdf_report", &marginal_cdf_report, py::arg("real"), py::arg("generated"));
    py::class_<DistanceTrend>(m, "DistanceTrend")
        .def_readonly("exponent", &DistanceTrend::exponent)
        .def_readonly("intercept", &DistanceTrend::intercept)
        .def_readonly("d_ref_m", &DistanceTrend::d_ref_m);
    m.def(
        "distance_trend",
        [](const std::vector<double>& rss, const std::vector<double>& dist, int bins) {
            return distance_trend(rss, dist, bins);
        },
        py::arg("rss_dbm"), py::arg("dist_m"), py::arg("n_bins") = 20);

    // --- cgan ---
    py::enum_<GanMode>(m, "GanMode")
        .value("SingleGnb", GanMode::SingleGnb)
        .value("MultiGnb", GanMode::MultiGnb);

    py::class_<GanConfig>(m, "GanConfig")
        .def(py::init<>())
        .def_readwrite("latent_dim", &GanConfig::latent_dim)
        .def_readwrite("embed_dim", &GanConfig::embed_dim)
        .def_readwrite("n_layers", &GanConfig::n_layers)
        .def_readwrite("n_heads", &GanConfig::n_heads)
        .def_readwrite("dropout", &GanConfig::dropout)
        .def_readwrite("patch_size", &GanConfig::patch_size)
        .def_readwrite("lr_g", &GanConfig::lr_g)
        .def_readwrite("lr_d", &GanConfig::lr_d)
        .def_readwrite("batch_size", &GanConfig::batch_size)
        .def_readwrite("n_iterations", &GanConfig::n_iterations)
        .def_readwrite("eval_interval", &GanConfig::eval_interval)
        .def_readwrite("n_classes", &GanConfig::n_classes)
        .def_readwrite("window_w", &GanConfig::window_w)
        .def_readwrite("mode", &GanConfig::mode);

    py::class_<EvalRecord>(m, "EvalRecord")
        .def_readonly("iteration", &EvalRecord::iteration)
        .def_readonly("is_final", &EvalRecord::is_final)
        .def_readonly("train_ls_d", &EvalRecord::train_ls_d)
        .def_readonly("train_ce_d", &EvalRecord::train_ce_d)
        .def_readonly("train_ls_g", &EvalRecord::train_ls_g)
        .def_readonly("train_ce_g", &EvalRecord::train_ce_g)
        .def_readonly("cmd_per_gnb", &EvalRecord::cmd_per_gnb)
        .def_readonly("cmd_avg", &EvalRecord::cmd_avg)
        .def_readonly("ks_per_gnb", &EvalRecord::ks_per_gnb)
        .def_readonly("eval_ls_g", &EvalRecord::eval_ls_g)
        .def_readonly("eval_ce_g", &EvalRecord::eval_ce_g);

    py::class_<GanBundle<float>>(m, "GanBundle")
        .def_readonly("config", &GanBundle<float>::config)
        .def_readonly("iteration", &GanBundle<float>::iteration)
        .def_readonly("norm_stats", &GanBundle<float>::norm_stats)
        .def_readonly("history", &GanBundle<float>::history)
        .def_property_readonly("generator_param_count",
                               [](GanBundle<float>& b) { return b.gen.param_count(); })
        .def_property_readonly("discriminator_param_count",
                               [](GanBundle<float>& b) { return b.disc.param_count(); });

    m.def("init_gan_bundle", &init_gan_bundle<float>, py::arg("config"), py::arg("seed"));
    m.def(
        "train",
        [](GanBundle<float>& bundle, const SequenceDataset& ds, const EvalCallback& on_eval) {
            train(bundle, ds, on_eval);
        },
        py::arg("bundle"), py::arg("dataset"), py::arg("on_eval") = EvalCallback{},
        py::call_guard<py::gil_scoped_release>());
    m.def("generate_sequences", &generate_sequences<float>, py::arg("bundle"), py::arg("u_phys"),
          py::arg("labels"), py::arg("seed"));
    m.def("save_checkpoint", &save_checkpoint<float>, py::arg("bundle"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint<float>, py::arg("path"));

    // --- syseval ---
    py::class_<LinkSetTrace>(m, "LinkSetTrace")
        .def_readonly("traj_id", &LinkSetTrace::traj_id)
        .def_readonly("rss_dbm", &LinkSetTrace::rss_dbm)
        .def_readonly("serving", &LinkSetTrace::serving)
        .def_readonly("sinr_db", &LinkSetTrace::sinr_db)
        .def_readonly("rate_bps_hz", &LinkSetTrace::rate_bps_hz)
        .def_readonly("handover_steps", &LinkSetTrace::handover_steps);

    py::class_<HandoverStats>(m, "HandoverStats")
        .def_readonly("count", &HandoverStats::count)
        .def_readonly("mean_steps_between", &HandoverStats::mean_steps_between)
        .def_readonly("occupancy", &HandoverStats::occupancy);

    py::class_<SimulateConfig>(m, "SimulateConfig")
        .def(py::init<>())
        .def_readwrite("n_trajectories", &SimulateConfig::n_trajectories)
        .def_readwrite("noise_dbm", &SimulateConfig::noise_dbm)
        .def_readwrite("hysteresis_db", &SimulateConfig::hysteresis_db)
        .def_readwrite("stitch_stride", &SimulateConfig::stitch_stride)
        .def_readwrite("trajectory", &SimulateConfig::trajectory);

    m.def("simulate_links", &simulate_links<float>, py::arg("scene"), py::arg("bundle"),
          py::arg("config"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
    m.def("handover_stats", &handover_stats, py::arg("trace"), py::arg("hysteresis_db"));

    // --- pipeline ---
    m.def(
        "run_pipeline",
        [](const std::string& config_json, bool force, bool strict, bool quiet) {
            const PipelineConfig config = parse_pipeline_config(Json::parse(config_json));
            RunOptions options;
            options.force = force;
            options.strict = strict;
            options.quiet = quiet;
            return run_pipeline(config, options).dump();
        },
        py::arg("config_json"), py::arg("force") = false, py::arg("strict") = false,
        py::arg("quiet") = false, py::call_guard<py::gil_scoped_release>());
}
