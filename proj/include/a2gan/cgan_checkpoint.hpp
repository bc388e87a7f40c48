#pragma once

#include "a2gan/cgan_train.hpp"
#include "a2gan/io.hpp"

#include <cstring>
#include <fstream>
#include <type_traits>

namespace a2gan {

// Checkpoint container: magic + version + JSON header (config, iteration,
// RNG stream states, optimizer step counts, history, tensor index) followed
// by raw little-endian tensor blobs (parameters, then Adam moments).

namespace ckpt {

constexpr char kMagic[8] = {'A', '2', 'G', 'A', 'N', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

template <typename S>
const char* scalar_tag() {
    if constexpr (std::is_same_v<S, float>) {
        return "f32";
    } else {
        static_assert(std::is_same_v<S, double>, "unsupported scalar");
        return "f64";
    }
}

inline Json rng_to_json(const RngStream& rng) {
    const auto s = rng.state();
    return Json::array({s[0], s[1], s[2], s[3]});
}

inline RngStream rng_from_json(const Json& j) {
    RngStream rng;
    rng.set_state({j.at(0).get<uint64_t>(), j.at(1).get<uint64_t>(), j.at(2).get<uint64_t>(),
                   j.at(3).get<uint64_t>()});
    return rng;
}

inline Json config_to_json(const GanConfig& c) {
    return Json{{"latent_dim", c.latent_dim},
                {"embed_dim", c.embed_dim},
                {"n_layers", c.n_layers},
                {"n_heads", c.n_heads},
                {"dropout", c.dropout},
                {"patch_size", c.patch_size},
                {"lr_g", c.lr_g},
                {"lr_d", c.lr_d},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"batch_size", c.batch_size},
                {"n_iterations", c.n_iterations},
                {"eval_interval", c.eval_interval},
                {"t_real", c.t_real},
                {"t_fake", c.t_fake},
                {"n_classes", c.n_classes},
                {"window_w", c.window_w},
                {"mode", to_string(c.mode)}};
}

inline GanConfig config_from_json(const Json& j) {
    GanConfig c;
    c.latent_dim = j.at("latent_dim").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.patch_size = j.at("patch_size").get<int>();
    c.lr_g = j.at("lr_g").get<double>();
    c.lr_d = j.at("lr_d").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.n_iterations = j.at("n_iterations").get<int64_t>();
    c.eval_interval = j.at("eval_interval").get<int64_t>();
    c.t_real = j.at("t_real").get<double>();
    c.t_fake = j.at("t_fake").get<double>();
    c.n_classes = j.at("n_classes").get<int>();
    c.window_w = j.at("window_w").get<int>();
    c.mode = gan_mode_from_string(j.at("mode").get<std::string>());
    return c;
}

inline Json record_to_json(const EvalRecord& r) {
    return Json{{"seq", r.seq},
                {"iteration", r.iteration},
                {"is_final", r.is_final},
                {"steps_averaged", r.steps_averaged},
                {"train_ls_d", r.train_ls_d},
                {"train_ce_d", r.train_ce_d},
                {"train_ls_g", r.train_ls_g},
                {"train_ce_g", r.train_ce_g},
                {"cmd_per_gnb", r.cmd_per_gnb},
                {"cmd_avg", r.cmd_avg},
                {"ks_per_gnb", r.ks_per_gnb},
                {"ks_max", r.ks_max},
                {"eval_ls_g", r.eval_ls_g},
                {"eval_ce_g", r.eval_ce_g}};
}

inline EvalRecord record_from_json(const Json& j) {
    EvalRecord r;
    r.seq = j.at("seq").get<int64_t>();
    r.iteration = j.at("iteration").get<int64_t>();
    r.is_final = j.at("is_final").get<bool>();
    r.steps_averaged = j.at("steps_averaged").get<int64_t>();
    r.train_ls_d = j.at("train_ls_d").get<double>();
    r.train_ce_d = j.at("train_ce_d").get<double>();
    r.train_ls_g = j.at("train_ls_g").get<double>();
    r.train_ce_g = j.at("train_ce_g").get<double>();
    r.cmd_per_gnb = j.at("cmd_per_gnb").get<std::vector<double>>();
    r.cmd_avg = j.at("cmd_avg").get<double>();
    r.ks_per_gnb = j.at("ks_per_gnb").get<std::vector<double>>();
    r.ks_max = j.at("ks_max").get<double>();
    r.eval_ls_g = j.at("eval_ls_g").get<double>();
    r.eval_ce_g = j.at("eval_ce_g").get<double>();
    return r;
}

template <typename S>
void write_tensor(std::ofstream& f, const MatX<S>& m) {
    std::vector<S> row(static_cast<size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row[static_cast<size_t>(c)] = m(r, c);
        }
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(S)));
    }
}

template <typename S>
void read_tensor(std::ifstream& f, MatX<S>& m) {
    std::vector<S> row(static_cast<size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(S)));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = row[static_cast<size_t>(c)];
        }
    }
}

} // namespace ckpt

template <typename S>
void save_checkpoint(GanBundle<S>& bundle, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot open checkpoint for writing: " + path.string());

    Json tensors = Json::array();
    const auto index_params = [&tensors](const nn::ParamRefs<S>& params) {
        for (const auto* p : params) {
            tensors.push_back(Json{{"name", p->name},
                                   {"rows", p->value.rows()},
                                   {"cols", p->value.cols()}});
        }
    };
    index_params(bundle.gen.params());
    index_params(bundle.disc.params());

    Json history = Json::array();
    for (const auto& r : bundle.history) {
        history.push_back(ckpt::record_to_json(r));
    }

    Json header{{"scalar", ckpt::scalar_tag<S>()},
                {"config", ckpt::config_to_json(bundle.config)},
                {"seed", bundle.seed},
                {"iteration", bundle.iteration},
                {"has_norm_stats", bundle.has_norm_stats},
                {"norm_stats",
                 Json{{"rss_mean", bundle.norm_stats.rss_mean},
                      {"rss_std", bundle.norm_stats.rss_std},
                      {"dist_mean", bundle.norm_stats.dist_mean},
                      {"dist_std", bundle.norm_stats.dist_std}}},
                {"adam_g_t", bundle.adam_g.t()},
                {"adam_d_t", bundle.adam_d.t()},
                {"rng",
                 Json{{"z", ckpt::rng_to_json(bundle.rng_z)},
                      {"dropout_g", ckpt::rng_to_json(bundle.rng_dropout_g)},
                      {"dropout_d", ckpt::rng_to_json(bundle.rng_dropout_d)},
                      {"shuffle", ckpt::rng_to_json(bundle.rng_shuffle)}}},
                {"batch_perm", bundle.batch_perm},
                {"batch_cursor", bundle.batch_cursor},
                {"history", history},
                {"tensors", tensors}};

    const std::string header_str = header.dump();
    f.write(ckpt::kMagic, sizeof(ckpt::kMagic));
    const uint32_t version = ckpt::kVersion;
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t header_len = header_str.size();
    f.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

    for (const auto* p : bundle.gen.params()) {
        ckpt::write_tensor(f, p->value);
    }
    for (const auto* p : bundle.disc.params()) {
        ckpt::write_tensor(f, p->value);
    }
    for (auto* adam : {&bundle.adam_g, &bundle.adam_d}) {
        for (const auto& m : adam->moments1()) {
            ckpt::write_tensor(f, m);
        }
        for (const auto& v : adam->moments2()) {
            ckpt::write_tensor(f, v);
        }
    }
    require(f.good(), "checkpoint write failed: " + path.string());
}

template <typename S>
GanBundle<S> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open checkpoint: " + path.string());

    char magic[8];
    f.read(magic, sizeof(magic));
    require(f.good() && std::memcmp(magic, ckpt::kMagic, sizeof(magic)) == 0,
            path.string() + ": not a checkpoint file");
    uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    require(version == ckpt::kVersion, path.string() + ": unsupported checkpoint format version " +
                                           std::to_string(version) + " (expected " +
                                           std::to_string(ckpt::kVersion) + ")");
    uint64_t header_len = 0;
    f.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    require(f.good(), path.string() + ": truncated checkpoint header");
    std::string header_str(header_len, '\0');
    f.read(header_str.data(), static_cast<std::streamsize>(header_len));
    require(f.good(), path.string() + ": truncated checkpoint header");
    Json header;
    try {
        header = Json::parse(header_str);
    } catch (const std::exception& e) {
        fail(path.string() + ": corrupt checkpoint header: " + e.what());
    }

    require(header.at("scalar").get<std::string>() == ckpt::scalar_tag<S>(),
            path.string() + ": checkpoint scalar type " + header.at("scalar").get<std::string>() +
                " does not match this build (" + ckpt::scalar_tag<S>() + ")");

    GanBundle<S> bundle =
        init_gan_bundle<S>(ckpt::config_from_json(header.at("config")),
                           header.at("seed").get<uint64_t>());
    bundle.iteration = header.at("iteration").get<int64_t>();
    bundle.has_norm_stats = header.at("has_norm_stats").get<bool>();
    const Json& stats = header.at("norm_stats");
    bundle.norm_stats.rss_mean = stats.at("rss_mean").get<double>();
    bundle.norm_stats.rss_std = stats.at("rss_std").get<double>();
    bundle.norm_stats.dist_mean = stats.at("dist_mean").get<double>();
    bundle.norm_stats.dist_std = stats.at("dist_std").get<double>();
    bundle.adam_g.set_t(header.at("adam_g_t").get<int64_t>());
    bundle.adam_d.set_t(header.at("adam_d_t").get<int64_t>());
    const Json& rng = header.at("rng");
    bundle.rng_z = ckpt::rng_from_json(rng.at("z"));
    bundle.rng_dropout_g = ckpt::rng_from_json(rng.at("dropout_g"));
    bundle.rng_dropout_d = ckpt::rng_from_json(rng.at("dropout_d"));
    bundle.rng_shuffle = ckpt::rng_from_json(rng.at("shuffle"));
    bundle.batch_perm = header.at("batch_perm").get<std::vector<int64_t>>();
    bundle.batch_cursor = header.at("batch_cursor").get<uint64_t>();
    for (const auto& jr : header.at("history")) {
        bundle.history.push_back(ckpt::record_from_json(jr));
    }

    // Validate the tensor index against the freshly initialized shapes,
    // then overwrite values and moments from the blob section.
    std::vector<nn::Parameter<S>*> params;
    for (auto* p : bundle.gen.params()) {
        params.push_back(p);
    }
    for (auto* p : bundle.disc.params()) {
        params.push_back(p);
    }
    const Json& tensors = header.at("tensors");
    require(tensors.size() == params.size(), path.string() + ": tensor count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        const Json& t = tensors.at(i);
        require(t.at("name").get<std::string>() == params[i]->name &&
                    t.at("rows").get<Eigen::Index>() == params[i]->value.rows() &&
                    t.at("cols").get<Eigen::Index>() == params[i]->value.cols(),
                path.string() + ": tensor index mismatch at " + params[i]->name);
    }
    for (auto* p : params) {
        ckpt::read_tensor(f, p->value);
    }
    for (auto* adam : {&bundle.adam_g, &bundle.adam_d}) {
        for (auto& m : adam->moments1()) {
            ckpt::read_tensor(f, m);
        }
        for (auto& v : adam->moments2()) {
            ckpt::read_tensor(f, v);
        }
    }
    require(f.good(), path.string() + ": truncated checkpoint tensor section");
    return bundle;
}

} // namespace a2gan
