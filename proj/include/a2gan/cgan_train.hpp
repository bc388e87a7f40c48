#pragma once

#include "a2gan/cgan.hpp"
#include "a2gan/metrics.hpp"

#include <functional>
#include <vector>

namespace a2gan {

/// One history record: training-loss means since the previous record plus
/// an eval-mode comparison against the test split (per-gNB CMD and KS,
/// generator losses under the current discriminator).
struct EvalRecord {
    int64_t seq = 0;
    int64_t iteration = 0;
    bool is_final = false;
    int64_t steps_averaged = 0;
    double train_ls_d = 0.0;
    double train_ce_d = 0.0;
    double train_ls_g = 0.0;
    double train_ce_g = 0.0;
    std::vector<double> cmd_per_gnb;
    double cmd_avg = 0.0;
    std::vector<double> ks_per_gnb;
    double ks_max = 0.0;
    double eval_ls_g = 0.0;
    double eval_ce_g = 0.0;
};

struct StepMetrics {
    double ls_d = 0.0;
    double ce_d = 0.0;
    double ls_g = 0.0;
    double ce_g = 0.0;
};

template <typename S>
struct GanBundle {
    GanConfig config;
    uint64_t seed = 0;
    GeneratorNet<S> gen;
    DiscriminatorNet<S> disc;
    Adam<S> adam_g;
    Adam<S> adam_d;
    int64_t iteration = 0;
    bool has_norm_stats = false;
    NormStats norm_stats;
    RngStream rng_z;
    RngStream rng_dropout_g;
    RngStream rng_dropout_d;
    RngStream rng_shuffle;
    std::vector<int64_t> batch_perm;
    uint64_t batch_cursor = 0;
    std::vector<EvalRecord> history;
};

template <typename S>
GanBundle<S> init_gan_bundle(const GanConfig& config, uint64_t seed) {
    config.validate();
    GanBundle<S> bundle;
    bundle.config = config;
    bundle.seed = seed;
    bundle.gen.init(config, seed);
    bundle.disc.init(config, seed);
    bundle.adam_g.init(bundle.gen.params());
    bundle.adam_d.init(bundle.disc.params());
    bundle.rng_z = RngStream::derive(seed, "z");
    bundle.rng_dropout_g = RngStream::derive(seed, "dropout_g");
    bundle.rng_dropout_d = RngStream::derive(seed, "dropout_d");
    bundle.rng_shuffle = RngStream::derive(seed, "shuffle");
    return bundle;
}

template <typename S>
MatX<S> sample_latent(int batch, int latent_dim, RngStream& rng) {
    MatX<S> z(batch, latent_dim);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            z(i, j) = static_cast<S>(rng.normal());
        }
    }
    return z;
}

/// One discriminator update followed by one generator update on the same
/// real batch. The fake batch is generated once; its generator tape feeds
/// the generator update against the refreshed discriminator.
template <typename S>
StepMetrics train_step(GanBundle<S>& bundle, const MatX<S>& x, const MatX<S>& u,
                       const std::vector<uint8_t>& labels) {
    const GanConfig& cfg = bundle.config;
    const bool use_ce = cfg.mode == GanMode::MultiGnb && cfg.n_classes >= 2;
    StepMetrics metrics;

    MatX<S> z = sample_latent<S>(static_cast<int>(x.rows()), cfg.latent_dim, bundle.rng_z);
    MatX<S> x_fake = bundle.gen.forward(z, u, labels, &bundle.rng_dropout_g);

    // Discriminator update: LS on real/fake plus CE on real labels. The
    // passes share layer caches, so each forward is backpropagated before
    // the next one; x_fake enters as a constant here (no generator tape).
    nn::zero_grads(bundle.disc.params());
    DiscriminatorOut<S> d_real = bundle.disc.forward(x, u, &bundle.rng_dropout_d);
    CeTerms<S> ce_real;
    if (use_ce) {
        ce_real = ce_loss(d_real.logits, labels);
        metrics.ce_d = ce_real.value;
    }
    VecX<S> d_adv_real = (d_real.adv.array() - static_cast<S>(cfg.t_real)).matrix() /
                         static_cast<S>(d_real.adv.size());
    bundle.disc.backward(d_adv_real, ce_real.d_logits, /*want_dx=*/false);

    DiscriminatorOut<S> d_fake = bundle.disc.forward(x_fake, u, &bundle.rng_dropout_d);
    VecX<S> d_adv_fake = (d_fake.adv.array() - static_cast<S>(cfg.t_fake)).matrix() /
                         static_cast<S>(d_fake.adv.size());
    bundle.disc.backward(d_adv_fake, MatX<S>(), /*want_dx=*/false);

    metrics.ls_d =
        0.5 * (d_real.adv.template cast<double>().array() - cfg.t_real).square().mean() +
        0.5 * (d_fake.adv.template cast<double>().array() - cfg.t_fake).square().mean();

    bundle.adam_d.step(bundle.disc.params(), cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2);

    // Generator update against the updated discriminator.
    nn::zero_grads(bundle.gen.params());
    nn::zero_grads(bundle.disc.params()); // scratch; cleared again next step
    DiscriminatorOut<S> d_gen = bundle.disc.forward(x_fake, u, &bundle.rng_dropout_d);
    LsTerms<S> ls_g = ls_loss_generator(d_gen.adv, cfg.t_real);
    metrics.ls_g = ls_g.value;
    CeTerms<S> ce_gen;
    if (use_ce) {
        ce_gen = ce_loss(d_gen.logits, labels);
        metrics.ce_g = ce_gen.value;
    }
    MatX<S> dx = bundle.disc.backward(ls_g.d_fake, ce_gen.d_logits, /*want_dx=*/true);
    bundle.gen.backward(dx);
    bundle.adam_g.step(bundle.gen.params(), cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2);

    const auto check = [&](double v, const char* name) {
        require(std::isfinite(v), std::string("non-finite ") + name + " at iteration " +
                                      std::to_string(bundle.iteration));
    };
    check(metrics.ls_d, "L_LS^(D)");
    check(metrics.ls_g, "L_LS^(G)");
    if (use_ce) {
        check(metrics.ce_d, "L_CE^(D)");
        check(metrics.ce_g, "L_CE^(G)");
    }
    return metrics;
}

// ---------------------------------------------------------------------------
// Evaluation on the test split.

template <typename S>
struct EvalContext {
    struct PerGnb {
        int gnb_id = 0;
        MatD real_phys;   // denormalized RSS windows
        MatX<S> u_norm;   // conditioning windows
        std::vector<uint8_t> labels;
    };
    std::vector<PerGnb> gnbs;
};

template <typename S>
EvalContext<S> make_eval_context(const SequenceDataset& ds) {
    EvalContext<S> ctx;
    for (int g = 0; g < ds.n_classes; ++g) {
        const auto rows = ds.rows_of(Split::Test, g);
        require(rows.size() >= 2, "test split has fewer than 2 windows for gNB " +
                                      std::to_string(g) + "; missing test split");
        typename EvalContext<S>::PerGnb slot;
        slot.gnb_id = g;
        slot.real_phys.resize(static_cast<Eigen::Index>(rows.size()), ds.window_w);
        slot.u_norm.resize(static_cast<Eigen::Index>(rows.size()), ds.window_w);
        slot.labels.assign(rows.size(), static_cast<uint8_t>(g));
        for (size_t i = 0; i < rows.size(); ++i) {
            for (int j = 0; j < ds.window_w; ++j) {
                slot.real_phys(static_cast<Eigen::Index>(i), j) = denormalize_value(
                    ds.x(rows[i], j), ds.norm_stats.rss_mean, ds.norm_stats.rss_std);
                slot.u_norm(static_cast<Eigen::Index>(i), j) = static_cast<S>(ds.u(rows[i], j));
            }
        }
        ctx.gnbs.push_back(std::move(slot));
    }
    return ctx;
}

/// Eval-mode generation for a block of conditioning windows, chunked by the
/// configured batch size; z drawn sequentially from the given stream.
template <typename S>
MatX<S> generate_normalized(GanBundle<S>& bundle, const MatX<S>& u_norm,
                            const std::vector<uint8_t>& labels, RngStream& z_rng) {
    const auto m = u_norm.rows();
    const int chunk = bundle.config.batch_size;
    MatX<S> out(m, bundle.config.window_w);
    for (Eigen::Index start = 0; start < m; start += chunk) {
        const auto n = std::min<Eigen::Index>(chunk, m - start);
        MatX<S> z = sample_latent<S>(static_cast<int>(n), bundle.config.latent_dim, z_rng);
        std::vector<uint8_t> chunk_labels(labels.begin() + start, labels.begin() + start + n);
        out.middleRows(start, n) =
            bundle.gen.forward(z, u_norm.middleRows(start, n), chunk_labels, nullptr);
    }
    return out;
}

template <typename S>
EvalRecord evaluate_gan(GanBundle<S>& bundle, const EvalContext<S>& ctx) {
    EvalRecord rec;
    rec.iteration = bundle.iteration;
    const bool use_ce = bundle.config.mode == GanMode::MultiGnb && bundle.config.n_classes >= 2;

    double cmd_sum = 0.0;
    double ls_sum = 0.0;
    double ce_sum = 0.0;
    RngStream eval_z = RngStream::derive(bundle.seed, "eval",
                                         static_cast<uint64_t>(bundle.iteration));
    for (const auto& slot : ctx.gnbs) {
        MatX<S> gen_norm = generate_normalized(bundle, slot.u_norm, slot.labels, eval_z);
        MatD gen_phys =
            gen_norm.template cast<double>() * bundle.norm_stats.rss_std +
            MatD::Constant(gen_norm.rows(), gen_norm.cols(), bundle.norm_stats.rss_mean);

        rec.cmd_per_gnb.push_back(
            cmd(correlation_matrix(slot.real_phys), correlation_matrix(gen_phys)));
        rec.ks_per_gnb.push_back(marginal_cdf_report(slot.real_phys, gen_phys).ks_distance);
        cmd_sum += rec.cmd_per_gnb.back();

        DiscriminatorOut<S> d = bundle.disc.forward(gen_norm, slot.u_norm, nullptr);
        ls_sum += ls_loss_generator(d.adv, bundle.config.t_real).value;
        if (use_ce) {
            ce_sum += ce_loss(d.logits, slot.labels).value;
        }
    }
    const auto n = static_cast<double>(ctx.gnbs.size());
    rec.cmd_avg = cmd_sum / n;
    rec.eval_ls_g = ls_sum / n;
    rec.eval_ce_g = use_ce ? ce_sum / n : 0.0;
    for (double ks : rec.ks_per_gnb) {
        rec.ks_max = std::max(rec.ks_max, ks);
    }
    return rec;
}

// ---------------------------------------------------------------------------

using EvalCallback = std::function<void(const EvalRecord&)>;

/// Runs n_iterations GAN updates over shuffled train batches, recording an
/// eval snapshot every eval_interval iterations plus a final record.
template <typename S>
void train(GanBundle<S>& bundle, const SequenceDataset& ds, const EvalCallback& on_eval = {}) {
    const GanConfig& cfg = bundle.config;
    require(ds.window_w == cfg.window_w, "dataset window_w does not match GAN config");
    require(ds.n_classes == cfg.n_classes, "dataset n_classes does not match GAN config");
    if (cfg.mode == GanMode::SingleGnb) {
        require(cfg.n_classes == 1, "single_gnb mode expects a 1-class dataset");
    }
    bundle.norm_stats = ds.norm_stats;
    bundle.has_norm_stats = true;

    const auto train_rows = ds.rows_of(Split::Train);
    require(train_rows.size() >= static_cast<size_t>(cfg.batch_size),
            "train split smaller than one batch");
    EvalContext<S> ctx = make_eval_context<S>(ds);

    if (bundle.batch_perm.empty()) {
        bundle.batch_perm = train_rows;
        bundle.rng_shuffle.shuffle(bundle.batch_perm);
        bundle.batch_cursor = 0;
    } else {
        require(bundle.batch_perm.size() == train_rows.size(),
                "resumed dataset does not match checkpoint train split");
    }

    MatX<S> xb(cfg.batch_size, cfg.window_w);
    MatX<S> ub(cfg.batch_size, cfg.window_w);
    std::vector<uint8_t> lb(static_cast<size_t>(cfg.batch_size));

    double acc_ls_d = 0.0, acc_ce_d = 0.0, acc_ls_g = 0.0, acc_ce_g = 0.0;
    int64_t acc_steps = 0;

    const auto push_record = [&](bool is_final) {
        EvalRecord rec = evaluate_gan(bundle, ctx);
        rec.seq = static_cast<int64_t>(bundle.history.size());
        rec.is_final = is_final;
        rec.steps_averaged = acc_steps;
        if (acc_steps > 0) {
            rec.train_ls_d = acc_ls_d / static_cast<double>(acc_steps);
            rec.train_ce_d = acc_ce_d / static_cast<double>(acc_steps);
            rec.train_ls_g = acc_ls_g / static_cast<double>(acc_steps);
            rec.train_ce_g = acc_ce_g / static_cast<double>(acc_steps);
        }
        acc_ls_d = acc_ce_d = acc_ls_g = acc_ce_g = 0.0;
        acc_steps = 0;
        bundle.history.push_back(rec);
        if (on_eval) {
            on_eval(rec);
        }
    };

    for (int64_t it = 0; it < cfg.n_iterations; ++it) {
        if (bundle.batch_perm.size() - bundle.batch_cursor <
            static_cast<uint64_t>(cfg.batch_size)) {
            // epoch boundary: reshuffle, drop the remainder
            bundle.rng_shuffle.shuffle(bundle.batch_perm);
            bundle.batch_cursor = 0;
        }
        for (int i = 0; i < cfg.batch_size; ++i) {
            const auto row = bundle.batch_perm[bundle.batch_cursor++];
            for (int j = 0; j < cfg.window_w; ++j) {
                xb(i, j) = static_cast<S>(ds.x(row, j));
                ub(i, j) = static_cast<S>(ds.u(row, j));
            }
            lb[static_cast<size_t>(i)] = ds.labels[static_cast<size_t>(row)];
        }
        const StepMetrics m = train_step(bundle, xb, ub, lb);
        ++bundle.iteration;
        acc_ls_d += m.ls_d;
        acc_ce_d += m.ce_d;
        acc_ls_g += m.ls_g;
        acc_ce_g += m.ce_g;
        ++acc_steps;
        if (bundle.iteration % cfg.eval_interval == 0) {
            push_record(false);
        }
    }
    push_record(true);
}

/// Post-training sequence generation (Gaussian prior): physical distance
/// windows in, RSS sequences in dBm out. Deterministic in seed.
template <typename S>
MatD generate_sequences(GanBundle<S>& bundle, const MatD& u_phys,
                        const std::vector<uint8_t>& labels, uint64_t seed) {
    require(bundle.has_norm_stats,
            "bundle has no normalization stats; train or load a trained checkpoint first");
    require(u_phys.rows() == static_cast<Eigen::Index>(labels.size()), "label count mismatch");
    for (uint8_t c : labels) {
        require(c < bundle.config.n_classes, "label out of range");
    }
    MatX<S> u_norm =
        ((u_phys.array() - bundle.norm_stats.dist_mean) / bundle.norm_stats.dist_std)
            .template cast<S>()
            .matrix();
    RngStream z_rng = RngStream::derive(seed, "generate");
    MatX<S> gen_norm = generate_normalized(bundle, u_norm, labels, z_rng);
    return gen_norm.template cast<double>() * bundle.norm_stats.rss_std +
           MatD::Constant(gen_norm.rows(), gen_norm.cols(), bundle.norm_stats.rss_mean);
}

} // namespace a2gan
