#pragma once

#include "a2gan/common.hpp"
#include "a2gan/dataset.hpp"
#include "a2gan/nn.hpp"
#include "a2gan/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace a2gan {

enum class GanMode { SingleGnb, MultiGnb };

inline std::string to_string(GanMode m) {
    return m == GanMode::SingleGnb ? "single_gnb" : "multi_gnb";
}

inline GanMode gan_mode_from_string(const std::string& s) {
    if (s == "single_gnb" || s == "single") {
        return GanMode::SingleGnb;
    }
    if (s == "multi_gnb" || s == "multi") {
        return GanMode::MultiGnb;
    }
    fail("unknown GAN mode: " + s);
}

struct GanConfig {
    int latent_dim = 100;
    int embed_dim = 50;
    int n_layers = 3;
    int n_heads = 5;
    double dropout = 0.5;
    int patch_size = 16;
    double lr_g = 3e-4;
    double lr_d = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    int batch_size = 64;
    int64_t n_iterations = 20000;
    int64_t eval_interval = 1000;
    double t_real = 1.0;
    double t_fake = 0.0;
    int n_classes = 3;
    int window_w = 128;
    GanMode mode = GanMode::MultiGnb;

    int mlp_hidden() const { return 4 * embed_dim; }
    int n_patches() const { return window_w / patch_size; }

    void validate() const {
        require(latent_dim >= 1 && embed_dim >= 1, "latent_dim/embed_dim must be >= 1");
        require(window_w % patch_size == 0, "window_w must be divisible by patch_size");
        require(embed_dim % n_heads == 0, "n_heads must divide embed_dim");
        require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
        require(t_real != t_fake, "t_real and t_fake must differ");
        require(n_classes >= 1, "n_classes must be >= 1");
        require(batch_size >= 1 && n_layers >= 1, "batch_size/n_layers must be >= 1");
        require(n_iterations >= 0 && eval_interval >= 1, "invalid iteration counts");
    }
};

// ---------------------------------------------------------------------------
// Losses (means over the batch). Values are reported in double regardless of
// the training scalar; gradients come back in the training scalar.

template <typename S>
struct LsTerms {
    double value = 0.0;
    VecX<S> d_real;
    VecX<S> d_fake;
};

/// Eq.-(4)-style least-squares discriminator loss:
/// 0.5 mean[(adv_real - t_real)^2] + 0.5 mean[(adv_fake - t_fake)^2].
template <typename S>
LsTerms<S> ls_loss_discriminator(const VecX<S>& adv_real, const VecX<S>& adv_fake, double t_real,
                                 double t_fake) {
    const auto br = static_cast<double>(adv_real.size());
    const auto bf = static_cast<double>(adv_fake.size());
    require(br > 0 && bf > 0, "empty adversarial batch");
    LsTerms<S> out;
    const VecX<S> er = adv_real.array() - static_cast<S>(t_real);
    const VecX<S> ef = adv_fake.array() - static_cast<S>(t_fake);
    out.value = 0.5 * er.template cast<double>().squaredNorm() / br +
                0.5 * ef.template cast<double>().squaredNorm() / bf;
    out.d_real = er / static_cast<S>(br);
    out.d_fake = ef / static_cast<S>(bf);
    return out;
}

/// Eq.-(5)-style generator loss: 0.5 mean[(adv_fake - t_real)^2].
template <typename S>
LsTerms<S> ls_loss_generator(const VecX<S>& adv_fake, double t_real) {
    const auto b = static_cast<double>(adv_fake.size());
    require(b > 0, "empty adversarial batch");
    LsTerms<S> out;
    const VecX<S> ef = adv_fake.array() - static_cast<S>(t_real);
    out.value = 0.5 * ef.template cast<double>().squaredNorm() / b;
    out.d_fake = ef / static_cast<S>(b);
    return out;
}

template <typename S>
struct CeTerms {
    double value = 0.0;
    MatX<S> d_logits;
};

/// Mean cross entropy of softmax(logits) against integer labels.
template <typename S>
CeTerms<S> ce_loss(const MatX<S>& logits, const std::vector<uint8_t>& labels) {
    const auto b = logits.rows();
    const auto c = logits.cols();
    require(c >= 2, "ce_loss requires at least 2 classes");
    require(static_cast<size_t>(b) == labels.size(), "label count mismatch");
    CeTerms<S> out;
    out.d_logits.resize(b, c);
    double total = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        require(labels[static_cast<size_t>(i)] < c, "label out of range");
        const S mx = logits.row(i).maxCoeff();
        VecX<S> shifted = (logits.row(i).array() - mx).transpose();
        const S lse = std::log(shifted.array().exp().sum());
        total -= static_cast<double>(shifted(labels[static_cast<size_t>(i)]) - lse);
        // softmax - onehot, scaled by 1/B
        VecX<S> probs = (shifted.array() - lse).exp();
        probs(labels[static_cast<size_t>(i)]) -= S(1);
        out.d_logits.row(i) = probs.transpose() / static_cast<S>(b);
    }
    out.value = total / static_cast<double>(b);
    return out;
}

// ---------------------------------------------------------------------------

template <typename S>
class Adam {
  public:
    void init(const nn::ParamRefs<S>& params) {
        m_.clear();
        v_.clear();
        t_ = 0;
        for (const auto* p : params) {
            m_.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(MatX<S>::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void step(const nn::ParamRefs<S>& params, double lr, double beta1, double beta2,
              double eps = 1e-8) {
        require(params.size() == m_.size(), "Adam state out of sync");
        ++t_;
        const S b1 = static_cast<S>(beta1);
        const S b2 = static_cast<S>(beta2);
        const S corr1 = static_cast<S>(1.0 - std::pow(beta1, static_cast<double>(t_)));
        const S corr2 = static_cast<S>(1.0 - std::pow(beta2, static_cast<double>(t_)));
        const S alpha = static_cast<S>(lr);
        const S e = static_cast<S>(eps);
        for (size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad;
            v_[i] = (b2 * v_[i].array() + (S(1) - b2) * p.grad.array().square()).matrix();
            p.value.array() -=
                alpha * (m_[i].array() / corr1) / ((v_[i].array() / corr2).sqrt() + e);
        }
    }

    int64_t t() const { return t_; }
    std::vector<MatX<S>>& moments1() { return m_; }
    std::vector<MatX<S>>& moments2() { return v_; }
    void set_t(int64_t t) { t_ = t; }

  private:
    std::vector<MatX<S>> m_;
    std::vector<MatX<S>> v_;
    int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Generator: [z; enc(u); emb(c)] -> linear expansion to a W-token sequence
// with embed_dim channels -> 3 pre-norm encoder layers -> 1x1 channel
// reduction to the RSS sequence.

template <typename S>
class GeneratorNet {
  public:
    void init(const GanConfig& cfg, uint64_t seed) {
        cfg.validate();
        cfg_ = cfg;
        RngStream rng = RngStream::derive(seed, "init_g");
        label_emb_.init("g.label_emb", cfg.n_classes, cfg.embed_dim, rng);
        dist_enc_.init("g.dist_enc", cfg.window_w, cfg.embed_dim, rng);
        expand_.init("g.expand", cfg.latent_dim + 2 * cfg.embed_dim, cfg.window_w * cfg.embed_dim,
                     rng);
        layers_.clear();
        for (int l = 0; l < cfg.n_layers; ++l) {
            layers_.emplace_back(cfg.dropout);
            layers_.back().init("g.enc" + std::to_string(l), cfg.embed_dim, cfg.n_heads,
                                cfg.mlp_hidden(), rng);
        }
        reduce_.init("g.reduce", cfg.embed_dim, 1, rng);
        params_.clear();
        label_emb_.collect(params_);
        dist_enc_.collect(params_);
        expand_.collect(params_);
        for (auto& l : layers_) {
            l.collect(params_);
        }
        reduce_.collect(params_);
    }

    /// z: B x latent, u: B x W (normalized), labels: B. Returns B x W.
    /// Pass rng = nullptr for eval mode (dropout off).
    MatX<S> forward(const MatX<S>& z, const MatX<S>& u, const std::vector<uint8_t>& labels,
                    RngStream* rng) {
        const auto b = z.rows();
        require(z.cols() == cfg_.latent_dim, "latent shape mismatch");
        require(u.rows() == b && u.cols() == cfg_.window_w, "distance window shape mismatch");
        require(static_cast<size_t>(b) == labels.size(), "label count mismatch");

        MatX<S> enc = lrelu_.forward(dist_enc_.forward(u));
        MatX<S> emb = label_emb_.forward(labels);
        MatX<S> cat(b, cfg_.latent_dim + 2 * cfg_.embed_dim);
        cat << z, enc, emb;
        MatX<S> s = expand_.forward(cat);

        const int w = cfg_.window_w;
        const int e = cfg_.embed_dim;
        MatX<S> tokens(b * w, e);
        for (Eigen::Index i = 0; i < b; ++i) {
            for (int t = 0; t < w; ++t) {
                tokens.row(i * w + t) = s.block(i, t * e, 1, e);
            }
        }
        for (auto& layer : layers_) {
            tokens = layer.forward(tokens, static_cast<int>(b), w, rng);
        }
        MatX<S> flat = reduce_.forward(tokens); // (B*W) x 1
        MatX<S> out(b, w);
        for (Eigen::Index i = 0; i < b; ++i) {
            for (int t = 0; t < w; ++t) {
                out(i, t) = flat(i * w + t, 0);
            }
        }
        batch_ = static_cast<int>(b);
        return out;
    }

    /// Accumulates parameter gradients for the cached forward pass.
    void backward(const MatX<S>& d_out) {
        const int b = batch_;
        const int w = cfg_.window_w;
        const int e = cfg_.embed_dim;
        MatX<S> d_flat(b * w, 1);
        for (int i = 0; i < b; ++i) {
            for (int t = 0; t < w; ++t) {
                d_flat(i * w + t, 0) = d_out(i, t);
            }
        }
        MatX<S> d_tokens = reduce_.backward(d_flat);
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            d_tokens = it->backward(d_tokens);
        }
        MatX<S> d_s(b, w * e);
        for (int i = 0; i < b; ++i) {
            for (int t = 0; t < w; ++t) {
                d_s.block(i, t * e, 1, e) = d_tokens.row(i * w + t);
            }
        }
        MatX<S> d_cat = expand_.backward(d_s);
        MatX<S> d_enc = d_cat.block(0, cfg_.latent_dim, b, cfg_.embed_dim);
        MatX<S> d_emb = d_cat.block(0, cfg_.latent_dim + cfg_.embed_dim, b, cfg_.embed_dim);
        dist_enc_.backward(lrelu_.backward(d_enc));
        label_emb_.backward(d_emb);
    }

    const nn::ParamRefs<S>& params() { return params_; }
    const GanConfig& config() const { return cfg_; }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto* p : params_) {
            n += p->count();
        }
        return n;
    }

  private:
    GanConfig cfg_;
    nn::Embedding<S> label_emb_;
    nn::Dense<S> dist_enc_;
    nn::LeakyRelu<S> lrelu_;
    nn::Dense<S> expand_;
    std::vector<nn::EncoderLayer<S>> layers_;
    nn::Dense<S> reduce_;
    nn::ParamRefs<S> params_;
    int batch_ = 0;
};

// ---------------------------------------------------------------------------
// Discriminator: the RSS window and the encoded distance window are stacked
// as two channels, cut into W/P patches, embedded with learned positional
// encodings and a class token, run through the encoder stack, and read out
// by an adversarial head and a C-way classification head.

template <typename S>
struct DiscriminatorOut {
    VecX<S> adv;     // B
    MatX<S> logits;  // B x C
};

template <typename S>
class DiscriminatorNet {
  public:
    void init(const GanConfig& cfg, uint64_t seed) {
        cfg.validate();
        cfg_ = cfg;
        RngStream rng = RngStream::derive(seed, "init_d");
        dist_enc_.init("d.dist_enc", cfg.window_w, cfg.window_w, rng);
        patch_embed_.init("d.patch_embed", 2 * cfg.patch_size, cfg.embed_dim, rng);
        cls_token_.init_normal("d.cls_token", 1, cfg.embed_dim, rng, nn::kInitStd);
        pos_emb_.init_normal("d.pos_emb", cfg.n_patches() + 1, cfg.embed_dim, rng, nn::kInitStd);
        layers_.clear();
        for (int l = 0; l < cfg.n_layers; ++l) {
            layers_.emplace_back(cfg.dropout);
            layers_.back().init("d.enc" + std::to_string(l), cfg.embed_dim, cfg.n_heads,
                                cfg.mlp_hidden(), rng);
        }
        final_norm_.init("d.final_norm", cfg.embed_dim);
        adv_head_.init("d.adv_head", cfg.embed_dim, 1, rng);
        cls_head_.init("d.cls_head", cfg.embed_dim, cfg.n_classes, rng);

        params_.clear();
        dist_enc_.collect(params_);
        patch_embed_.collect(params_);
        params_.push_back(&cls_token_);
        params_.push_back(&pos_emb_);
        for (auto& l : layers_) {
            l.collect(params_);
        }
        final_norm_.collect(params_);
        adv_head_.collect(params_);
        cls_head_.collect(params_);
    }

    DiscriminatorOut<S> forward(const MatX<S>& x, const MatX<S>& u, RngStream* rng) {
        const auto b = x.rows();
        require(x.cols() == cfg_.window_w && u.cols() == cfg_.window_w && u.rows() == b,
                "discriminator input shape mismatch");
        const int np = cfg_.n_patches();
        const int p = cfg_.patch_size;
        const int e = cfg_.embed_dim;
        const int t = np + 1;

        MatX<S> du = lrelu_.forward(dist_enc_.forward(u));

        MatX<S> patches(b * np, 2 * p);
        for (Eigen::Index i = 0; i < b; ++i) {
            for (int q = 0; q < np; ++q) {
                patches.block(i * np + q, 0, 1, p) = x.block(i, q * p, 1, p);
                patches.block(i * np + q, p, 1, p) = du.block(i, q * p, 1, p);
            }
        }
        MatX<S> pe = patch_embed_.forward(patches);

        MatX<S> tokens(b * t, e);
        for (Eigen::Index i = 0; i < b; ++i) {
            tokens.row(i * t) = cls_token_.value.row(0) + pos_emb_.value.row(0);
            for (int q = 0; q < np; ++q) {
                tokens.row(i * t + 1 + q) = pe.row(i * np + q) + pos_emb_.value.row(1 + q);
            }
        }
        for (auto& layer : layers_) {
            tokens = layer.forward(tokens, static_cast<int>(b), t, rng);
        }

        MatX<S> cls_rows(b, e);
        for (Eigen::Index i = 0; i < b; ++i) {
            cls_rows.row(i) = tokens.row(i * t);
        }
        // Final norm is per token, so applying it to the extracted class
        // rows matches normalizing the whole sequence first.
        MatX<S> feat = final_norm_.forward(cls_rows);
        DiscriminatorOut<S> out;
        out.adv = adv_head_.forward(feat).col(0);
        out.logits = cls_head_.forward(feat);
        batch_ = static_cast<int>(b);
        return out;
    }

    /// Backward for the cached forward pass. Returns the gradient w.r.t.
    /// the RSS input when want_dx is set (used by the generator update).
    MatX<S> backward(const VecX<S>& d_adv, const MatX<S>& d_logits, bool want_dx) {
        const int b = batch_;
        const int np = cfg_.n_patches();
        const int p = cfg_.patch_size;
        const int e = cfg_.embed_dim;
        const int t = np + 1;

        MatX<S> d_feat = adv_head_.backward(d_adv);
        if (d_logits.size() > 0) {
            d_feat += cls_head_.backward(d_logits);
        } else {
            // keep head caches consistent even when unused
            d_feat += cls_head_.backward(MatX<S>::Zero(b, cfg_.n_classes));
        }
        MatX<S> d_cls_rows = final_norm_.backward(d_feat);

        MatX<S> d_tokens = MatX<S>::Zero(b * t, e);
        for (int i = 0; i < b; ++i) {
            d_tokens.row(i * t) = d_cls_rows.row(i);
        }
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            d_tokens = it->backward(d_tokens);
        }

        MatX<S> d_pe(b * np, e);
        for (int i = 0; i < b; ++i) {
            cls_token_.grad.row(0) += d_tokens.row(i * t);
            pos_emb_.grad.row(0) += d_tokens.row(i * t);
            for (int q = 0; q < np; ++q) {
                d_pe.row(i * np + q) = d_tokens.row(i * t + 1 + q);
                pos_emb_.grad.row(1 + q) += d_tokens.row(i * t + 1 + q);
            }
        }
        MatX<S> d_patches = patch_embed_.backward(d_pe);

        MatX<S> d_du(b, cfg_.window_w);
        MatX<S> dx;
        if (want_dx) {
            dx.resize(b, cfg_.window_w);
        }
        for (int i = 0; i < b; ++i) {
            for (int q = 0; q < np; ++q) {
                if (want_dx) {
                    dx.block(i, q * p, 1, p) = d_patches.block(i * np + q, 0, 1, p);
                }
                d_du.block(i, q * p, 1, p) = d_patches.block(i * np + q, p, 1, p);
            }
        }
        dist_enc_.backward(lrelu_.backward(d_du));
        return dx;
    }

    const nn::ParamRefs<S>& params() { return params_; }

    /// Parameters of the C-way classification head, for the single-gNB
    /// mode contract (they must receive no gradient there).
    nn::ParamRefs<S> classification_params() {
        nn::ParamRefs<S> out;
        cls_head_.collect(out);
        return out;
    }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto* p : params_) {
            n += p->count();
        }
        return n;
    }

  private:
    GanConfig cfg_;
    nn::Dense<S> dist_enc_;
    nn::LeakyRelu<S> lrelu_;
    nn::Dense<S> patch_embed_;
    nn::Parameter<S> cls_token_;
    nn::Parameter<S> pos_emb_;
    std::vector<nn::EncoderLayer<S>> layers_;
    nn::LayerNorm<S> final_norm_;
    nn::Dense<S> adv_head_;
    nn::Dense<S> cls_head_;
    nn::ParamRefs<S> params_;
    int batch_ = 0;
};

} // namespace a2gan
