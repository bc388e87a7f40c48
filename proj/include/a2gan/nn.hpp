#pragma once

#include "a2gan/common.hpp"
#include "a2gan/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

// Minimal reverse-mode layer library for the GAN nets. Each layer caches
// what its backward pass needs; call order must mirror forward order.
// Templated on the scalar so training runs in float while gradient checks
// instantiate double.

namespace a2gan::nn {

template <typename S>
using Mat = MatX<S>;

template <typename S>
struct Parameter {
    std::string name;
    Mat<S> value;
    Mat<S> grad;

    void init_zero(const std::string& n, int rows, int cols) {
        name = n;
        value = Mat<S>::Zero(rows, cols);
        grad = Mat<S>::Zero(rows, cols);
    }

    void init_normal(const std::string& n, int rows, int cols, RngStream& rng, double stddev) {
        init_zero(n, rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            for (Eigen::Index r = 0; r < rows; ++r) {
                value(r, c) = static_cast<S>(rng.normal() * stddev);
            }
        }
    }

    void init_const(const std::string& n, int rows, int cols, S v) {
        init_zero(n, rows, cols);
        value.setConstant(v);
    }

    int64_t count() const { return value.size(); }
};

template <typename S>
using ParamRefs = std::vector<Parameter<S>*>;

template <typename S>
void zero_grads(const ParamRefs<S>& params) {
    for (auto* p : params) {
        p->grad.setZero();
    }
}

constexpr double kInitStd = 0.02;

template <typename S>
class Dense {
  public:
    void init(const std::string& name, int in, int out, RngStream& rng) {
        w.init_normal(name + ".w", in, out, rng, kInitStd);
        b.init_zero(name + ".b", 1, out);
    }

    Mat<S> forward(const Mat<S>& x) {
        x_ = x;
        Mat<S> y = x * w.value;
        y.rowwise() += b.value.row(0);
        return y;
    }

    // Forward without caching, for eval-mode paths that never backprop.
    Mat<S> forward_eval(const Mat<S>& x) const {
        Mat<S> y = x * w.value;
        y.rowwise() += b.value.row(0);
        return y;
    }

    Mat<S> backward(const Mat<S>& dy) {
        w.grad.noalias() += x_.transpose() * dy;
        b.grad.row(0) += dy.colwise().sum();
        return dy * w.value.transpose();
    }

    void collect(ParamRefs<S>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }

    Parameter<S> w;
    Parameter<S> b;

  private:
    Mat<S> x_;
};

template <typename S>
class Embedding {
  public:
    void init(const std::string& name, int n_classes, int dim, RngStream& rng) {
        table.init_normal(name + ".table", n_classes, dim, rng, kInitStd);
    }

    Mat<S> forward(const std::vector<uint8_t>& labels) {
        labels_ = labels;
        Mat<S> y(static_cast<Eigen::Index>(labels.size()), table.value.cols());
        for (size_t i = 0; i < labels.size(); ++i) {
            require(labels[i] < table.value.rows(), "label out of range");
            y.row(static_cast<Eigen::Index>(i)) = table.value.row(labels[i]);
        }
        return y;
    }

    void backward(const Mat<S>& dy) {
        for (size_t i = 0; i < labels_.size(); ++i) {
            table.grad.row(labels_[i]) += dy.row(static_cast<Eigen::Index>(i));
        }
    }

    void collect(ParamRefs<S>& out) { out.push_back(&table); }

    Parameter<S> table;

  private:
    std::vector<uint8_t> labels_;
};

template <typename S>
class LeakyRelu {
  public:
    explicit LeakyRelu(S slope = static_cast<S>(0.2)) : slope_(slope) {}

    Mat<S> forward(const Mat<S>& x) {
        x_ = x;
        return x.unaryExpr([s = slope_](S v) { return v > S(0) ? v : s * v; });
    }

    Mat<S> backward(const Mat<S>& dy) const {
        return dy.binaryExpr(x_, [s = slope_](S g, S v) { return v > S(0) ? g : s * g; });
    }

  private:
    S slope_;
    Mat<S> x_;
};

template <typename S>
class Gelu {
  public:
    Mat<S> forward(const Mat<S>& x) {
        x_ = x;
        return x.unaryExpr([](S v) {
            return static_cast<S>(0.5) * v * (S(1) + std::erf(v * kInvSqrt2));
        });
    }

    Mat<S> backward(const Mat<S>& dy) const {
        return dy.binaryExpr(x_, [](S g, S v) {
            const S cdf = static_cast<S>(0.5) * (S(1) + std::erf(v * kInvSqrt2));
            const S pdf = kInvSqrt2Pi * std::exp(static_cast<S>(-0.5) * v * v);
            return g * (cdf + v * pdf);
        });
    }

  private:
    static constexpr S kInvSqrt2 = static_cast<S>(0.70710678118654752440);
    static constexpr S kInvSqrt2Pi = static_cast<S>(0.39894228040143267794);
    Mat<S> x_;
};

template <typename S>
class LayerNorm {
  public:
    void init(const std::string& name, int dim) {
        gamma.init_const(name + ".gamma", 1, dim, S(1));
        beta.init_zero(name + ".beta", 1, dim);
    }

    Mat<S> forward(const Mat<S>& x) {
        const auto n = x.cols();
        Eigen::Matrix<S, Eigen::Dynamic, 1> mean = x.rowwise().mean();
        Mat<S> centered = x.colwise() - mean;
        inv_std_ = ((centered.array().square().rowwise().sum() / static_cast<S>(n)) +
                    static_cast<S>(kEps))
                       .sqrt()
                       .inverse()
                       .matrix();
        xhat_ = (centered.array().colwise() * inv_std_.array()).matrix();
        Mat<S> y = (xhat_.array().rowwise() * gamma.value.row(0).array()).matrix();
        y.rowwise() += beta.value.row(0);
        return y;
    }

    Mat<S> backward(const Mat<S>& dy) {
        const auto n = dy.cols();
        gamma.grad.row(0) += (dy.array() * xhat_.array()).colwise().sum().matrix();
        beta.grad.row(0) += dy.colwise().sum();

        Mat<S> dxhat = (dy.array().rowwise() * gamma.value.row(0).array()).matrix();
        Eigen::Matrix<S, Eigen::Dynamic, 1> mean_dxhat = dxhat.rowwise().mean();
        Eigen::Matrix<S, Eigen::Dynamic, 1> mean_dxhat_xhat =
            (dxhat.array() * xhat_.array()).rowwise().sum() / static_cast<S>(n);
        Mat<S> dx = dxhat;
        dx.colwise() -= mean_dxhat;
        dx.array() -= xhat_.array().colwise() * mean_dxhat_xhat.array();
        dx.array().colwise() *= inv_std_.array();
        return dx;
    }

    void collect(ParamRefs<S>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    static constexpr double kEps = 1e-5;

    Parameter<S> gamma;
    Parameter<S> beta;

  private:
    Mat<S> xhat_;
    Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std_;
};

/// Inverted dropout; pass a null stream for eval mode (identity).
template <typename S>
class Dropout {
  public:
    explicit Dropout(double rho) : rho_(rho) {}

    Mat<S> forward(const Mat<S>& x, RngStream* rng) {
        if (rng == nullptr || rho_ <= 0.0) {
            active_ = false;
            return x;
        }
        active_ = true;
        const S scale = static_cast<S>(1.0 / (1.0 - rho_));
        mask_.resize(x.rows(), x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                mask_(r, c) = rng->u01() >= rho_ ? scale : S(0);
            }
        }
        return x.cwiseProduct(mask_);
    }

    Mat<S> backward(const Mat<S>& dy) const {
        return active_ ? dy.cwiseProduct(mask_).eval() : dy;
    }

  private:
    double rho_;
    bool active_ = false;
    Mat<S> mask_;
};

template <typename S>
class MultiHeadAttention {
  public:
    void init(const std::string& name, int embed_dim, int n_heads, RngStream& rng) {
        require(embed_dim % n_heads == 0, "n_heads must divide embed_dim");
        embed_ = embed_dim;
        heads_ = n_heads;
        head_dim_ = embed_dim / n_heads;
        qkv_.init(name + ".qkv", embed_dim, 3 * embed_dim, rng);
        proj_.init(name + ".proj", embed_dim, embed_dim, rng);
    }

    // x: (B*T) x E tokens, batch b owns rows [b*T, (b+1)*T).
    Mat<S> forward(const Mat<S>& x, int batch, int tokens) {
        batch_ = batch;
        tokens_ = tokens;
        qkv_out_ = qkv_.forward(x);
        probs_.assign(static_cast<size_t>(batch) * heads_, Mat<S>());
        const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(head_dim_)));

        Mat<S> attn_out(x.rows(), embed_);
        for (int b = 0; b < batch; ++b) {
            for (int h = 0; h < heads_; ++h) {
                const auto q = qkv_out_.block(b * tokens, h * head_dim_, tokens, head_dim_);
                const auto k = qkv_out_.block(b * tokens, embed_ + h * head_dim_, tokens, head_dim_);
                const auto v = qkv_out_.block(b * tokens, 2 * embed_ + h * head_dim_, tokens, head_dim_);
                Mat<S> scores = (q * k.transpose()) * scale;
                softmax_rows_inplace(scores);
                attn_out.block(b * tokens, h * head_dim_, tokens, head_dim_).noalias() =
                    scores * v;
                probs_[static_cast<size_t>(b) * heads_ + h] = std::move(scores);
            }
        }
        return proj_.forward(attn_out);
    }

    Mat<S> backward(const Mat<S>& dy) {
        Mat<S> d_attn = proj_.backward(dy);
        Mat<S> d_qkv = Mat<S>::Zero(qkv_out_.rows(), qkv_out_.cols());
        const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(head_dim_)));

        for (int b = 0; b < batch_; ++b) {
            for (int h = 0; h < heads_; ++h) {
                const auto q = qkv_out_.block(b * tokens_, h * head_dim_, tokens_, head_dim_);
                const auto k =
                    qkv_out_.block(b * tokens_, embed_ + h * head_dim_, tokens_, head_dim_);
                const auto v =
                    qkv_out_.block(b * tokens_, 2 * embed_ + h * head_dim_, tokens_, head_dim_);
                const Mat<S>& p = probs_[static_cast<size_t>(b) * heads_ + h];
                const auto d_out = d_attn.block(b * tokens_, h * head_dim_, tokens_, head_dim_);

                Mat<S> dp = d_out * v.transpose();
                // softmax backward: ds = p .* (dp - rowsum(dp .* p))
                Eigen::Matrix<S, Eigen::Dynamic, 1> row_dot =
                    (dp.array() * p.array()).rowwise().sum();
                Mat<S> ds = (p.array() * (dp.array().colwise() - row_dot.array())).matrix();
                ds *= scale;

                d_qkv.block(b * tokens_, h * head_dim_, tokens_, head_dim_).noalias() = ds * k;
                d_qkv.block(b * tokens_, embed_ + h * head_dim_, tokens_, head_dim_).noalias() =
                    ds.transpose() * q;
                d_qkv.block(b * tokens_, 2 * embed_ + h * head_dim_, tokens_, head_dim_)
                    .noalias() = p.transpose() * d_out;
            }
        }
        return qkv_.backward(d_qkv);
    }

    void collect(ParamRefs<S>& out) {
        qkv_.collect(out);
        proj_.collect(out);
    }

  private:
    static void softmax_rows_inplace(Mat<S>& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            auto row = m.row(r);
            const S mx = row.maxCoeff();
            row = (row.array() - mx).exp();
            row /= row.sum();
        }
    }

    int embed_ = 0;
    int heads_ = 0;
    int head_dim_ = 0;
    int batch_ = 0;
    int tokens_ = 0;
    Dense<S> qkv_;
    Dense<S> proj_;
    Mat<S> qkv_out_;
    std::vector<Mat<S>> probs_;
};

/// Pre-norm encoder block: norms precede attention and the GELU MLP,
/// dropout follows each sublayer before the residual add.
template <typename S>
class EncoderLayer {
  public:
    explicit EncoderLayer(double dropout) : drop1_(dropout), drop2_(dropout) {}

    void init(const std::string& name, int embed_dim, int n_heads, int mlp_hidden,
              RngStream& rng) {
        ln1_.init(name + ".ln1", embed_dim);
        attn_.init(name + ".attn", embed_dim, n_heads, rng);
        ln2_.init(name + ".ln2", embed_dim);
        fc1_.init(name + ".fc1", embed_dim, mlp_hidden, rng);
        fc2_.init(name + ".fc2", mlp_hidden, embed_dim, rng);
    }

    Mat<S> forward(const Mat<S>& x, int batch, int tokens, RngStream* rng) {
        Mat<S> h = x + drop1_.forward(attn_.forward(ln1_.forward(x), batch, tokens), rng);
        Mat<S> m = drop2_.forward(fc2_.forward(gelu_.forward(fc1_.forward(ln2_.forward(h)))), rng);
        return h + m;
    }

    Mat<S> backward(const Mat<S>& dy) {
        Mat<S> dh =
            dy + ln2_.backward(fc1_.backward(gelu_.backward(fc2_.backward(drop2_.backward(dy)))));
        return dh + ln1_.backward(attn_.backward(drop1_.backward(dh)));
    }

    void collect(ParamRefs<S>& out) {
        ln1_.collect(out);
        attn_.collect(out);
        ln2_.collect(out);
        fc1_.collect(out);
        fc2_.collect(out);
    }

  private:
    LayerNorm<S> ln1_;
    MultiHeadAttention<S> attn_;
    LayerNorm<S> ln2_;
    Dense<S> fc1_;
    Gelu<S> gelu_;
    Dense<S> fc2_;
    Dropout<S> drop1_;
    Dropout<S> drop2_;
};

} // namespace a2gan::nn
