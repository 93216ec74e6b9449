#pragma once

// Outlier detectors trained by minimizing a per-sample self-supervised loss J.
// Both models score a sample by its Eval-mode loss, so score and loss rank
// identically.

#include <memory>
#include <string>
#include <vector>

#include "entropystop/dataset.hpp"
#include "entropystop/nn.hpp"

namespace entropystop {

class Model {
public:
    virtual ~Model() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t input_dim() const = 0;

    // J(x_i; Θ) for every row, all >= 0. Train mode needs `rng` if the model
    // has dropout.
    virtual std::vector<double> per_sample_loss(const Matrix& x, ForwardMode mode,
                                                RngStream* rng = nullptr) const = 0;

    // Mean J over `batch`; writes dJ/dΘ into `grad`.
    virtual double loss_and_gradient(const Matrix& batch, ForwardMode mode, RngStream* rng,
                                     std::vector<double>& grad) const = 0;

    virtual std::span<double> mutable_params() = 0;
    virtual std::span<const double> params() const = 0;
    virtual ParamSnapshot snapshot() const = 0;
    virtual void restore(const ParamSnapshot& s) = 0;
    virtual std::unique_ptr<Model> clone() const = 0;

    std::vector<double> score(const Matrix& x) const { return per_sample_loss(x, ForwardMode::Eval); }

    std::size_t num_params() const { return params().size(); }
};

namespace detail {

inline void check_cols(const Matrix& x, std::size_t d, const char* who) {
    if (x.cols() != d) {
        throw ShapeError(std::string(who) + ": input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(d));
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Autoencoder: J(x) = (1/d) ||x - decode(encode(x))||²

struct AutoencoderConfig {
    Activation activation = Activation::Relu;
    double dropout = 0.2;
    std::size_t h_dim = 64;
    std::size_t layers = 2;  // encoder depth; the decoder mirrors it
};

// Encoder widths d -> h_dim -> h_dim/2 -> ... -> bottleneck, where the
// bottleneck is max(1, d/2) for two layers and halves for every extra layer.
inline std::vector<std::size_t> autoencoder_widths(std::size_t d, const AutoencoderConfig& cfg) {
    if (d < 1) throw InvalidInput("autoencoder: input dim must be >= 1");
    if (cfg.layers < 1) throw InvalidInput("autoencoder: layers must be >= 1");
    if (cfg.h_dim < 1) throw InvalidInput("autoencoder: h_dim must be >= 1");
    std::size_t bottleneck = d / 2;
    for (std::size_t l = 2; l < cfg.layers; ++l) bottleneck /= 2;
    bottleneck = std::max<std::size_t>(1, bottleneck);

    std::vector<std::size_t> enc{d};
    std::size_t width = cfg.h_dim;
    for (std::size_t l = 0; l + 1 < cfg.layers; ++l) {
        enc.push_back(std::max(width, bottleneck));
        width = std::max<std::size_t>(1, width / 2);
    }
    enc.push_back(bottleneck);
    std::vector<std::size_t> widths = enc;
    for (std::size_t i = enc.size() - 1; i-- > 0;) widths.push_back(enc[i]);
    return widths;
}

class AutoencoderModel final : public Model {
public:
    // Explicit layer widths, e.g. {8, 64, 8}; first and last must agree.
    AutoencoderModel(const std::vector<std::size_t>& widths, Activation act, double dropout, RngStream& init_rng)
        : net_(make_layers(widths, act), dropout, init_rng) {}

    AutoencoderModel(std::size_t d, const AutoencoderConfig& cfg, RngStream& init_rng)
        : AutoencoderModel(autoencoder_widths(d, cfg), cfg.activation, cfg.dropout, init_rng) {}

    std::string kind() const override { return "ae"; }
    std::size_t input_dim() const override { return net_.input_dim(); }

    std::vector<double> per_sample_loss(const Matrix& x, ForwardMode mode, RngStream* rng = nullptr) const override {
        detail::check_cols(x, input_dim(), "ae_per_sample_loss");
        const Matrix recon = net_.forward(x, mode, rng);
        const double inv_d = 1.0 / static_cast<double>(x.cols());
        std::vector<double> out(x.rows(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j) {
                const double diff = x(i, j) - recon(i, j);
                s += diff * diff;
            }
            out[i] = s * inv_d;
        }
        return out;
    }

    double loss_and_gradient(const Matrix& batch, ForwardMode mode, RngStream* rng,
                             std::vector<double>& grad) const override {
        detail::check_cols(batch, input_dim(), "ae_loss_and_gradient");
        Mlp::Cache cache;
        const Matrix recon = net_.forward(batch, mode, rng, &cache);
        const double scale = 1.0 / static_cast<double>(batch.rows() * batch.cols());
        Matrix upstream(recon.rows(), recon.cols());
        double loss = 0.0;
        for (std::size_t i = 0; i < recon.size(); ++i) {
            const double diff = recon.data()[i] - batch.data()[i];
            loss += diff * diff * scale;
            upstream.data()[i] = 2.0 * diff * scale;
        }
        grad = net_.backward(cache, upstream);
        return loss;
    }

    std::span<double> mutable_params() override { return net_.mutable_params(); }
    std::span<const double> params() const override { return net_.params(); }
    ParamSnapshot snapshot() const override { return net_.snapshot(); }
    void restore(const ParamSnapshot& s) override { net_.restore(s); }
    std::unique_ptr<Model> clone() const override { return std::make_unique<AutoencoderModel>(*this); }

    Mlp& network() { return net_; }
    const Mlp& network() const { return net_; }

private:
    static std::vector<LayerSpec> make_layers(const std::vector<std::size_t>& widths, Activation act) {
        if (widths.size() < 2) throw InvalidInput("autoencoder needs at least two widths");
        if (widths.front() != widths.back()) throw ShapeError("autoencoder: output dim must equal input dim");
        std::vector<LayerSpec> layers;
        for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
            const bool last = i + 2 == widths.size();
            layers.push_back({widths[i], widths[i + 1], last ? Activation::Identity : act, 0.01, true});
        }
        return layers;
    }

    Mlp net_;
};

// ---------------------------------------------------------------------------
// One-class hypersphere model: J(x) = ||φ(x) - c||², bias-free leaky-relu MLP,
// center c fixed after init_center().

struct SvddConfig {
    std::vector<std::size_t> hidden{32};
    std::size_t rep_dim = 16;
    double relu_slope = 0.1;
    double center_floor = 0.1;
};

class DeepSvddLiteModel final : public Model {
public:
    DeepSvddLiteModel(std::size_t d, const SvddConfig& cfg, RngStream& init_rng)
        : net_(make_layers(d, cfg), 0.0, init_rng), center_(cfg.rep_dim, 0.0), floor_(cfg.center_floor) {}

    std::string kind() const override { return "svdd"; }
    std::size_t input_dim() const override { return net_.input_dim(); }

    const std::vector<double>& center() const { return center_; }
    void set_center(std::vector<double> c) {
        if (c.size() != net_.output_dim()) throw ShapeError("svdd: center dimension mismatch");
        center_ = std::move(c);
    }

    // Mean embedding under the current weights; coordinates with |c_k| below the
    // floor are pushed to ±floor (sign preserved, zero goes positive).
    const std::vector<double>& init_center(const Matrix& x) {
        if (x.rows() == 0) throw InvalidInput("svdd_init_center: empty dataset");
        detail::check_cols(x, input_dim(), "svdd_init_center");
        const Matrix phi = net_.forward(x, ForwardMode::Eval);
        std::vector<double> c(phi.cols(), 0.0);
        for (std::size_t i = 0; i < phi.rows(); ++i)
            for (std::size_t k = 0; k < phi.cols(); ++k) c[k] += phi(i, k);
        for (auto& v : c) {
            v /= static_cast<double>(phi.rows());
            if (std::abs(v) < floor_) v = v < 0.0 ? -floor_ : floor_;
        }
        center_ = std::move(c);
        return center_;
    }

    Matrix embed(const Matrix& x) const { return net_.forward(x, ForwardMode::Eval); }

    std::vector<double> per_sample_loss(const Matrix& x, ForwardMode mode, RngStream* rng = nullptr) const override {
        detail::check_cols(x, input_dim(), "svdd_per_sample_loss");
        const Matrix phi = net_.forward(x, mode, rng);
        std::vector<double> out(x.rows(), 0.0);
        for (std::size_t i = 0; i < phi.rows(); ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < phi.cols(); ++k) {
                const double diff = phi(i, k) - center_[k];
                s += diff * diff;
            }
            out[i] = s;
        }
        return out;
    }

    double loss_and_gradient(const Matrix& batch, ForwardMode mode, RngStream* rng,
                             std::vector<double>& grad) const override {
        detail::check_cols(batch, input_dim(), "svdd_loss_and_gradient");
        Mlp::Cache cache;
        const Matrix phi = net_.forward(batch, mode, rng, &cache);
        const double inv_n = 1.0 / static_cast<double>(batch.rows());
        Matrix upstream(phi.rows(), phi.cols());
        double loss = 0.0;
        for (std::size_t i = 0; i < phi.rows(); ++i) {
            for (std::size_t k = 0; k < phi.cols(); ++k) {
                const double diff = phi(i, k) - center_[k];
                loss += diff * diff * inv_n;
                upstream(i, k) = 2.0 * diff * inv_n;
            }
        }
        grad = net_.backward(cache, upstream);
        return loss;
    }

    std::span<double> mutable_params() override { return net_.mutable_params(); }
    std::span<const double> params() const override { return net_.params(); }
    ParamSnapshot snapshot() const override { return net_.snapshot(); }
    void restore(const ParamSnapshot& s) override { net_.restore(s); }
    std::unique_ptr<Model> clone() const override { return std::make_unique<DeepSvddLiteModel>(*this); }

    Mlp& network() { return net_; }
    const Mlp& network() const { return net_; }

private:
    static std::vector<LayerSpec> make_layers(std::size_t d, const SvddConfig& cfg) {
        if (d < 1 || cfg.rep_dim < 1) throw InvalidInput("svdd: dims must be >= 1");
        std::vector<LayerSpec> layers;
        std::size_t in = d;
        for (std::size_t h : cfg.hidden) {
            layers.push_back({in, h, Activation::LeakyRelu, cfg.relu_slope, false});
            in = h;
        }
        layers.push_back({in, cfg.rep_dim, Activation::Identity, cfg.relu_slope, false});
        return layers;
    }

    Mlp net_;
    std::vector<double> center_;
    double floor_;
};

}  // namespace entropystop
