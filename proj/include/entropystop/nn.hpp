#pragma once

// Multilayer perceptron with hand-written backpropagation, inverted dropout,
// SGD/Adam, flat parameter snapshots and a central-difference gradient oracle.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entropystop/errors.hpp"
#include "entropystop/matrix.hpp"
#include "entropystop/rng.hpp"

namespace entropystop {

enum class Activation { Relu, LeakyRelu, Sigmoid, Identity };

enum class ForwardMode { Train, Eval };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "leaky_relu" || s == "leakyrelu") return Activation::LeakyRelu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity" || s == "linear") return Activation::Identity;
    throw InvalidInput("unknown activation '" + s + "'");
}

struct LayerSpec {
    std::size_t in_dim = 1;
    std::size_t out_dim = 1;
    Activation activation = Activation::Identity;
    double slope = 0.01;  // LeakyRelu only
    bool use_bias = true;
};

inline void validate(const LayerSpec& s) {
    if (s.in_dim < 1 || s.out_dim < 1) throw InvalidInput("layer dims must be >= 1");
    if (s.activation == Activation::LeakyRelu && !(s.slope > 0.0 && s.slope < 1.0)) {
        throw InvalidInput("leaky relu slope must be in (0, 1)");
    }
}

// All weights and biases as one flat array, plus the (rows, cols) of every
// tensor in storage order. Weight tensors are in_dim x out_dim, biases 1 x out_dim.
struct ParamSnapshot {
    std::vector<double> values;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;

    friend bool operator==(const ParamSnapshot&, const ParamSnapshot&) = default;
};

namespace detail {

inline double activate(Activation a, double z, double slope) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::LeakyRelu: return z > 0.0 ? z : slope * z;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative expressed through the pre-activation z and the output h.
inline double activate_grad(Activation a, double z, double h, double slope) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::LeakyRelu: return z > 0.0 ? 1.0 : slope;
        case Activation::Sigmoid: return h * (1.0 - h);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace detail

class Mlp {
public:
    // Activations recorded by forward() for a later backward().
    struct Cache {
        std::vector<Matrix> inputs;  // input of each layer (after dropout of the previous one)
        std::vector<Matrix> pre;     // z of each layer
        std::vector<Matrix> post;    // activation of each layer, before dropout
        std::vector<Matrix> masks;   // scaled keep-masks for hidden layers (empty if no dropout)
        std::uint64_t generation = ~std::uint64_t{0};
    };

    Mlp() = default;

    // `dropout` is the drop probability applied after every hidden layer in
    // Train mode. Weights ~ U(±sqrt(6/(fan_in+fan_out))), biases zero.
    Mlp(std::vector<LayerSpec> layers, double dropout, RngStream& init_rng)
        : layers_(std::move(layers)), dropout_(dropout) {
        if (layers_.empty()) throw InvalidInput("Mlp needs at least one layer");
        if (!(dropout_ >= 0.0 && dropout_ <= 1.0)) throw InvalidInput("dropout must be in [0, 1]");
        std::size_t offset = 0;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            validate(layers_[l]);
            if (l > 0 && layers_[l].in_dim != layers_[l - 1].out_dim) {
                throw ShapeError("Mlp: layer " + std::to_string(l) + " in_dim does not match previous out_dim");
            }
            weight_offset_.push_back(offset);
            offset += layers_[l].in_dim * layers_[l].out_dim;
            bias_offset_.push_back(offset);
            if (layers_[l].use_bias) offset += layers_[l].out_dim;
        }
        params_.assign(offset, 0.0);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& s = layers_[l];
            const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
            const std::size_t count = s.in_dim * s.out_dim;
            for (std::size_t i = 0; i < count; ++i) params_[weight_offset_[l] + i] = init_rng.uniform(-bound, bound);
        }
    }

    const std::vector<LayerSpec>& layers() const { return layers_; }
    std::size_t input_dim() const { return layers_.front().in_dim; }
    std::size_t output_dim() const { return layers_.back().out_dim; }
    double dropout() const { return dropout_; }
    void set_dropout(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("dropout must be in [0, 1]");
        dropout_ = p;
    }

    std::size_t num_params() const { return params_.size(); }
    std::span<const double> params() const { return params_; }

    // Mutable access invalidates any outstanding forward cache.
    std::span<double> mutable_params() {
        ++generation_;
        return params_;
    }

    std::uint64_t generation() const { return generation_; }

    ParamSnapshot snapshot() const {
        ParamSnapshot s{params_, {}};
        for (const auto& l : layers_) {
            s.shapes.emplace_back(l.in_dim, l.out_dim);
            if (l.use_bias) s.shapes.emplace_back(1, l.out_dim);
        }
        return s;
    }

    void restore(const ParamSnapshot& s) {
        if (s.values.size() != params_.size() || s.shapes != snapshot_shapes()) {
            throw ShapeError("restore: snapshot does not match network layout");
        }
        params_ = s.values;
        ++generation_;
    }

    // Layer l's weight W (in x out, row-major) and bias.
    std::span<const double> weights(std::size_t l) const {
        return {params_.data() + weight_offset_[l], layers_[l].in_dim * layers_[l].out_dim};
    }
    std::span<double> mutable_weights(std::size_t l) {
        ++generation_;
        return {params_.data() + weight_offset_[l], layers_[l].in_dim * layers_[l].out_dim};
    }
    std::span<double> mutable_bias(std::size_t l) {
        ++generation_;
        if (!layers_[l].use_bias) return {};
        return {params_.data() + bias_offset_[l], layers_[l].out_dim};
    }

    // Train mode needs `rng` when dropout > 0. Eval mode never draws.
    Matrix forward(const Matrix& x, ForwardMode mode, RngStream* rng = nullptr, Cache* cache = nullptr) const {
        if (x.cols() != input_dim()) {
            throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                             std::to_string(input_dim()));
        }
        const bool drop = mode == ForwardMode::Train && dropout_ > 0.0;
        if (drop && rng == nullptr) throw ContractViolation("forward: Train mode with dropout needs an rng");
        if (cache) {
            *cache = Cache{};
            cache->generation = generation_;
        }
        Matrix a = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& s = layers_[l];
            Matrix z = affine(a, l);
            Matrix h(z.rows(), z.cols());
            {
                auto zd = z.data();
                auto hd = h.data();
                for (std::size_t i = 0; i < zd.size(); ++i) hd[i] = detail::activate(s.activation, zd[i], s.slope);
            }
            if (cache) {
                cache->inputs.push_back(std::move(a));
                cache->pre.push_back(std::move(z));
                cache->post.push_back(h);
            }
            const bool hidden = l + 1 < layers_.size();
            if (hidden && drop) {
                const double keep = 1.0 - dropout_;
                Matrix mask(h.rows(), h.cols());
                auto md = mask.data();
                auto hd = h.data();
                for (std::size_t i = 0; i < md.size(); ++i) {
                    md[i] = (keep > 0.0 && rng->uniform() < keep) ? 1.0 / keep : 0.0;
                    hd[i] *= md[i];
                }
                if (cache) cache->masks.push_back(std::move(mask));
            }
            a = std::move(h);
        }
        return a;
    }

    // Gradient of a scalar loss w.r.t. all parameters, given dLoss/dOutput.
    // If `input_grad` is non-null it receives dLoss/dInput.
    std::vector<double> backward(const Cache& cache, const Matrix& upstream, Matrix* input_grad = nullptr) const {
        if (cache.generation != generation_ || cache.pre.size() != layers_.size()) {
            throw ContractViolation("backward: activations are stale or from another network");
        }
        const Matrix& out = cache.post.back();
        if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
            throw ShapeError("backward: upstream gradient " + shape_str(upstream) + " vs output " + shape_str(out));
        }
        std::vector<double> grad(params_.size(), 0.0);
        Matrix delta = upstream;
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& s = layers_[l];
            const Matrix& z = cache.pre[l];
            const Matrix& h = cache.post[l];
            {
                auto dd = delta.data();
                auto zd = z.data();
                auto hd = h.data();
                for (std::size_t i = 0; i < dd.size(); ++i)
                    dd[i] *= detail::activate_grad(s.activation, zd[i], hd[i], s.slope);
            }
            const Matrix gw = matmul_tn(cache.inputs[l], delta);
            std::copy(gw.data().begin(), gw.data().end(), grad.begin() + static_cast<std::ptrdiff_t>(weight_offset_[l]));
            if (s.use_bias) {
                for (std::size_t i = 0; i < delta.rows(); ++i)
                    for (std::size_t j = 0; j < delta.cols(); ++j) grad[bias_offset_[l] + j] += delta(i, j);
            }
            if (l > 0 || input_grad) {
                // delta · Wᵀ
                const double* w = params_.data() + weight_offset_[l];
                Matrix next(delta.rows(), s.in_dim);
                for (std::size_t i = 0; i < delta.rows(); ++i) {
                    const double* drow = delta.row(i).data();
                    double* nrow = next.row(i).data();
                    for (std::size_t k = 0; k < s.in_dim; ++k) {
                        const double* wrow = w + k * s.out_dim;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < s.out_dim; ++j) acc += drow[j] * wrow[j];
                        nrow[k] = acc;
                    }
                }
                if (l > 0 && !cache.masks.empty()) next = hadamard(next, cache.masks[l - 1]);
                delta = std::move(next);
            }
        }
        if (input_grad) *input_grad = std::move(delta);
        return grad;
    }

    // Smallest |z| over every pre-activation of a nonlinear piecewise layer,
    // used to keep finite differences away from relu kinks.
    double min_abs_kink_distance(const Matrix& x) const {
        Cache c;
        forward(x, ForwardMode::Eval, nullptr, &c);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto a = layers_[l].activation;
            if (a != Activation::Relu && a != Activation::LeakyRelu) continue;
            for (double v : c.pre[l].data()) m = std::min(m, std::abs(v));
        }
        return m;
    }

private:
    Matrix affine(const Matrix& a, std::size_t l) const {
        const auto& s = layers_[l];
        const double* w = params_.data() + weight_offset_[l];
        const double* b = s.use_bias ? params_.data() + bias_offset_[l] : nullptr;
        Matrix z(a.rows(), s.out_dim);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double* zrow = z.row(i).data();
            if (b) std::copy(b, b + s.out_dim, zrow);
            const double* arow = a.row(i).data();
            for (std::size_t k = 0; k < s.in_dim; ++k) {
                const double aik = arow[k];
                if (aik == 0.0) continue;
                const double* wrow = w + k * s.out_dim;
                for (std::size_t j = 0; j < s.out_dim; ++j) zrow[j] += aik * wrow[j];
            }
        }
        return z;
    }

    std::vector<std::pair<std::size_t, std::size_t>> snapshot_shapes() const { return snapshot().shapes; }

    std::vector<LayerSpec> layers_;
    double dropout_ = 0.0;
    std::vector<double> params_;
    std::vector<std::size_t> weight_offset_;
    std::vector<std::size_t> bias_offset_;
    std::uint64_t generation_ = 0;
};

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

inline void validate(const OptimizerConfig& c) {
    if (!(c.lr >= 0.0)) throw InvalidInput("learning rate must be >= 0");
    if (!(c.weight_decay >= 0.0)) throw InvalidInput("weight decay must be >= 0");
    if (c.kind == OptimizerKind::Adam && !(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
        throw InvalidInput("adam betas must be in [0, 1)");
    }
}

// Weight decay is applied as an L2 term folded into the gradient, g + wd*θ,
// for both optimizers.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) { validate(cfg_); }

    const OptimizerConfig& config() const { return cfg_; }
    std::size_t steps() const { return t_; }

    void step(std::span<double> params, std::span<const double> grad) {
        if (params.size() != grad.size()) throw ShapeError("optimizer: gradient size does not match parameters");
        for (double g : grad)
            if (!std::isfinite(g)) throw NumericalError("optimizer: non-finite gradient");
        ++t_;
        if (cfg_.kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < params.size(); ++i)
                params[i] -= cfg_.lr * (grad[i] + cfg_.weight_decay * params[i]);
            return;
        }
        if (m_.size() != params.size()) {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
        }
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i] + cfg_.weight_decay * params[i];
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }

private:
    OptimizerConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Finite-difference oracle

// Loss on the network output: returns (loss, dLoss/dOutput).
using OutputLoss = std::function<std::pair<double, Matrix>(const Matrix&)>;

// Max over parameters of |analytic - numeric| / max(1e-8, |analytic| + |numeric|),
// with central differences of step h, evaluated in Eval mode.
inline double grad_check(Mlp& net, const OutputLoss& loss_fn, const Matrix& x, double h = 1e-5) {
    if (!(h > 0.0)) throw InvalidInput("grad_check: h must be > 0");
    Mlp::Cache cache;
    const Matrix out = net.forward(x, ForwardMode::Eval, nullptr, &cache);
    const auto analytic = net.backward(cache, loss_fn(out).second);

    const ParamSnapshot saved = net.snapshot();
    double worst = 0.0;
    for (std::size_t i = 0; i < net.num_params(); ++i) {
        auto p = net.mutable_params();
        const double orig = p[i];
        p[i] = orig + h;
        const double up = loss_fn(net.forward(x, ForwardMode::Eval)).first;
        p = net.mutable_params();
        p[i] = orig - h;
        const double down = loss_fn(net.forward(x, ForwardMode::Eval)).first;
        p = net.mutable_params();
        p[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    net.restore(saved);
    return worst;
}

// Mean squared error against a target, averaged over rows and columns.
inline OutputLoss mse_loss(const Matrix& target) {
    return [target](const Matrix& out) {
        if (out.rows() != target.rows() || out.cols() != target.cols()) throw ShapeError("mse_loss: shape mismatch");
        const double scale = 1.0 / static_cast<double>(out.size());
        Matrix g(out.rows(), out.cols());
        double loss = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double diff = out.data()[i] - target.data()[i];
            loss += diff * diff * scale;
            g.data()[i] = 2.0 * diff * scale;
        }
        return std::pair{loss, g};
    };
}

}  // namespace entropystop
