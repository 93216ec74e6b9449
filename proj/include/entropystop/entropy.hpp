#pragma once

// Loss entropy: the Shannon entropy (natural log) of per-sample losses
// normalized to a probability vector over a fixed evaluation set. A steep loss
// distribution (a few large losses, most small) has low entropy.

#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "entropystop/dataset.hpp"
#include "entropystop/models.hpp"

namespace entropystop {

struct LossDistribution {
    std::vector<double> p;
};

// p_i = J_i / ΣJ. All-zero losses give the uniform distribution.
inline LossDistribution normalize_losses(std::span<const double> losses) {
    if (losses.empty()) throw InvalidInput("normalize_losses: empty loss vector");
    double total = 0.0;
    for (double v : losses) {
        if (!std::isfinite(v)) throw NumericalError("normalize_losses: non-finite loss");
        if (v < 0.0) throw InvalidInput("normalize_losses: negative loss");
        total += v;
    }
    LossDistribution d{std::vector<double>(losses.size())};
    if (total <= 0.0) {
        std::fill(d.p.begin(), d.p.end(), 1.0 / static_cast<double>(losses.size()));
        return d;
    }
    for (std::size_t i = 0; i < losses.size(); ++i) d.p[i] = losses[i] / total;
    return d;
}

// -Σ p ln p with 0 ln 0 = 0. Lies in [0, ln N].
inline double loss_entropy(const LossDistribution& dist) {
    double h = 0.0;
    for (double p : dist.p)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

inline double loss_entropy(std::span<const double> losses) { return loss_entropy(normalize_losses(losses)); }

// Rows sampled once before training; never changes during a run.
class EvalSet {
public:
    static constexpr std::size_t kDefaultSize = 1024;

    EvalSet(const Dataset& ds, std::size_t n_eval, std::uint64_t seed) : seed_(seed) {
        const std::size_t m = std::min(std::max<std::size_t>(n_eval, 1), ds.n());
        RngStream rng(seed);
        indices_ = sample_indices(ds.n(), m, rng);
        rows_ = select_rows(ds.x, indices_);
    }

    const Matrix& rows() const { return rows_; }
    const std::vector<std::size_t>& indices() const { return indices_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t size() const { return rows_.rows(); }

private:
    std::uint64_t seed_;
    std::vector<std::size_t> indices_;
    Matrix rows_;
};

inline double eval_entropy(const Model& model, const Matrix& eval_rows) {
    const auto losses = model.per_sample_loss(eval_rows, ForwardMode::Eval);
    return loss_entropy(normalize_losses(losses));
}

inline double eval_entropy(const Model& model, const EvalSet& eval_set) { return eval_entropy(model, eval_set.rows()); }

// ---------------------------------------------------------------------------
// Label-dependent diagnostics

struct LossSplit {
    double inlier = 0.0;
    double outlier = 0.0;
};

namespace detail {

inline void require_both_classes(const Dataset& ds, const char* who) {
    if (!ds.labels) throw InvalidInput(std::string(who) + ": dataset has no labels");
    const std::size_t m = ds.outlier_count();
    if (m == 0 || m == ds.n()) throw InvalidInput(std::string(who) + ": both classes must be present");
}

}  // namespace detail

// Mean Eval-mode loss over inliers (label 0) and outliers (label 1).
inline LossSplit loss_split_diagnostic(std::span<const double> losses, std::span<const int> labels) {
    if (losses.size() != labels.size()) throw ShapeError("loss_split_diagnostic: length mismatch");
    double s[2] = {0.0, 0.0};
    std::size_t c[2] = {0, 0};
    for (std::size_t i = 0; i < losses.size(); ++i) {
        const int l = labels[i];
        if (l != 0 && l != 1) throw InvalidInput("loss_split_diagnostic: labels must be 0/1");
        s[l] += losses[i];
        ++c[l];
    }
    if (c[0] == 0 || c[1] == 0) throw InvalidInput("loss_split_diagnostic: both classes must be present");
    return {s[0] / static_cast<double>(c[0]), s[1] / static_cast<double>(c[1])};
}

inline LossSplit loss_split_diagnostic(const Model& model, const Dataset& ds) {
    detail::require_both_classes(ds, "loss_split_diagnostic");
    const auto losses = model.per_sample_loss(ds.x, ForwardMode::Eval);
    return loss_split_diagnostic(losses, *ds.labels);
}

struct GradientEffect {
    double inlier = 0.0;
    double outlier = 0.0;
};

// Given per-sample gradients g_i, effect_i = <g_i, ḡ> / ||g_i|| (0 when g_i = 0),
// then averaged per class.
inline GradientEffect gradient_effect(const std::vector<std::vector<double>>& grads, std::span<const int> labels) {
    if (grads.size() != labels.size()) throw ShapeError("gradient_effect: length mismatch");
    if (grads.empty()) throw InvalidInput("gradient_effect: no gradients");
    const std::size_t p = grads.front().size();
    std::vector<double> mean(p, 0.0);
    for (const auto& g : grads) {
        if (g.size() != p) throw ShapeError("gradient_effect: ragged gradients");
        for (std::size_t k = 0; k < p; ++k) mean[k] += g[k];
    }
    for (auto& v : mean) v /= static_cast<double>(grads.size());

    double s[2] = {0.0, 0.0};
    std::size_t c[2] = {0, 0};
    for (std::size_t i = 0; i < grads.size(); ++i) {
        double dot = 0.0;
        double norm2 = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
            dot += grads[i][k] * mean[k];
            norm2 += grads[i][k] * grads[i][k];
        }
        const double effect = norm2 > 0.0 ? dot / std::sqrt(norm2) : 0.0;
        const int l = labels[i];
        if (l != 0 && l != 1) throw InvalidInput("gradient_effect: labels must be 0/1");
        s[l] += effect;
        ++c[l];
    }
    if (c[0] == 0 || c[1] == 0) throw InvalidInput("gradient_effect: both classes must be present in the sample");
    return {s[0] / static_cast<double>(c[0]), s[1] / static_cast<double>(c[1])};
}

// Per-sample Eval-mode gradients on a capped random subset (stratification is
// not applied; the subset is redrawn until both classes appear or the whole
// dataset is used).
inline GradientEffect gradient_effect(const Model& model, const Dataset& ds, std::size_t sample_cap,
                                      std::uint64_t seed = 0) {
    detail::require_both_classes(ds, "gradient_effect");
    if (sample_cap > ds.n()) throw InvalidInput("gradient_effect: sample_cap exceeds dataset size");
    RngStream rng(seed);
    std::vector<std::size_t> idx = sample_indices(ds.n(), std::max<std::size_t>(sample_cap, 2), rng);
    std::vector<std::vector<double>> grads;
    std::vector<int> labels;
    grads.reserve(idx.size());
    for (std::size_t i : idx) {
        Matrix row(1, ds.d(), std::vector<double>(ds.x.row(i).begin(), ds.x.row(i).end()));
        std::vector<double> g;
        model.loss_and_gradient(row, ForwardMode::Eval, nullptr, g);
        grads.push_back(std::move(g));
        labels.push_back((*ds.labels)[i]);
    }
    return gradient_effect(grads, labels);
}

// ---------------------------------------------------------------------------
// Trace export

struct TraceRow {
    std::size_t iter = 0;
    std::optional<double> entropy;
    std::optional<double> train_loss;  // absent for iteration 0
    std::optional<double> auc;
    std::optional<double> loss_in;
    std::optional<double> loss_out;
};

inline void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
    bool labeled = false;
    for (const auto& r : rows) labeled = labeled || r.auc.has_value() || r.loss_in.has_value();
    out << "iter,entropy,train_loss";
    if (labeled) out << ",auc,L_in,L_out";
    out << '\n';
    auto opt = [&](const std::optional<double>& v) {
        out << ',';
        if (v) out << detail::format_double(*v);
    };
    for (const auto& r : rows) {
        out << r.iter;
        opt(r.entropy);
        opt(r.train_loss);
        if (labeled) {
            opt(r.auc);
            opt(r.loss_in);
            opt(r.loss_out);
        }
        out << '\n';
    }
}

}  // namespace entropystop
