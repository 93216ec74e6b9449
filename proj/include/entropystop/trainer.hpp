#pragma once

// Mini-batch training loop with three ways of choosing the returned parameters:
//   Naive    end-of-training parameters
//   Entropy  parameters at the iteration selected by EntropyStopper (label-free)
//   Optimal  parameters at the iteration with the highest AUC (needs labels)
//
// One iteration is one optimizer step on one batch. Batches are drawn by
// shuffling the rows once per epoch and walking the permutation. Training,
// dropout and evaluation-set sampling use independent streams derived from the
// seed, so the three modes follow the same trajectory and differ only in where
// they stop and which snapshot they return.

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "entropystop/dataset.hpp"
#include "entropystop/entropy.hpp"
#include "entropystop/evalstats.hpp"
#include "entropystop/models.hpp"
#include "entropystop/stopper.hpp"

namespace entropystop {

enum class RunMode { Naive, Entropy, Optimal };

inline std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Naive: return "naive";
        case RunMode::Entropy: return "entropy";
        case RunMode::Optimal: return "optimal";
    }
    return "?";
}

inline RunMode parse_run_mode(const std::string& s) {
    if (s == "naive") return RunMode::Naive;
    if (s == "entropy") return RunMode::Entropy;
    if (s == "optimal") return RunMode::Optimal;
    throw InvalidInput("unknown mode '" + s + "' (expected naive, entropy or optimal)");
}

struct TrainConfig {
    std::size_t batch_size = 256;
    std::size_t epochs = 250;
    OptimizerConfig optimizer{OptimizerKind::Adam, 1e-3};
    std::size_t n_eval = EvalSet::kDefaultSize;
    std::uint64_t seed = 0;
};

inline std::size_t iterations_per_epoch(std::size_t n, std::size_t batch_size) {
    return (n + batch_size - 1) / batch_size;
}

struct TrainOptions {
    // Record the entropy trace even when the stopper is not driving the run.
    bool record_entropy = false;
    // Per-iteration AUC on the full dataset (label-dependent diagnostic).
    bool record_auc = false;
    // Called after initialization (iter 0) and after every iteration.
    std::function<void(std::size_t iter, const Model&)> observer;
};

struct RunResult {
    RunMode mode = RunMode::Naive;
    std::vector<double> scores;
    std::optional<double> auc;
    std::size_t selected_iter = 0;
    std::size_t iterations_run = 0;
    std::size_t total_iters = 0;  // planned T = epochs * ceil(n / batch)
    std::vector<double> entropy_trace;  // e_0..e_j when recorded
    std::vector<double> train_loss;     // one per executed iteration
    std::vector<double> auc_trace;      // AUC_0..AUC_j when recorded
    double wall_time_s = 0.0;
};

// NumericalError raised mid-run, carrying everything recorded up to the failure.
struct TrainingAborted : NumericalError {
    TrainingAborted(const std::string& what, RunResult partial_result)
        : NumericalError(what), partial(std::move(partial_result)) {}
    RunResult partial;
};

inline std::vector<TraceRow> trace_rows(const RunResult& r) {
    std::vector<TraceRow> rows(r.iterations_run + 1);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        rows[j].iter = j;
        if (j < r.entropy_trace.size()) rows[j].entropy = r.entropy_trace[j];
        if (j > 0 && j - 1 < r.train_loss.size()) rows[j].train_loss = r.train_loss[j - 1];
        if (j < r.auc_trace.size()) rows[j].auc = r.auc_trace[j];
    }
    return rows;
}

inline RunResult train_with_stopper(Model& model, const Dataset& ds, const TrainConfig& cfg,
                                    const StopperConfig& stopper_cfg, RunMode mode,
                                    const TrainOptions& opts = {}) {
    validate(ds, 1);
    if (ds.d() != model.input_dim()) throw ShapeError("train: dataset dim does not match model input dim");
    if (cfg.batch_size < 1) throw InvalidInput("train: batch size must be >= 1");
    validate(stopper_cfg);
    const bool need_auc = opts.record_auc || mode == RunMode::Optimal;
    if (need_auc) {
        if (!ds.labels) throw InvalidInput("train: mode '" + to_string(mode) + "' needs labels");
        const std::size_t m = ds.outlier_count();
        if (m == 0 || m == ds.n()) throw InvalidInput("train: AUC needs both classes in the labels");
    }
    const bool need_entropy = opts.record_entropy || mode == RunMode::Entropy;

    RunResult result;
    result.mode = mode;
    result.total_iters = cfg.epochs * iterations_per_epoch(ds.n(), cfg.batch_size);

    Optimizer optimizer(cfg.optimizer);
    RngStream batch_rng(derive_seed(cfg.seed, "batch"));
    RngStream dropout_rng(derive_seed(cfg.seed, "dropout"));
    std::optional<EvalSet> eval_set;
    if (need_entropy) eval_set.emplace(ds, cfg.n_eval, derive_seed(cfg.seed, "eval"));

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    auto fail = [&](const std::string& what) -> TrainingAborted {
        result.wall_time_s = elapsed();
        return TrainingAborted(what, result);
    };

    std::optional<EntropyStopper> stopper;
    if (need_entropy) {
        const double e0 = eval_entropy(model, *eval_set);
        if (!std::isfinite(e0)) throw fail("train: initial entropy is not finite");
        result.entropy_trace.push_back(e0);
        if (mode == RunMode::Entropy) stopper.emplace(e0, model.snapshot(), stopper_cfg);
    }

    std::size_t best_auc_iter = 0;
    std::optional<ParamSnapshot> best_auc_snapshot;
    auto record_auc = [&](std::size_t iter) {
        const double a = auc(model.score(ds.x), *ds.labels);
        result.auc_trace.push_back(a);
        if (mode == RunMode::Optimal && (iter == 0 || a > result.auc_trace[best_auc_iter])) {
            best_auc_iter = iter;
            best_auc_snapshot = model.snapshot();
        }
    };
    if (need_auc) record_auc(0);
    if (opts.observer) opts.observer(0, model);

    std::vector<std::size_t> perm(ds.n());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::size_t pos = 0;
    std::vector<double> grad;
    for (std::size_t j = 1; j <= result.total_iters; ++j) {
        if (pos == 0) batch_rng.shuffle(perm.begin(), perm.end());
        const std::size_t len = std::min(cfg.batch_size, ds.n() - pos);
        const Matrix batch = select_rows(ds.x, std::span<const std::size_t>(perm.data() + pos, len));
        pos = pos + len == ds.n() ? 0 : pos + len;

        const double loss = model.loss_and_gradient(batch, ForwardMode::Train, &dropout_rng, grad);
        if (!std::isfinite(loss)) throw fail("train: non-finite training loss at iteration " + std::to_string(j));
        try {
            optimizer.step(model.mutable_params(), grad);
        } catch (const NumericalError& e) {
            throw fail(std::string(e.what()) + " at iteration " + std::to_string(j));
        }
        result.train_loss.push_back(loss);
        result.iterations_run = j;

        StepDecision decision = StepDecision::Continue;
        if (need_entropy) {
            double e = 0.0;
            try {
                e = eval_entropy(model, *eval_set);
            } catch (const NumericalError& err) {
                throw fail(std::string(err.what()) + " at iteration " + std::to_string(j));
            }
            if (!std::isfinite(e)) throw fail("train: non-finite entropy at iteration " + std::to_string(j));
            result.entropy_trace.push_back(e);
            if (stopper) decision = stopper->step(e, [&] { return model.snapshot(); });
        }
        if (need_auc) record_auc(j);
        if (opts.observer) opts.observer(j, model);
        if (decision == StepDecision::Stop) break;
    }

    switch (mode) {
        case RunMode::Naive:
            result.selected_iter = result.iterations_run;
            break;
        case RunMode::Entropy:
            model.restore(stopper->best_snapshot());
            result.selected_iter = stopper->best_iter();
            break;
        case RunMode::Optimal:
            model.restore(*best_auc_snapshot);
            result.selected_iter = best_auc_iter;
            break;
    }
    result.wall_time_s = elapsed();

    result.scores = model.score(ds.x);
    for (double s : result.scores)
        if (!std::isfinite(s)) throw fail("train: non-finite final score");
    if (ds.labels) {
        const std::size_t m = ds.outlier_count();
        if (m > 0 && m < ds.n()) result.auc = auc(result.scores, *ds.labels);
    }
    return result;
}

// AUC of the current model's scores on the full dataset after every
// iteration of a Naive run; entry j is the AUC after j iterations.
inline std::vector<double> auc_trace(Model& model, const Dataset& ds, const TrainConfig& cfg) {
    if (!ds.labels) throw InvalidInput("auc_trace: dataset has no labels");
    TrainOptions opts;
    opts.record_auc = true;
    return train_with_stopper(model, ds, cfg, StopperConfig{}, RunMode::Naive, opts).auc_trace;
}

}  // namespace entropystop
