#pragma once

// EntropyStop: patience-based selection of the lowest entropy point that passes
// a downtrend test.
//
// Each new value e_j adds |e_j - e_{j-1}| to the accumulated variation G since
// the last accepted best. e_j becomes the new best when
//
//     e_j < e_min  and  (e_min - e_j) / G > r_down
//
// which resets G and patience and captures a parameter snapshot. Any other step
// increments patience; training stops when patience reaches k.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "entropystop/errors.hpp"
#include "entropystop/nn.hpp"

namespace entropystop {

struct StopperConfig {
    std::size_t patience = 100;  // k
    double r_down = 0.1;
};

inline void validate(const StopperConfig& c) {
    if (c.patience < 1) throw InvalidInput("stopper: patience k must be >= 1");
    if (!(c.r_down > 0.0 && c.r_down < 1.0)) throw InvalidInput("stopper: r_down must be in (0, 1)");
}

enum class StepDecision { Continue, NewBest, Stop };

class EntropyStopper {
public:
    using SnapshotProvider = std::function<ParamSnapshot()>;

    EntropyStopper(double e0, ParamSnapshot initial, StopperConfig cfg) : cfg_(cfg) {
        validate(cfg_);
        if (!std::isfinite(e0)) throw NumericalError("stopper: initial entropy is not finite");
        e_min_ = e0;
        last_e_ = e0;
        best_snapshot_ = std::move(initial);
    }

    // Replay form without snapshots.
    EntropyStopper(double e0, StopperConfig cfg) : EntropyStopper(e0, ParamSnapshot{}, cfg) {}

    StepDecision step(double e, const SnapshotProvider& snapshot = {}) {
        if (stopped_) throw ContractViolation("stopper: step() called after Stop");
        if (!std::isfinite(e)) throw NumericalError("stopper: entropy is not finite");
        ++iter_;
        accumulated_ += std::abs(e - last_e_);
        last_e_ = e;
        if (e < e_min_ && (e_min_ - e) / accumulated_ > cfg_.r_down) {
            e_min_ = e;
            accumulated_ = 0.0;
            patience_ = 0;
            best_iter_ = iter_;
            if (snapshot) best_snapshot_ = snapshot();
            return StepDecision::NewBest;
        }
        ++patience_;
        if (patience_ >= cfg_.patience) {
            stopped_ = true;
            return StepDecision::Stop;
        }
        return StepDecision::Continue;
    }

    // Status query without consuming a value.
    StepDecision status() const { return stopped_ ? StepDecision::Stop : StepDecision::Continue; }

    const StopperConfig& config() const { return cfg_; }
    double e_min() const { return e_min_; }
    double accumulated_variation() const { return accumulated_; }
    std::size_t patience() const { return patience_; }
    std::size_t best_iter() const { return best_iter_; }
    std::size_t iteration() const { return iter_; }
    bool stopped() const { return stopped_; }
    const ParamSnapshot& best_snapshot() const { return best_snapshot_; }

private:
    StopperConfig cfg_;
    double e_min_ = 0.0;
    double last_e_ = 0.0;
    double accumulated_ = 0.0;
    std::size_t patience_ = 0;
    std::size_t best_iter_ = 0;
    std::size_t iter_ = 0;
    bool stopped_ = false;
    ParamSnapshot best_snapshot_;
};

struct ReplayResult {
    std::size_t best_iter = 0;
    std::size_t steps = 0;  // values consumed after e_0
    bool stopped = false;
    std::vector<std::size_t> accepted;  // iterations that became NewBest
};

// Runs a recorded trace e_0..e_T through the state machine.
inline ReplayResult replay(std::span<const double> trace, const StopperConfig& cfg) {
    if (trace.empty()) throw InvalidInput("replay: empty trace");
    EntropyStopper s(trace[0], cfg);
    ReplayResult r;
    for (std::size_t j = 1; j < trace.size(); ++j) {
        const StepDecision d = s.step(trace[j]);
        ++r.steps;
        if (d == StepDecision::NewBest) r.accepted.push_back(j);
        if (d == StepDecision::Stop) {
            r.stopped = true;
            break;
        }
    }
    r.best_iter = s.best_iter();
    return r;
}

}  // namespace entropystop
