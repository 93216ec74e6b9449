#include <gtest/gtest.h>

#include <cmath>

#include "entropystop/entropystop.hpp"

namespace es = entropystop;
using D = es::StepDecision;

namespace {

std::vector<D> run(const std::vector<double>& trace, es::StopperConfig cfg, std::size_t* best = nullptr) {
    es::EntropyStopper s(trace[0], cfg);
    std::vector<D> out;
    for (std::size_t j = 1; j < trace.size(); ++j) {
        out.push_back(s.step(trace[j]));
        if (out.back() == D::Stop) break;
    }
    if (best) *best = s.best_iter();
    return out;
}

std::vector<double> random_curve(es::RngStream& r, std::size_t len) {
    std::vector<double> e{5.0};
    const double valley = r.uniform(0.1, 0.9) * static_cast<double>(len);
    for (std::size_t j = 1; j < len; ++j) {
        const double t = static_cast<double>(j);
        e.push_back(3.0 + 1e-4 * (t - valley) * (t - valley) / len + r.normal(0.0, 0.05));
    }
    return e;
}

}  // namespace

TEST(Stopper, InitState) {
    es::EntropyStopper s(2.0, es::ParamSnapshot{{1.0, 2.0}, {{1, 2}}}, {});
    EXPECT_EQ(s.status(), D::Continue);
    EXPECT_EQ(s.best_iter(), 0u);
    EXPECT_EQ(s.e_min(), 2.0);
    EXPECT_EQ(s.accumulated_variation(), 0.0);
    EXPECT_EQ(s.best_snapshot().values, (std::vector<double>{1.0, 2.0}));
    EXPECT_THROW(es::EntropyStopper(std::nan(""), {}), es::NumericalError);
}

TEST(Stopper, ConfigValidation) {
    EXPECT_THROW(es::EntropyStopper(1.0, {0, 0.1}), es::InvalidInput);
    EXPECT_THROW(es::EntropyStopper(1.0, {5, 1.0}), es::InvalidInput);
    EXPECT_THROW(es::EntropyStopper(1.0, {5, 0.0}), es::InvalidInput);
}

TEST(Stopper, PatienceOneStopsOnFirstRejection) {
    EXPECT_EQ(run({1.0, 1.1}, {1, 0.1}), (std::vector<D>{D::Stop}));
}

TEST(Stopper, MonotoneDecreaseAlwaysNewBest) {
    std::size_t best = 0;
    const auto d = run({5, 4, 3, 2, 1}, {2, 0.999}, &best);
    EXPECT_EQ(d, std::vector<D>(4, D::NewBest));
    EXPECT_EQ(best, 4u);
}

TEST(Stopper, HandTraceWithStop) {
    std::size_t best = 0;
    const auto d = run({3, 2, 1, 1.5, 1.6, 1.7}, {3, 0.1}, &best);
    EXPECT_EQ(d, (std::vector<D>{D::NewBest, D::NewBest, D::Continue, D::Continue, D::Stop}));
    EXPECT_EQ(best, 2u);
}

TEST(Stopper, DowntrendRatioThreshold) {
    // G = 0.2 + 0.3 = 0.5, ratio = 0.1 / 0.5 = 0.2.
    for (double r_down : {0.1, 0.19}) {
        es::EntropyStopper s(1.0, {10, r_down});
        EXPECT_EQ(s.step(1.2), D::Continue);
        EXPECT_EQ(s.step(0.9), D::NewBest);
        EXPECT_EQ(s.best_iter(), 2u);
    }
    for (double r_down : {0.21, 0.5}) {
        es::EntropyStopper s(1.0, {10, r_down});
        s.step(1.2);
        EXPECT_EQ(s.step(0.9), D::Continue);
        EXPECT_NEAR(s.accumulated_variation(), 0.5, 1e-15);
        EXPECT_EQ(s.patience(), 2u);
    }
}

TEST(Stopper, TieIsNotNewBest) {
    es::EntropyStopper s(1.0, {5, 0.1});
    EXPECT_EQ(s.step(1.0), D::Continue);
}

TEST(Stopper, SnapshotTakenOnlyOnNewBest) {
    es::EntropyStopper s(3.0, es::ParamSnapshot{{0.0}, {{1, 1}}}, {5, 0.1});
    int calls = 0;
    auto provider = [&] {
        ++calls;
        return es::ParamSnapshot{{static_cast<double>(calls)}, {{1, 1}}};
    };
    s.step(2.0, provider);
    s.step(2.5, provider);
    s.step(1.0, provider);
    EXPECT_EQ(calls, 2);
    EXPECT_EQ(s.best_snapshot().values[0], 2.0);
}

TEST(Stopper, ErrorsAfterStopAndNonFinite) {
    es::EntropyStopper s(1.0, {1, 0.1});
    EXPECT_THROW(s.step(INFINITY), es::NumericalError);
    EXPECT_EQ(s.step(2.0), D::Stop);
    EXPECT_THROW(s.step(0.5), es::ContractViolation);
}

TEST(StopperProperty, InvariantsOnRandomCurves) {
    es::RngStream r(1);
    for (int t = 0; t < 200; ++t) {
        const auto e = random_curve(r, 300);
        const es::StopperConfig cfg{1 + r.below(40), r.uniform(0.01, 0.5)};
        es::EntropyStopper s(e[0], cfg);
        double prev_min = s.e_min();
        std::size_t prev_best = 0;
        for (std::size_t j = 1; j < e.size(); ++j) {
            const D d = s.step(e[j]);
            ASSERT_LE(s.e_min(), prev_min);
            ASSERT_GE(s.best_iter(), prev_best);
            ASSERT_LE(s.patience(), cfg.patience);
            ASSERT_GE(s.accumulated_variation(), 0.0);
            ASSERT_LE(j, s.best_iter() + cfg.patience);
            prev_min = s.e_min();
            prev_best = s.best_iter();
            if (d == D::Stop) {
                ASSERT_EQ(j, s.best_iter() + cfg.patience);
                break;
            }
        }
    }
}

TEST(StopperProperty, AffineInvariance) {
    es::RngStream r(2);
    for (int t = 0; t < 100; ++t) {
        const auto e = random_curve(r, 200);
        const es::StopperConfig cfg{1 + r.below(30), r.uniform(0.01, 0.5)};
        const double a = std::exp(r.uniform(-5, 5));
        const double b = r.uniform(-10, 10);
        std::vector<double> f(e.size());
        // Powers of two keep the map exact in floating point.
        const double a2 = std::exp2(std::round(std::log2(a)));
        for (std::size_t i = 0; i < e.size(); ++i) f[i] = a2 * e[i];
        const auto base = es::replay(e, cfg);
        const auto scaled = es::replay(f, cfg);
        EXPECT_EQ(base.accepted, scaled.accepted);
        EXPECT_EQ(base.best_iter, scaled.best_iter);
        // General affine map: compare with a small tolerance on the test margin.
        std::vector<double> g(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) g[i] = a * e[i] + b;
        const auto shifted = es::replay(g, cfg);
        EXPECT_EQ(base.best_iter, shifted.best_iter);
    }
}

TEST(Replay, GoldenAndDeterministic) {
    const std::vector<double> trace{3, 2, 1, 1.5, 1.6, 1.7};
    const auto r = es::replay(trace, {3, 0.1});
    EXPECT_EQ(r.best_iter, 2u);
    EXPECT_EQ(r.accepted, (std::vector<std::size_t>{1, 2}));
    EXPECT_TRUE(r.stopped);
    EXPECT_EQ(r.steps, 5u);
    EXPECT_THROW(es::replay(std::vector<double>{}, {}), es::InvalidInput);
}
