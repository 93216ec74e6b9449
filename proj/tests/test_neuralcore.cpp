#include <gtest/gtest.h>

#include "entropystop/models.hpp"
#include "entropystop/nn.hpp"
#include "oracles.hpp"

namespace es = entropystop;

namespace {

es::Mlp linear_net(std::size_t in, std::size_t out, bool bias, std::uint64_t seed = 1) {
    es::RngStream r(seed);
    return es::Mlp({{in, out, es::Activation::Identity, 0.01, bias}}, 0.0, r);
}

std::vector<es::LayerSpec> chain(const std::vector<std::size_t>& w, es::Activation hidden, es::Activation last,
                                 double slope, bool bias) {
    std::vector<es::LayerSpec> out;
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
        out.push_back({w[i], w[i + 1], i + 2 == w.size() ? last : hidden, slope, bias});
    return out;
}

}  // namespace

TEST(Forward, IdentityWeightsReturnInput) {
    auto net = linear_net(3, 3, true);
    auto w = net.mutable_weights(0);
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
    const es::Matrix x{{1, -2, 3}, {0.5, 0, -1}};
    EXPECT_EQ(net.forward(x, es::ForwardMode::Eval), x);
}

TEST(Forward, EvalDeterministicAndShape) {
    es::RngStream r(2);
    es::Mlp net(chain({4, 6, 2}, es::Activation::Relu, es::Activation::Identity, 0.01, true), 0.5, r);
    const auto x = oracle::random_matrix(5, 4, r);
    const auto a = net.forward(x, es::ForwardMode::Eval);
    EXPECT_EQ(a.rows(), 5u);
    EXPECT_EQ(a.cols(), 2u);
    EXPECT_EQ(a, net.forward(x, es::ForwardMode::Eval));
    EXPECT_THROW(net.forward(es::Matrix(2, 3), es::ForwardMode::Eval), es::ShapeError);
}

TEST(Forward, FullDropoutZeroesHidden) {
    es::RngStream r(2);
    es::Mlp net(chain({4, 6, 2}, es::Activation::Sigmoid, es::Activation::Identity, 0.01, false), 1.0, r);
    es::Mlp::Cache cache;
    const auto x = oracle::random_matrix(3, 4, r);
    const auto out = net.forward(x, es::ForwardMode::Train, &r, &cache);
    for (double v : cache.inputs[1].data()) EXPECT_EQ(v, 0.0);
    for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, TrainDropoutNeedsRng) {
    es::RngStream r(2);
    es::Mlp net(chain({2, 3, 2}, es::Activation::Relu, es::Activation::Identity, 0.01, true), 0.2, r);
    EXPECT_THROW(net.forward(es::Matrix(1, 2), es::ForwardMode::Train), es::ContractViolation);
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
    es::RngStream r(3);
    es::Mlp net(chain({3, 5, 3}, es::Activation::Relu, es::Activation::Identity, 0.01, true), 0.0, r);
    es::Mlp::Cache c;
    const auto out = net.forward(oracle::random_matrix(4, 3, r), es::ForwardMode::Eval, nullptr, &c);
    for (double g : net.backward(c, es::Matrix(out.rows(), out.cols()))) EXPECT_EQ(g, 0.0);
}

TEST(Backward, StaleCacheRejected) {
    es::RngStream r(3);
    es::Mlp net(chain({3, 3}, es::Activation::Identity, es::Activation::Identity, 0.01, true), 0.0, r);
    es::Mlp::Cache c;
    const auto out = net.forward(oracle::random_matrix(2, 3, r), es::ForwardMode::Eval, nullptr, &c);
    net.mutable_params()[0] += 1.0;
    EXPECT_THROW(net.backward(c, out), es::ContractViolation);
    EXPECT_THROW(net.backward(es::Mlp::Cache{}, out), es::ContractViolation);
}

TEST(Backward, LeastSquaresClosedForm) {
    // L = (1/n) Σ_i ||x_i W - y_i||², so dL/dW = 2 Xᵀ(XW - Y)/n.
    es::RngStream r(4);
    auto net = linear_net(4, 3, false);
    const auto x = oracle::random_matrix(10, 4, r);
    const auto y = oracle::random_matrix(10, 3, r);
    es::Mlp::Cache c;
    const auto out = net.forward(x, es::ForwardMode::Eval, nullptr, &c);
    es::Matrix up(10, 3);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 3; ++j) up(i, j) = 2.0 * (out(i, j) - y(i, j)) / 10.0;
    const auto g = net.backward(c, up);

    es::Matrix w(4, 3, std::vector<double>(net.weights(0).begin(), net.weights(0).end()));
    es::Matrix resid = oracle::naive_matmul(x, w);
    for (std::size_t i = 0; i < resid.size(); ++i) resid.data()[i] -= y.data()[i];
    const auto ref = oracle::naive_matmul(es::transpose(x), resid);
    ASSERT_EQ(g.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(g[i], 2.0 * ref.data()[i] / 10.0, 1e-12);
}

TEST(GradCheck, LinearQuadratic) {
    es::RngStream r(5);
    auto net = linear_net(3, 2, true);
    const auto x = oracle::random_matrix(6, 3, r);
    EXPECT_LT(es::grad_check(net, es::mse_loss(oracle::random_matrix(6, 2, r)), x), 1e-9);
}

TEST(GradCheck, ReluAutoencoder848) {
    es::RngStream r(6);
    es::Mlp net(chain({8, 4, 8}, es::Activation::Relu, es::Activation::Identity, 0.01, true), 0.0, r);
    es::Matrix x = oracle::random_matrix(16, 8, r);
    while (net.min_abs_kink_distance(x) < 1e-4) x = oracle::random_matrix(16, 8, r);
    EXPECT_LT(es::grad_check(net, es::mse_loss(x), x), 1e-4);
}

TEST(GradCheck, SigmoidOnly) {
    es::RngStream r(7);
    es::Mlp net(chain({5, 7, 3}, es::Activation::Sigmoid, es::Activation::Sigmoid, 0.01, true), 0.0, r);
    const auto x = oracle::random_matrix(9, 5, r);
    EXPECT_LT(es::grad_check(net, es::mse_loss(oracle::random_matrix(9, 3, r, 0, 1)), x), 1e-6);
}

TEST(GradCheckProperty, RandomArchitectures) {
    es::RngStream r(8);
    const es::Activation acts[] = {es::Activation::Relu, es::Activation::LeakyRelu, es::Activation::Sigmoid,
                                   es::Activation::Identity};
    int checked = 0;
    for (int t = 0; checked < 24 && t < 200; ++t) {
        const std::size_t depth = 1 + r.below(3);
        std::vector<std::size_t> w{1 + r.below(6)};
        for (std::size_t l = 0; l < depth; ++l) w.push_back(1 + r.below(7));
        const auto hidden = acts[r.below(4)];
        const auto last = acts[r.below(4)];
        const double slope = r.uniform(0.01, 0.5);
        es::Mlp net(chain(w, hidden, last, slope, r.below(2) == 0), 0.0, r);
        const auto x = oracle::random_matrix(4 + r.below(8), w.front(), r);
        if (net.min_abs_kink_distance(x) < 1e-4) continue;
        ++checked;
        const auto target = oracle::random_matrix(x.rows(), w.back(), r);
        EXPECT_LE(es::grad_check(net, es::mse_loss(target), x), 1e-4)
            << "config " << t << " act " << es::to_string(hidden) << "/" << es::to_string(last);
    }
    EXPECT_GE(checked, 20);
}

TEST(Snapshot, PerturbRestoreBitExact) {
    es::RngStream r(9);
    es::Mlp net(chain({4, 8, 4}, es::Activation::LeakyRelu, es::Activation::Identity, 0.1, true), 0.0, r);
    const auto x = oracle::random_matrix(5, 4, r);
    const auto before = net.forward(x, es::ForwardMode::Eval);
    const auto snap = net.snapshot();
    for (auto& p : net.mutable_params()) p += r.normal();
    EXPECT_NE(net.forward(x, es::ForwardMode::Eval), before);
    net.restore(snap);
    EXPECT_EQ(net.forward(x, es::ForwardMode::Eval), before);
    EXPECT_EQ(net.snapshot(), snap);
}

TEST(Snapshot, LayoutMismatch) {
    auto a = linear_net(2, 2, true);
    auto b = linear_net(2, 3, true);
    EXPECT_THROW(a.restore(b.snapshot()), es::ShapeError);
}

TEST(Optimizer, ZeroLearningRate) {
    std::vector<double> p{1, 2, 3};
    const std::vector<double> g{0.5, -1, 2};
    for (auto kind : {es::OptimizerKind::Sgd, es::OptimizerKind::Adam}) {
        es::Optimizer opt({kind, 0.0});
        auto q = p;
        opt.step(q, g);
        EXPECT_EQ(q, p);
    }
}

TEST(Optimizer, SgdHandUpdate) {
    es::Optimizer opt({es::OptimizerKind::Sgd, 0.1});
    std::vector<double> p{1.0};
    opt.step(p, std::vector<double>{1.0});
    EXPECT_DOUBLE_EQ(p[0], 0.9);
}

TEST(Optimizer, SgdWeightDecay) {
    es::Optimizer opt({es::OptimizerKind::Sgd, 0.1, 0.5});
    std::vector<double> p{2.0};
    opt.step(p, std::vector<double>{1.0});
    EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.1 * (1.0 + 0.5 * 2.0));
}

TEST(Optimizer, AdamFirstStepMagnitudeIsLr) {
    for (double g : {1e-3, 1.0, 1e3}) {
        es::Optimizer opt({es::OptimizerKind::Adam, 0.01});
        std::vector<double> p{0.0};
        opt.step(p, std::vector<double>{g});
        EXPECT_NEAR(std::abs(p[0]), 0.01, 1e-6);
    }
}

TEST(Optimizer, NonFiniteGradient) {
    es::Optimizer opt;
    std::vector<double> p{0.0};
    EXPECT_THROW(opt.step(p, std::vector<double>{std::nan("")}), es::NumericalError);
    EXPECT_THROW(opt.step(p, std::vector<double>{1, 2}), es::ShapeError);
}

TEST(Convergence, RankOneLinearAutoencoder) {
    es::RngStream r(10);
    es::Matrix x(64, 4);
    const std::vector<double> u{0.5, -1.0, 0.25, 0.8};
    for (std::size_t i = 0; i < 64; ++i) {
        const double t = r.uniform(-1, 1);
        for (std::size_t k = 0; k < 4; ++k) x(i, k) = t * u[k];
    }
    es::AutoencoderModel ae({4, 1, 4}, es::Activation::Identity, 0.0, r);
    es::Optimizer opt({es::OptimizerKind::Adam, 1e-2});
    std::vector<double> g;
    double loss = 1.0;
    for (int s = 0; s < 2000 && loss >= 1e-6; ++s) {
        loss = ae.loss_and_gradient(x, es::ForwardMode::Eval, nullptr, g);
        opt.step(ae.mutable_params(), g);
    }
    EXPECT_LT(loss, 1e-6);
}
