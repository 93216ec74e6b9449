#include <gtest/gtest.h>

#include <sstream>

#include "entropystop/entropystop.hpp"
#include "oracles.hpp"

namespace es = entropystop;

namespace {

es::Dataset small_labeled(std::uint64_t seed = 1, std::size_t n = 120) {
    es::SuiteConfig s;
    s.n_datasets = 1;
    s.n = n;
    s.d = 4;
    s.seed = seed;
    return es::make_synthetic_suite(s).front().data;
}

es::RunConfig quick_config() {
    es::RunConfig c;
    c.ae.h_dim = 16;
    c.train.epochs = 6;
    c.train.batch_size = 32;
    c.train.n_eval = 64;
    c.stopper.patience = 5;
    c.train.seed = 3;
    return c;
}

}  // namespace

TEST(Trainer, ZeroEpochsReturnsUntrainedScores) {
    const auto ds = small_labeled();
    auto c = quick_config();
    c.train.epochs = 0;
    for (auto mode : {es::RunMode::Naive, es::RunMode::Entropy, es::RunMode::Optimal}) {
        auto m = es::make_model(c, ds);
        const auto expect = m->score(ds.x);
        const auto r = es::train_with_stopper(*m, ds, c.train, c.stopper, mode);
        EXPECT_EQ(r.scores, expect);
        EXPECT_EQ(r.selected_iter, 0u);
        EXPECT_EQ(r.iterations_run, 0u);
    }
}

TEST(Trainer, IterationCountAndNaiveSelection) {
    const auto ds = small_labeled();
    const auto c = quick_config();
    auto m = es::make_model(c, ds);
    const auto r = es::train_with_stopper(*m, ds, c.train, c.stopper, es::RunMode::Naive);
    const std::size_t per_epoch = (ds.n() + 31) / 32;
    EXPECT_EQ(r.total_iters, 6 * per_epoch);
    EXPECT_EQ(r.iterations_run, r.total_iters);
    EXPECT_EQ(r.selected_iter, r.total_iters);
    EXPECT_EQ(r.train_loss.size(), r.total_iters);
    EXPECT_TRUE(r.auc.has_value());
}

TEST(Trainer, ModesShareTrajectory) {
    const auto ds = small_labeled();
    auto c = quick_config();
    c.stopper.patience = 1000;  // never stops early
    auto a = es::make_model(c, ds);
    auto b = es::make_model(c, ds);
    es::TrainOptions opts;
    opts.record_entropy = true;
    const auto naive = es::train_with_stopper(*a, ds, c.train, c.stopper, es::RunMode::Naive, opts);
    const auto ent = es::train_with_stopper(*b, ds, c.train, c.stopper, es::RunMode::Entropy);
    EXPECT_EQ(naive.entropy_trace, ent.entropy_trace);
    EXPECT_EQ(naive.train_loss, ent.train_loss);
    EXPECT_EQ(ent.entropy_trace.size(), ent.iterations_run + 1);
    const auto replayed = es::replay(ent.entropy_trace, c.stopper);
    EXPECT_EQ(replayed.best_iter, ent.selected_iter);
}

TEST(Trainer, EntropyRestoresSelectedSnapshot) {
    const auto ds = small_labeled();
    auto c = quick_config();
    c.stopper.patience = 3;
    std::vector<std::vector<double>> seen;
    es::TrainOptions opts;
    opts.observer = [&](std::size_t, const es::Model& m) { seen.push_back(m.score(ds.x)); };
    auto m = es::make_model(c, ds);
    const auto r = es::train_with_stopper(*m, ds, c.train, c.stopper, es::RunMode::Entropy, opts);
    EXPECT_LE(r.iterations_run, r.selected_iter + c.stopper.patience);
    EXPECT_EQ(r.scores, seen[r.selected_iter]);
}

TEST(Trainer, OptimalPicksBestAuc) {
    const auto ds = small_labeled();
    const auto c = quick_config();
    auto m = es::make_model(c, ds);
    const auto r = es::train_with_stopper(*m, ds, c.train, c.stopper, es::RunMode::Optimal);
    ASSERT_EQ(r.auc_trace.size(), r.iterations_run + 1);
    const double best = *std::max_element(r.auc_trace.begin(), r.auc_trace.end());
    EXPECT_EQ(r.auc_trace[r.selected_iter], best);
    EXPECT_DOUBLE_EQ(*r.auc, best);
}

TEST(Trainer, OptimalNeedsLabels) {
    auto ds = small_labeled();
    ds.labels.reset();
    const auto c = quick_config();
    auto m = es::make_model(c, ds);
    EXPECT_THROW(es::train_with_stopper(*m, ds, c.train, c.stopper, es::RunMode::Optimal), es::InvalidInput);
}

TEST(Trainer, DivergenceAbortsWithPartialTrace) {
    const auto ds = small_labeled();
    auto c = quick_config();
    c.train.optimizer = {es::OptimizerKind::Sgd, 1e200};
    auto m = es::make_model(c, ds);
    try {
        es::train_with_stopper(*m, ds, c.train, c.stopper, es::RunMode::Entropy);
        FAIL() << "expected divergence";
    } catch (const es::TrainingAborted& e) {
        EXPECT_FALSE(e.partial.entropy_trace.empty());
    }
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
    auto c = quick_config();
    c.model = "svdd";
    c.svdd.hidden = {8, 4};
    const auto j = es::to_json(c);
    const auto back = es::run_config_from_json(j);
    EXPECT_EQ(es::to_json(back), j);
    EXPECT_EQ(es::config_hash(back), es::config_hash(c));
    EXPECT_THROW(es::run_config_from_json(es::json{{"bogus", 1}}), es::InvalidInput);
    EXPECT_THROW(es::run_config_from_json(es::json{{"ae", {{"h_dims", 3}}}}), es::InvalidInput);
}

TEST(Config, HashSensitiveToHyperparameters) {
    const auto c = quick_config();
    auto d = c;
    d.train.optimizer.lr *= 2;
    auto e = c;
    e.train.seed += 1;
    EXPECT_NE(es::config_hash(c), es::config_hash(d));
    EXPECT_NE(es::config_hash(c), es::config_hash(e));
    EXPECT_EQ(es::config_hash(c).size(), 16u);
}

TEST(Grid, StandardAeGridHas64Configs) { EXPECT_EQ(es::enumerate_grid(es::standard_ae_grid()).size(), 64u); }

TEST(Grid, RowCountAndDeterministicOrder) {
    es::GridSpec g;
    g.base = quick_config();
    g.base.train.epochs = 2;
    g.axes["lr"] = {0.01, 0.001};
    g.axes["dropout"] = {0.0, 0.2, 0.4};
    g.modes = {es::RunMode::Naive, es::RunMode::Entropy};
    const std::vector<es::Dataset> ds{small_labeled(1, 80), small_labeled(2, 80)};
    const auto a = es::run_grid(g, ds, 4);
    const auto b = es::run_grid(g, ds, 1);
    ASSERT_EQ(a.size(), 2u * 3u * 2u * 2u);
    std::ostringstream sa, sb;
    for (const auto& r : a) sa << es::result_json(r).dump() << '\n';
    for (const auto& r : b) sb << es::result_json(r).dump() << '\n';
    EXPECT_EQ(sa.str(), sb.str());
    for (std::size_t i = 0; i + 1 < a.size(); i += 2) {
        EXPECT_EQ(a[i].config_hash, a[i + 1].config_hash);
        EXPECT_LE(a[i + 1].result.iterations_run, a[i].result.iterations_run);
    }
}

TEST(Grid, OnePointGridEqualsSingleRun) {
    es::GridSpec g;
    g.base = quick_config();
    g.modes = {es::RunMode::Entropy};
    const auto ds = small_labeled();
    const auto rows = es::run_grid(g, {ds}, 1);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(es::result_json(rows[0]), es::result_json(es::run_single(g.base, ds, es::RunMode::Entropy)));
}

TEST(Grid, UnknownAxisAndJsonSpec) {
    es::GridSpec g;
    g.axes["nope"] = {1};
    EXPECT_THROW(es::enumerate_grid(g), es::InvalidInput);
    const auto spec = es::grid_from_json(es::json::parse(R"({"grid": {"layers": [2, 4]}, "modes": ["optimal"]})"));
    EXPECT_EQ(es::enumerate_grid(spec).size(), 2u);
    EXPECT_EQ(spec.modes, std::vector<es::RunMode>{es::RunMode::Optimal});
}

TEST(Report, PairsModesAndComputesStatistics) {
    const std::string csv =
        "group,dataset,model,config_hash,seed,mode,auc,selected_iter,iterations_run,total_iters,wall_time_s,status\n"
        "g,a,ae,h,0,naive,0.5,10,10,10,2.0,ok\n"
        "g,a,ae,h,0,entropy,0.7,2,5,10,0.5,ok\n"
        "g,b,ae,h,0,naive,0.6,10,10,10,2.0,ok\n"
        "g,b,ae,h,0,entropy,0.8,4,6,10,0.5,ok\n";
    std::istringstream in(csv);
    const auto rep = es::build_report(es::parse_runs_csv(in));
    ASSERT_EQ(rep.size(), 1u);
    EXPECT_DOUBLE_EQ(rep[0].naive_mean, 0.55);
    EXPECT_DOUBLE_EQ(rep[0].entropy_mean, 0.75);
    EXPECT_EQ(rep[0].entropy_wins, 2u);
    EXPECT_DOUBLE_EQ(rep[0].time_ratio, 0.25);
    EXPECT_DOUBLE_EQ(rep[0].selected_fraction, 0.3);
    EXPECT_DOUBLE_EQ(*rep[0].p_value, 0.25);
}

TEST(Report, IdenticalModesGiveNoPValue) {
    const std::string csv =
        "group,dataset,model,config_hash,seed,mode,auc,selected_iter,iterations_run,total_iters,wall_time_s,status\n"
        "g,a,ae,h,0,naive,0.5,10,10,10,1,ok\n"
        "g,a,ae,h,0,entropy,0.5,10,10,10,1,ok\n";
    std::istringstream in(csv);
    const auto rep = es::build_report(es::parse_runs_csv(in));
    EXPECT_FALSE(rep[0].p_value.has_value());
    std::ostringstream out;
    es::write_report_csv(out, rep);
    EXPECT_NE(out.str().find(",n/a,no,"), std::string::npos);
}

TEST(Report, MismatchedDatasets) {
    const std::string csv =
        "group,dataset,model,config_hash,seed,mode,auc,selected_iter,iterations_run,total_iters,wall_time_s,status\n"
        "g,a,ae,h,0,naive,0.5,10,10,10,1,ok\n"
        "g,b,ae,h,0,entropy,0.5,10,10,10,1,ok\n";
    std::istringstream in(csv);
    EXPECT_THROW(es::build_report(es::parse_runs_csv(in)), es::InvalidInput);
}

TEST(Report, MissingColumn) {
    std::istringstream in("group,dataset\n");
    EXPECT_THROW(es::parse_runs_csv(in), es::ParseError);
}

TEST(Manifest, SuiteConfigRoundTrip) {
    es::SuiteConfig s;
    s.kinds = {es::OutlierKind::Local, es::OutlierKind::Global};
    s.ratios = {0.1, 0.4};
    s.seed = 5;
    s.alpha = 2.0;
    const auto back = es::suite_config_from_json(es::suite_config_json(s));
    EXPECT_EQ(es::suite_config_json(back), es::suite_config_json(s));
}
