// entropystop command line: train | grid | inject | report

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "entropystop/entropystop.hpp"

namespace es = entropystop;
namespace fs = std::filesystem;
using es::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw es::InvalidInput("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw es::ParseError("'" + path + "': " + e.what(), 0);
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw es::InvalidInput("cannot write '" + path + "'");
    out << text;
}

// Flags shared by train and grid; every one overrides the config file.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> model, act, optimizer;
    std::optional<double> dropout, lr, weight_decay, r_down, relu_slope;
    std::optional<std::size_t> h_dim, layers, epochs, batch_size, n_eval, k, rep_dim;
    std::optional<std::uint64_t> seed;

    void add(CLI::App* app) {
        app->add_option("--config", config_path, "RunConfig JSON file");
        app->add_option("--model", model, "ae | svdd");
        app->add_option("--act", act, "AE activation: relu | sigmoid | leaky_relu | identity");
        app->add_option("--dropout", dropout);
        app->add_option("--h-dim", h_dim);
        app->add_option("--layers", layers);
        app->add_option("--optimizer", optimizer, "adam | sgd");
        app->add_option("--lr", lr);
        app->add_option("--weight-decay", weight_decay);
        app->add_option("--epochs", epochs);
        app->add_option("--batch-size", batch_size);
        app->add_option("--n-eval", n_eval);
        app->add_option("--k", k, "stopper patience");
        app->add_option("--r-down", r_down, "downtrend threshold");
        app->add_option("--relu-slope", relu_slope, "svdd leaky relu slope");
        app->add_option("--rep-dim", rep_dim, "svdd embedding size");
        app->add_option("--seed", seed);
    }

    // Starts from `c`, then the config file, then explicit flags.
    es::RunConfig resolve(es::RunConfig c = {}) const {
        if (!config_path.empty()) {
            const json j = read_json_file(config_path);
            es::apply_json(c, j.contains("base") ? j["base"] : j);
        }
        json o = json::object();
        if (model) o["model"] = *model;
        if (act) o["ae"]["act_func"] = *act;
        if (dropout) o["ae"]["dropout"] = *dropout;
        if (h_dim) o["ae"]["h_dim"] = *h_dim;
        if (layers) o["ae"]["layers"] = *layers;
        if (optimizer) o["optimizer"]["kind"] = *optimizer;
        if (lr) o["optimizer"]["lr"] = *lr;
        if (weight_decay) o["optimizer"]["weight_decay"] = *weight_decay;
        if (epochs) o["epochs"] = *epochs;
        if (batch_size) o["batch_size"] = *batch_size;
        if (n_eval) o["n_eval"] = *n_eval;
        if (k) o["stopper"]["k"] = *k;
        if (r_down) o["stopper"]["r_down"] = *r_down;
        if (relu_slope) o["svdd"]["relu_slope"] = *relu_slope;
        if (rep_dim) o["svdd"]["rep_dim"] = *rep_dim;
        if (seed) o["seed"] = *seed;
        es::apply_json(c, o);
        return c;
    }
};

struct DataFlags {
    bool drop_label_1 = false;
    bool no_standardize = false;

    void add(CLI::App* app) {
        app->add_flag("--drop-label-1", drop_label_1, "discard rows labeled 1 before use");
        app->add_flag("--no-standardize", no_standardize, "use features as-is");
    }

    es::Dataset load(const std::string& path) const {
        es::Dataset ds = es::read_csv(path);
        if (drop_label_1) ds = es::drop_outliers(ds);
        es::validate(ds, 2);
        if (!no_standardize) ds = es::standardize(ds);
        return ds;
    }
};

int cmd_train(const ConfigFlags& flags, const DataFlags& data, const std::string& data_path, const std::string& mode,
              const std::string& out_path, const std::string& trace_path) {
    const es::RunConfig cfg = flags.resolve();
    const es::RunMode run_mode = es::parse_run_mode(mode);
    const es::Dataset ds = data.load(data_path);
    if (run_mode == es::RunMode::Optimal && !ds.labeled()) {
        throw es::InvalidInput("--mode optimal needs a labeled dataset");
    }
    // Diagnostics are only computed when a trace is requested, so they do not
    // distort the reported wall time otherwise.
    es::TrainOptions opts;
    std::vector<es::LossSplit> splits;
    const std::size_t m = ds.outlier_count();
    const bool both_classes = ds.labeled() && m > 0 && m < ds.n();
    if (!trace_path.empty()) {
        opts.record_entropy = true;
        opts.record_auc = both_classes;
        if (both_classes) {
            opts.observer = [&](std::size_t, const es::Model& model) {
                splits.push_back(es::loss_split_diagnostic(model, ds));
            };
        }
    }

    es::RunRecord rec;
    int code = kExitOk;
    try {
        rec = es::run_single(cfg, ds, run_mode, opts);
    } catch (const es::TrainingAborted& e) {
        rec = es::RunRecord{ds.name, {}, cfg.model, es::config_hash(cfg), cfg.train.seed, es::to_json(cfg), e.partial,
                            e.what()};
        code = kExitNumerical;
    }

    json result = es::result_json(rec);
    if (!rec.ok()) result["error"] = rec.error;
    const std::string out = out_path.empty() ? ds.name + "." + mode + ".result.json" : out_path;
    write_text(out, result.dump(2) + "\n");

    if (!trace_path.empty()) {
        std::ostringstream os;
        os << "# config_hash=" << rec.config_hash << " seed=" << rec.seed << '\n';
        auto rows = es::trace_rows(rec.result);
        for (std::size_t j = 0; j < rows.size() && j < splits.size(); ++j) {
            rows[j].loss_in = splits[j].inlier;
            rows[j].loss_out = splits[j].outlier;
        }
        es::write_trace_csv(os, rows);
        write_text(trace_path, os.str());
    }

    std::cerr << "dataset=" << rec.dataset << " mode=" << mode << " config_hash=" << rec.config_hash;
    if (rec.result.auc) std::cerr << " auc=" << *rec.result.auc;
    std::cerr << " selected_iter=" << rec.result.selected_iter << " iterations_run=" << rec.result.iterations_run
              << " total_iters=" << rec.result.total_iters << " wall_time_s=" << rec.result.wall_time_s << '\n';
    if (!rec.ok()) std::cerr << "error: " << rec.error << '\n';
    return code;
}

int cmd_grid(const ConfigFlags& flags, const DataFlags& data, const std::vector<std::string>& data_paths,
             const std::string& grid_path, bool ae_grid, const std::vector<std::string>& modes,
             const std::string& out_dir, const std::string& label) {
    es::GridSpec spec;
    if (!grid_path.empty()) spec = es::grid_from_json(read_json_file(grid_path));
    spec.base = flags.resolve(spec.base);
    if (ae_grid) {
        const auto base = spec.base;
        spec = es::standard_ae_grid(base);
    }
    if (!modes.empty()) {
        spec.modes.clear();
        for (const auto& m : modes) spec.modes.push_back(es::parse_run_mode(m));
    }

    std::vector<es::Dataset> datasets;
    for (const auto& p : data_paths) datasets.push_back(data.load(p));

    const auto rows = es::run_grid(spec, datasets, es::sweep_threads(), label);
    fs::create_directories(out_dir);
    {
        std::ostringstream os;
        es::write_runs_csv(os, rows);
        write_text((fs::path(out_dir) / "runs.csv").string(), os.str());
    }
    {
        std::ostringstream os;
        es::write_summary_csv(os, rows);
        write_text((fs::path(out_dir) / "summary.csv").string(), os.str());
    }
    const auto stats = es::mode_stats(rows);
    {
        std::ostringstream os;
        es::write_stats_csv(os, stats);
        write_text((fs::path(out_dir) / "stats.csv").string(), os.str());
    }
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.ok() ? 0 : 1;
    std::cout << "configs=" << es::enumerate_grid(spec).size() << " datasets=" << datasets.size()
              << " runs=" << rows.size() << " failed=" << failed << '\n';
    for (const auto& s : stats)
        std::cout << es::to_string(s.mode) << ": auc mean " << s.auc_mean << " std " << s.auc_std << " (n=" << s.count
                  << ")\n";
    return kExitOk;
}

int cmd_inject(es::SuiteConfig cfg, const std::vector<std::string>& kinds, const std::string& manifest_in,
               const std::string& from_csv, bool drop_label_1, const std::string& out_dir) {
    if (!manifest_in.empty()) {
        cfg = es::suite_config_from_json(read_json_file(manifest_in).at("suite"));
    } else {
        cfg.kinds.clear();
        for (const auto& k : kinds) cfg.kinds.push_back(es::parse_outlier_kind(k));
    }
    fs::create_directories(out_dir);

    if (!from_csv.empty()) {
        // Inject into a user dataset (one file per kind x ratio).
        es::Dataset base = es::read_csv(from_csv);
        if (drop_label_1) base = es::drop_outliers(base);
        json manifest;
        manifest["source"] = from_csv;
        manifest["suite"] = es::suite_config_json(cfg);
        manifest["datasets"] = json::array();
        for (auto kind : cfg.kinds) {
            for (double ratio : cfg.ratios) {
                es::InjectionConfig inj =
                    es::injection_defaults(kind, ratio, es::derive_seed(cfg.seed, es::to_string(kind) + std::to_string(ratio)));
                if (cfg.alpha) inj.alpha = *cfg.alpha;
                es::Dataset ds = es::inject(base.x, inj, cfg.k);
                if (cfg.standardize) ds = es::standardize(ds);
                std::ostringstream name;
                name << base.name << "_" << es::to_string(kind) << "_" << ratio;
                ds.name = name.str();
                es::write_csv((fs::path(out_dir) / (ds.name + ".csv")).string(), ds);
                manifest["datasets"].push_back({{"name", ds.name},
                                                {"kind", es::to_string(kind)},
                                                {"alpha", inj.alpha},
                                                {"ratio", ratio},
                                                {"injection_seed", inj.seed},
                                                {"rows", ds.n()},
                                                {"outliers", ds.outlier_count()}});
            }
        }
        write_text((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
        std::cout << "wrote " << manifest["datasets"].size() << " datasets to " << out_dir << '\n';
        return kExitOk;
    }

    const auto suite = es::make_synthetic_suite(cfg);
    for (const auto& e : suite) es::write_csv((fs::path(out_dir) / (e.data.name + ".csv")).string(), e.data);
    write_text((fs::path(out_dir) / "manifest.json").string(), es::suite_manifest(cfg, suite).dump(2) + "\n");
    std::cout << "wrote " << suite.size() << " datasets to " << out_dir << '\n';
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path, double alpha) {
    std::vector<es::RunRow> rows;
    for (const auto& p : inputs) {
        std::ifstream in(p);
        if (!in) throw es::InvalidInput("cannot open '" + p + "'");
        auto part = es::parse_runs_csv(in);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto report = es::build_report(rows);
    std::ostringstream os;
    es::write_report_csv(os, report, alpha);
    if (!out_path.empty()) write_text(out_path, os.str());
    std::cout << os.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label-free training stopping for unsupervised outlier detection"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train one model on one dataset");
    ConfigFlags train_cfg;
    DataFlags train_data;
    std::string train_path, train_mode = "entropy", train_out, train_trace;
    train_cfg.add(train);
    train_data.add(train);
    train->add_option("--data", train_path, "dataset CSV")->required();
    train->add_option("--mode", train_mode, "naive | entropy | optimal");
    train->add_option("--out", train_out, "result JSON path");
    train->add_option("--trace", train_trace, "per-iteration trace CSV path");

    // grid
    auto* grid = app.add_subcommand("grid", "hyperparameter sweep over one or more datasets");
    ConfigFlags grid_cfg;
    DataFlags grid_data;
    std::vector<std::string> grid_paths, grid_modes;
    std::string grid_spec, grid_out = "grid_out", grid_label = "default";
    bool grid_standard = false;
    grid_cfg.add(grid);
    grid_data.add(grid);
    grid->add_option("--data", grid_paths, "dataset CSVs")->required();
    grid->add_option("--grid", grid_spec, "grid spec JSON");
    grid->add_flag("--ae-grid", grid_standard, "64-config autoencoder grid");
    grid->add_option("--modes", grid_modes, "modes to run (default naive entropy)");
    grid->add_option("--out", grid_out, "output directory");
    grid->add_option("--label", grid_label, "group label written to runs.csv");

    // inject
    auto* inject = app.add_subcommand("inject", "generate synthetic datasets with injected outliers");
    es::SuiteConfig suite;
    std::vector<std::string> kinds{"cluster"};
    std::string manifest_in, from_csv, inject_out = "suite";
    bool inject_drop = false, inject_raw = false;
    std::optional<double> alpha;
    inject->add_option("--kind", kinds, "local | global | cluster (repeatable)");
    inject->add_option("--ratio", suite.ratios, "outlier ratio(s)");
    inject->add_option("--n", suite.n, "inliers per dataset");
    inject->add_option("--d", suite.d, "feature count");
    inject->add_option("--k", suite.k, "GMM components");
    inject->add_option("--count", suite.n_datasets, "datasets per kind x ratio");
    inject->add_option("--seed", suite.seed);
    inject->add_option("--alpha", alpha, "override the per-kind alpha");
    inject->add_flag("--no-standardize", inject_raw);
    inject->add_option("--manifest", manifest_in, "replay a manifest.json");
    inject->add_option("--from", from_csv, "inject into this CSV instead of synthetic inliers");
    inject->add_flag("--drop-label-1", inject_drop, "remove label-1 rows of --from first");
    inject->add_option("--out", inject_out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "compare naive and entropy runs");
    std::vector<std::string> report_in;
    std::string report_out;
    double report_alpha = 0.05;
    report->add_option("runs", report_in, "runs.csv files from grid")->required();
    report->add_option("--out", report_out, "report CSV path");
    report->add_option("--alpha", report_alpha, "significance level");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*train) return cmd_train(train_cfg, train_data, train_path, train_mode, train_out, train_trace);
        if (*grid)
            return cmd_grid(grid_cfg, grid_data, grid_paths, grid_spec, grid_standard, grid_modes, grid_out, grid_label);
        if (*inject) {
            suite.alpha = alpha;
            suite.standardize = !inject_raw;
            return cmd_inject(suite, kinds, manifest_in, from_csv, inject_drop, inject_out);
        }
        if (*report) return cmd_report(report_in, report_out, report_alpha);
    } catch (const es::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const es::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitOk;
}
