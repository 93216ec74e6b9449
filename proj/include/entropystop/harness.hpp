#pragma once

// Experiment plumbing behind the CLI: run configuration (JSON), config hashing,
// model construction, single runs, hyperparameter grids, suite manifests and
// the Naive-vs-Entropy comparison report.
//
// RunConfig JSON schema (every key optional, defaults shown):
//
//   {
//     "model": "ae",                          // "ae" | "svdd"
//     "ae":   {"act_func": "relu", "dropout": 0.2, "h_dim": 64, "layers": 2},
//     "svdd": {"hidden": [32], "rep_dim": 16, "relu_slope": 0.1},
//     "optimizer": {"kind": "adam", "lr": 0.001, "weight_decay": 0.0,
//                   "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
//     "batch_size": 256, "epochs": 250, "n_eval": 1024,
//     "stopper": {"k": 100, "r_down": 0.1},
//     "seed": 0
//   }
//
// Grid spec JSON: {"base": <RunConfig>, "grid": {<axis>: [values...]},
// "modes": ["naive", "entropy"]}. Axes: act_func, dropout, h_dim, layers, lr,
// weight_decay, epochs, batch_size, n_eval, k, r_down, relu_slope, rep_dim.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "entropystop/dataset.hpp"
#include "entropystop/evalstats.hpp"
#include "entropystop/models.hpp"
#include "entropystop/synth.hpp"
#include "entropystop/trainer.hpp"

namespace entropystop {

using nlohmann::json;

struct RunConfig {
    std::string model = "ae";
    AutoencoderConfig ae{};
    SvddConfig svdd{};
    TrainConfig train{};
    StopperConfig stopper{};
};

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const RunConfig& c) {
    json j;
    j["model"] = c.model;
    j["ae"] = {{"act_func", to_string(c.ae.activation)},
               {"dropout", c.ae.dropout},
               {"h_dim", c.ae.h_dim},
               {"layers", c.ae.layers}};
    j["svdd"] = {{"hidden", c.svdd.hidden}, {"rep_dim", c.svdd.rep_dim}, {"relu_slope", c.svdd.relu_slope}};
    const auto& o = c.train.optimizer;
    j["optimizer"] = {{"kind", o.kind == OptimizerKind::Adam ? "adam" : "sgd"},
                      {"lr", o.lr},
                      {"weight_decay", o.weight_decay},
                      {"beta1", o.beta1},
                      {"beta2", o.beta2},
                      {"eps", o.eps}};
    j["batch_size"] = c.train.batch_size;
    j["epochs"] = c.train.epochs;
    j["n_eval"] = c.train.n_eval;
    j["stopper"] = {{"k", c.stopper.patience}, {"r_down", c.stopper.r_down}};
    j["seed"] = c.train.seed;
    return j;
}

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("config key '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [k, _] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; })) {
            throw InvalidInput("unknown config key '" + where + k + "'");
        }
    }
}

}  // namespace detail

// Applies the keys present in `j` on top of `c`.
inline void apply_json(RunConfig& c, const json& j) {
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    detail::reject_unknown(j, {"model", "ae", "svdd", "optimizer", "batch_size", "epochs", "n_eval", "stopper", "seed"}, "");
    detail::read_opt(j, "model", c.model);
    if (c.model != "ae" && c.model != "svdd") throw InvalidInput("model must be 'ae' or 'svdd'");
    if (j.contains("ae")) {
        const auto& a = j["ae"];
        detail::reject_unknown(a, {"act_func", "dropout", "h_dim", "layers"}, "ae.");
        if (a.contains("act_func")) c.ae.activation = parse_activation(a["act_func"].get<std::string>());
        detail::read_opt(a, "dropout", c.ae.dropout);
        detail::read_opt(a, "h_dim", c.ae.h_dim);
        detail::read_opt(a, "layers", c.ae.layers);
    }
    if (j.contains("svdd")) {
        const auto& s = j["svdd"];
        detail::reject_unknown(s, {"hidden", "rep_dim", "relu_slope"}, "svdd.");
        detail::read_opt(s, "hidden", c.svdd.hidden);
        detail::read_opt(s, "rep_dim", c.svdd.rep_dim);
        detail::read_opt(s, "relu_slope", c.svdd.relu_slope);
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        detail::reject_unknown(o, {"kind", "lr", "weight_decay", "beta1", "beta2", "eps"}, "optimizer.");
        if (o.contains("kind")) {
            const auto k = o["kind"].get<std::string>();
            if (k == "adam") {
                c.train.optimizer.kind = OptimizerKind::Adam;
            } else if (k == "sgd") {
                c.train.optimizer.kind = OptimizerKind::Sgd;
            } else {
                throw InvalidInput("optimizer.kind must be 'adam' or 'sgd'");
            }
        }
        detail::read_opt(o, "lr", c.train.optimizer.lr);
        detail::read_opt(o, "weight_decay", c.train.optimizer.weight_decay);
        detail::read_opt(o, "beta1", c.train.optimizer.beta1);
        detail::read_opt(o, "beta2", c.train.optimizer.beta2);
        detail::read_opt(o, "eps", c.train.optimizer.eps);
    }
    detail::read_opt(j, "batch_size", c.train.batch_size);
    detail::read_opt(j, "epochs", c.train.epochs);
    detail::read_opt(j, "n_eval", c.train.n_eval);
    if (j.contains("stopper")) {
        const auto& s = j["stopper"];
        detail::reject_unknown(s, {"k", "r_down"}, "stopper.");
        detail::read_opt(s, "k", c.stopper.patience);
        detail::read_opt(s, "r_down", c.stopper.r_down);
    }
    detail::read_opt(j, "seed", c.train.seed);
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    apply_json(c, j);
    return c;
}

// FNV-1a 64 over the canonical (sorted-key) dump of the hyperparameters,
// seed included. Mode and dataset are not part of the hash, so the Naive,
// Entropy and Optimal runs of one configuration share it.
inline std::string config_hash(const RunConfig& c) {
    const std::string canon = to_json(c).dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Default (untrained) model for `ds`. A hypersphere model has its center set
// from `ds` under the initial weights.
inline std::unique_ptr<Model> make_model(const RunConfig& c, const Dataset& ds) {
    RngStream init(derive_seed(c.train.seed, "init"));
    if (c.model == "ae") return std::make_unique<AutoencoderModel>(ds.d(), c.ae, init);
    if (c.model == "svdd") {
        auto m = std::make_unique<DeepSvddLiteModel>(ds.d(), c.svdd, init);
        m->init_center(ds.x);
        return m;
    }
    throw InvalidInput("unknown model '" + c.model + "'");
}

struct RunRecord {
    std::string dataset;
    std::string group;
    std::string model;
    std::string config_hash;
    std::uint64_t seed = 0;
    json hyperparameters;
    RunResult result;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

inline RunRecord run_single(const RunConfig& c, const Dataset& ds, RunMode mode, const TrainOptions& opts = {}) {
    RunRecord rec{ds.name, {}, c.model, config_hash(c), c.train.seed, to_json(c), {}, {}};
    auto model = make_model(c, ds);
    rec.result = train_with_stopper(*model, ds, c.train, c.stopper, mode, opts);
    return rec;
}

// Deterministic part of a run, suitable for byte-for-byte comparison. Wall
// time is not included.
inline json result_json(const RunRecord& r) {
    json j;
    j["dataset"] = r.dataset;
    j["model"] = r.model;
    j["mode"] = to_string(r.result.mode);
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["config"] = r.hyperparameters;
    j["auc"] = r.result.auc ? json(*r.result.auc) : json(nullptr);
    j["selected_iter"] = r.result.selected_iter;
    j["iterations_run"] = r.result.iterations_run;
    j["total_iters"] = r.result.total_iters;
    j["scores"] = r.result.scores;
    return j;
}

// ---------------------------------------------------------------------------
// Grids

struct GridSpec {
    RunConfig base;
    // Axis name -> values, enumerated as a cartesian product in key order.
    std::map<std::string, std::vector<json>> axes;
    std::vector<RunMode> modes{RunMode::Naive, RunMode::Entropy};
};

inline void apply_axis(RunConfig& c, const std::string& axis, const json& v) {
    try {
        if (axis == "act_func") c.ae.activation = parse_activation(v.get<std::string>());
        else if (axis == "dropout") c.ae.dropout = v.get<double>();
        else if (axis == "h_dim") c.ae.h_dim = v.get<std::size_t>();
        else if (axis == "layers") c.ae.layers = v.get<std::size_t>();
        else if (axis == "lr") c.train.optimizer.lr = v.get<double>();
        else if (axis == "weight_decay") c.train.optimizer.weight_decay = v.get<double>();
        else if (axis == "epochs") c.train.epochs = v.get<std::size_t>();
        else if (axis == "batch_size") c.train.batch_size = v.get<std::size_t>();
        else if (axis == "n_eval") c.train.n_eval = v.get<std::size_t>();
        else if (axis == "k") c.stopper.patience = v.get<std::size_t>();
        else if (axis == "r_down") c.stopper.r_down = v.get<double>();
        else if (axis == "relu_slope") c.svdd.relu_slope = v.get<double>();
        else if (axis == "rep_dim") c.svdd.rep_dim = v.get<std::size_t>();
        else throw InvalidInput("unknown grid axis '" + axis + "'");
    } catch (const json::exception& e) {
        throw InvalidInput("grid axis '" + axis + "': " + e.what());
    }
}

inline std::vector<RunConfig> enumerate_grid(const GridSpec& g) {
    std::vector<RunConfig> out{g.base};
    for (const auto& [axis, values] : g.axes) {
        if (values.empty()) throw InvalidInput("grid axis '" + axis + "' has no values");
        std::vector<RunConfig> next;
        next.reserve(out.size() * values.size());
        for (const auto& c : out) {
            for (const auto& v : values) {
                RunConfig copy = c;
                apply_axis(copy, axis, v);
                next.push_back(std::move(copy));
            }
        }
        out = std::move(next);
    }
    return out;
}

// The 64-configuration autoencoder grid: act_func x dropout x h_dim x lr x
// layers x epochs, two values each.
inline GridSpec standard_ae_grid(RunConfig base = {}) {
    GridSpec g;
    base.model = "ae";
    g.base = base;
    g.axes["act_func"] = {"relu", "sigmoid"};
    g.axes["dropout"] = {0.0, 0.2};
    g.axes["h_dim"] = {64, 256};
    g.axes["lr"] = {0.005, 0.001};
    g.axes["layers"] = {2, 4};
    g.axes["epochs"] = {100, 500};
    return g;
}

inline GridSpec grid_from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("grid spec must be a JSON object");
    detail::reject_unknown(j, {"base", "grid", "modes"}, "");
    GridSpec g;
    if (j.contains("base")) apply_json(g.base, j["base"]);
    if (j.contains("grid")) {
        for (const auto& [axis, values] : j["grid"].items()) {
            if (!values.is_array()) throw InvalidInput("grid axis '" + axis + "' must be an array");
            g.axes[axis] = values.get<std::vector<json>>();
        }
    }
    if (j.contains("modes")) {
        g.modes.clear();
        for (const auto& m : j["modes"]) g.modes.push_back(parse_run_mode(m.get<std::string>()));
    }
    return g;
}

inline std::size_t sweep_threads() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ENTROPYSTOP_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
    }
    return n;
}

// Runs every (dataset, config, mode). Failures are recorded per row and the
// sweep continues. Rows come back ordered by dataset, then config hash, then
// mode, independent of scheduling.
inline std::vector<RunRecord> run_grid(const GridSpec& g, const std::vector<Dataset>& datasets,
                                       std::size_t threads = sweep_threads(), const std::string& group = "default") {
    const auto configs = enumerate_grid(g);
    struct Job {
        std::size_t dataset;
        std::size_t config;
        RunMode mode;
    };
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < datasets.size(); ++d)
        for (std::size_t c = 0; c < configs.size(); ++c)
            for (RunMode m : g.modes) jobs.push_back({d, c, m});

    std::vector<RunRecord> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            const RunConfig& c = configs[job.config];
            const Dataset& ds = datasets[job.dataset];
            try {
                rows[i] = run_single(c, ds, job.mode);
            } catch (const TrainingAborted& e) {
                rows[i] = RunRecord{ds.name, {}, c.model, config_hash(c), c.train.seed, to_json(c), e.partial, e.what()};
                rows[i].result.mode = job.mode;
            } catch (const std::exception& e) {
                rows[i] = RunRecord{ds.name, {}, c.model, config_hash(c), c.train.seed, to_json(c), {}, e.what()};
                rows[i].result.mode = job.mode;
            }
            rows[i].group = group;
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < std::max<std::size_t>(1, threads); ++t) pool.emplace_back(worker);
        worker();
    }
    std::stable_sort(rows.begin(), rows.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.dataset, a.config_hash, a.result.mode) < std::tie(b.dataset, b.config_hash, b.result.mode);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Tabular outputs

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

inline std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

}  // namespace detail

inline const char* kRunsHeader =
    "group,dataset,model,config_hash,seed,mode,auc,selected_iter,iterations_run,total_iters,wall_time_s,status";

inline void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& rows) {
    out << kRunsHeader << '\n';
    for (const auto& r : rows) {
        std::string status = r.ok() ? "ok" : r.error;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out << r.group << ',' << r.dataset << ',' << r.model << ',' << r.config_hash << ',' << r.seed << ','
            << to_string(r.result.mode) << ',' << (r.ok() ? detail::fmt_opt(r.result.auc) : std::string{}) << ','
            << r.result.selected_iter << ',' << r.result.iterations_run << ',' << r.result.total_iters << ','
            << detail::fmt(r.result.wall_time_s) << ',' << status << '\n';
    }
}

struct ModeStats {
    RunMode mode;
    std::size_t count = 0;
    double auc_mean = 0.0;
    double auc_std = 0.0;  // population
};

// AUC mean and spread per mode over every successful labeled run.
inline std::vector<ModeStats> mode_stats(const std::vector<RunRecord>& rows) {
    std::map<RunMode, std::vector<double>> by_mode;
    for (const auto& r : rows)
        if (r.ok() && r.result.auc) by_mode[r.result.mode].push_back(*r.result.auc);
    std::vector<ModeStats> out;
    for (const auto& [mode, v] : by_mode) {
        ModeStats s{mode, v.size()};
        for (double a : v) s.auc_mean += a;
        s.auc_mean /= static_cast<double>(v.size());
        for (double a : v) s.auc_std += (a - s.auc_mean) * (a - s.auc_mean);
        s.auc_std = std::sqrt(s.auc_std / static_cast<double>(v.size()));
        out.push_back(s);
    }
    return out;
}

inline void write_stats_csv(std::ostream& out, const std::vector<ModeStats>& stats) {
    out << "mode,count,auc_mean,auc_std\n";
    for (const auto& s : stats)
        out << to_string(s.mode) << ',' << s.count << ',' << detail::fmt(s.auc_mean) << ',' << detail::fmt(s.auc_std)
            << '\n';
}

// One row per (dataset, config) with the three modes side by side. p_value is
// the one-sided Wilcoxon (Entropy > Naive) across the datasets of that config,
// blank when it cannot be computed.
inline void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& rows) {
    struct Wide {
        std::string dataset, model, hash;
        std::optional<double> auc[3];
        std::size_t selected = 0, total = 0;
    };
    std::map<std::pair<std::string, std::string>, Wide> wide;  // (hash, dataset)
    for (const auto& r : rows) {
        auto& w = wide[{r.config_hash, r.dataset}];
        w.dataset = r.dataset;
        w.model = r.model;
        w.hash = r.config_hash;
        if (r.ok()) w.auc[static_cast<int>(r.result.mode)] = r.result.auc;
        if (r.result.mode == RunMode::Entropy) w.selected = r.result.selected_iter;
        w.total = std::max(w.total, r.result.total_iters);
    }
    std::map<std::string, std::string> pvals;
    {
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pairs;
        for (const auto& [_, w] : wide) {
            if (w.auc[0] && w.auc[1]) {
                pairs[w.hash].first.push_back(*w.auc[1]);
                pairs[w.hash].second.push_back(*w.auc[0]);
            }
        }
        for (const auto& [hash, ab] : pairs) {
            try {
                pvals[hash] = detail::fmt(wilcoxon_one_sided(ab.first, ab.second).p_value);
            } catch (const InvalidInput&) {
                pvals[hash] = "";
            }
        }
    }
    out << "dataset,model,config_hash,naive_auc,entropy_auc,optimal_auc,selected_iter,total_iters,p_value\n";
    for (const auto& [_, w] : wide) {
        out << w.dataset << ',' << w.model << ',' << w.hash << ',' << detail::fmt_opt(w.auc[0]) << ','
            << detail::fmt_opt(w.auc[1]) << ',' << detail::fmt_opt(w.auc[2]) << ',' << w.selected << ',' << w.total
            << ',' << pvals[w.hash] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Report

struct RunRow {
    std::string group, dataset, model, config_hash, mode;
    std::optional<double> auc;
    std::size_t selected_iter = 0, total_iters = 0;
    double wall_time_s = 0.0;
    bool ok = true;
};

inline std::vector<RunRow> parse_runs_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) break;
    }
    {
        const auto h = detail::split_csv_line(line);
        for (std::size_t i = 0; i < h.size(); ++i) col[detail::trim(h[i])] = i;
    }
    for (const char* need : {"group", "dataset", "model", "config_hash", "mode", "auc", "selected_iter", "total_iters",
                             "wall_time_s", "status"}) {
        if (!col.count(need)) throw ParseError(std::string("runs CSV is missing column '") + need + "'", line_no);
    }
    std::vector<RunRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != col.size()) throw ParseError("wrong field count", line_no);
        RunRow r;
        r.group = f[col["group"]];
        r.dataset = f[col["dataset"]];
        r.model = f[col["model"]];
        r.config_hash = f[col["config_hash"]];
        r.mode = f[col["mode"]];
        parse_run_mode(r.mode);
        if (!detail::trim(f[col["auc"]]).empty()) r.auc = detail::parse_double(f[col["auc"]], line_no);
        r.selected_iter = static_cast<std::size_t>(detail::parse_double(f[col["selected_iter"]], line_no));
        r.total_iters = static_cast<std::size_t>(detail::parse_double(f[col["total_iters"]], line_no));
        r.wall_time_s = detail::parse_double(f[col["wall_time_s"]], line_no);
        r.ok = detail::trim(f[col["status"]]) == "ok";
        rows.push_back(std::move(r));
    }
    return rows;
}

struct ReportRow {
    std::string group, model, config_hash;
    std::size_t datasets = 0;
    double naive_mean = 0.0;
    double entropy_mean = 0.0;
    std::optional<double> optimal_mean;
    std::size_t entropy_wins = 0;
    std::optional<double> p_value;  // absent when the test is undefined
    double time_ratio = 0.0;        // total Entropy wall time / total Naive wall time
    double selected_fraction = 0.0; // mean Entropy selected_iter / total_iters
};

// Pairs Naive and Entropy runs per dataset within each (group, model, config).
// Throws InvalidInput if the two modes cover different datasets.
inline std::vector<ReportRow> build_report(const std::vector<RunRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, std::map<std::string, std::map<std::string, const RunRow*>>> grouped;  // key -> mode -> dataset
    for (const auto& r : rows) {
        if (!r.ok || !r.auc) continue;
        grouped[{r.group, r.model, r.config_hash}][r.mode][r.dataset] = &r;
    }
    std::vector<ReportRow> out;
    for (const auto& [key, modes] : grouped) {
        const auto naive = modes.find("naive");
        const auto entropy = modes.find("entropy");
        if (naive == modes.end() || entropy == modes.end()) {
            throw InvalidInput("report: group '" + std::get<0>(key) + "' config " + std::get<2>(key) +
                               " needs both naive and entropy runs");
        }
        std::set<std::string> dn, de;
        for (const auto& [d, _] : naive->second) dn.insert(d);
        for (const auto& [d, _] : entropy->second) de.insert(d);
        if (dn != de) {
            throw InvalidInput("report: naive and entropy runs cover different datasets in group '" + std::get<0>(key) +
                               "'");
        }
        ReportRow row;
        row.group = std::get<0>(key);
        row.model = std::get<1>(key);
        row.config_hash = std::get<2>(key);
        std::vector<double> a, b;
        double tn = 0.0, te = 0.0;
        for (const auto& d : dn) {
            const RunRow* n = naive->second.at(d);
            const RunRow* e = entropy->second.at(d);
            a.push_back(*e->auc);
            b.push_back(*n->auc);
            tn += n->wall_time_s;
            te += e->wall_time_s;
            if (*e->auc > *n->auc) ++row.entropy_wins;
            row.selected_fraction +=
                e->total_iters ? static_cast<double>(e->selected_iter) / static_cast<double>(e->total_iters) : 0.0;
        }
        row.datasets = dn.size();
        row.naive_mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
        row.entropy_mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
        row.selected_fraction /= static_cast<double>(dn.size());
        row.time_ratio = tn > 0.0 ? te / tn : 0.0;
        if (const auto opt = modes.find("optimal"); opt != modes.end() && !opt->second.empty()) {
            double s = 0.0;
            for (const auto& [_, r] : opt->second) s += *r->auc;
            row.optimal_mean = s / static_cast<double>(opt->second.size());
        }
        try {
            row.p_value = wilcoxon_one_sided(a, b).p_value;
        } catch (const InvalidInput&) {
            row.p_value.reset();
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, double alpha = 0.05) {
    out << "group,model,config_hash,datasets,naive_auc,entropy_auc,optimal_auc,entropy_wins,p_value,significant,"
           "time_ratio,selected_fraction\n";
    for (const auto& r : rows) {
        out << r.group << ',' << r.model << ',' << r.config_hash << ',' << r.datasets << ','
            << detail::fmt(r.naive_mean) << ',' << detail::fmt(r.entropy_mean) << ','
            << detail::fmt_opt(r.optimal_mean) << ',' << r.entropy_wins << ','
            << (r.p_value ? detail::fmt(*r.p_value) : std::string("n/a")) << ','
            << (r.p_value && *r.p_value <= alpha ? "yes" : "no") << ',' << detail::fmt(r.time_ratio) << ','
            << detail::fmt(r.selected_fraction) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Suite manifests

inline json to_json(const GmmModel& g) {
    json comps = json::array();
    for (std::size_t k = 0; k < g.components(); ++k) {
        std::vector<std::vector<double>> cov;
        for (std::size_t i = 0; i < g.covariances[k].rows(); ++i)
            cov.emplace_back(g.covariances[k].row(i).begin(), g.covariances[k].row(i).end());
        comps.push_back({{"weight", g.weights[k]}, {"mean", g.means[k]}, {"covariance", cov}});
    }
    return comps;
}

inline json suite_config_json(const SuiteConfig& c) {
    std::vector<std::string> kinds;
    for (auto k : c.kinds) kinds.push_back(to_string(k));
    return {{"n_datasets", c.n_datasets}, {"n", c.n},           {"d", c.d},
            {"k", c.k},                   {"kinds", kinds},     {"ratios", c.ratios},
            {"seed", c.seed},             {"standardize", c.standardize},
            {"alpha", c.alpha ? json(*c.alpha) : json(nullptr)}};
}

inline SuiteConfig suite_config_from_json(const json& j) {
    SuiteConfig c;
    detail::read_opt(j, "n_datasets", c.n_datasets);
    detail::read_opt(j, "n", c.n);
    detail::read_opt(j, "d", c.d);
    detail::read_opt(j, "k", c.k);
    detail::read_opt(j, "ratios", c.ratios);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "standardize", c.standardize);
    if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = j["alpha"].get<double>();
    if (j.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : j["kinds"]) c.kinds.push_back(parse_outlier_kind(k.get<std::string>()));
    }
    return c;
}

inline json suite_manifest(const SuiteConfig& cfg, const std::vector<SuiteEntry>& suite) {
    json m;
    m["suite"] = suite_config_json(cfg);
    m["datasets"] = json::array();
    for (const auto& e : suite) {
        json d = {{"name", e.data.name},
                  {"file", e.data.name + ".csv"},
                  {"kind", to_string(e.injection.kind)},
                  {"alpha", e.injection.alpha},
                  {"ratio", e.injection.ratio},
                  {"injection_seed", e.injection.seed},
                  {"base_index", e.base_index},
                  {"base_seed", e.base_seed},
                  {"rows", e.data.n()},
                  {"outliers", e.data.outlier_count()},
                  {"ground_truth_gmm", to_json(e.truth)}};
        if (e.fitted) d["fitted_gmm"] = to_json(*e.fitted);
        m["datasets"].push_back(std::move(d));
    }
    return m;
}

}  // namespace entropystop
