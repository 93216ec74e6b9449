#pragma once

// Synthetic benchmarks: Gaussian mixtures fitted by EM, and injection of
// local (covariance-inflated), global (uniform over an α-scaled bounding box)
// and cluster (mean-scaled) outliers into a pool of inliers.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "entropystop/dataset.hpp"
#include "entropystop/errors.hpp"
#include "entropystop/matrix.hpp"
#include "entropystop/rng.hpp"

namespace entropystop {

struct GmmModel {
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    std::vector<Matrix> covariances;  // full, symmetric positive definite

    std::size_t components() const { return weights.size(); }
    std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

namespace detail {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j) m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
    return m;
}

// Lower Cholesky factor; throws DegenerateFit if the matrix is not SPD.
inline Eigen::MatrixXd cholesky(const Matrix& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(cov));
    if (llt.info() != Eigen::Success) throw DegenerateFit("covariance is not positive definite");
    return llt.matrixL();
}

inline double logsumexp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace detail

// Draws n points. Component means are multiplied by `mean_scale` and
// covariances by `cov_scale`.
inline Matrix gmm_sample(const GmmModel& g, std::size_t n, RngStream& rng, double mean_scale = 1.0,
                         double cov_scale = 1.0) {
    const std::size_t d = g.dim();
    if (g.components() == 0 || d == 0) throw InvalidInput("gmm_sample: empty model");
    if (!(cov_scale > 0.0)) throw InvalidInput("gmm_sample: covariance scale must be > 0");
    std::vector<Eigen::MatrixXd> chol;
    for (const auto& c : g.covariances) chol.push_back(detail::cholesky(c) * std::sqrt(cov_scale));
    Matrix out(n, d);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t k = 0;
        while (k + 1 < g.components() && u >= g.weights[k]) {
            u -= g.weights[k];
            ++k;
        }
        for (auto& zi : z) zi = rng.normal();
        const Eigen::VectorXd x = chol[k] * z;
        for (std::size_t j = 0; j < d; ++j) out(i, j) = mean_scale * g.means[k][j] + x(static_cast<Eigen::Index>(j));
    }
    return out;
}

struct GmmFitOptions {
    std::size_t max_iter = 200;
    double tol = 1e-6;       // on the mean per-sample log-likelihood
    double jitter = 1e-6;    // added to every covariance diagonal
    std::size_t max_restarts = 5;
};

struct GmmFit {
    GmmModel model;
    std::vector<double> log_likelihood;  // total log-likelihood after each E-step
    std::size_t restarts = 0;
};

// Per-sample log-density of every component: out(i, k) = log π_k N(x_i | μ_k, Σ_k).
inline Matrix gmm_log_joint(const GmmModel& g, const Matrix& x) {
    const std::size_t d = g.dim();
    if (x.cols() != d) throw ShapeError("gmm: data dim does not match model");
    Matrix out(x.rows(), g.components());
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < g.components(); ++k) {
        const Eigen::MatrixXd l = detail::cholesky(g.covariances[k]);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(l(i, i));
        const double base = std::log(g.weights[k]) - 0.5 * (static_cast<double>(d) * log2pi + logdet);
        Eigen::VectorXd diff(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < d; ++j) diff(static_cast<Eigen::Index>(j)) = x(i, j) - g.means[k][j];
            const Eigen::VectorXd y = l.triangularView<Eigen::Lower>().solve(diff);
            out(i, k) = base - 0.5 * y.squaredNorm();
        }
    }
    return out;
}

inline double gmm_log_likelihood(const GmmModel& g, const Matrix& x) {
    const Matrix lj = gmm_log_joint(g, x);
    double ll = 0.0;
    for (std::size_t i = 0; i < lj.rows(); ++i) ll += detail::logsumexp(lj.row(i));
    return ll;
}

namespace detail {

// k-means++ seeding of the component means.
inline std::vector<std::vector<double>> kmeanspp(const Matrix& x, std::size_t k, RngStream& rng) {
    std::vector<std::vector<double>> centers;
    const std::size_t n = x.rows();
    auto row_vec = [&](std::size_t i) { return std::vector<double>(x.row(i).begin(), x.row(i).end()); };
    centers.push_back(row_vec(static_cast<std::size_t>(rng.below(n))));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        const auto& c = centers.back();
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j) s += (x(i, j) - c[j]) * (x(i, j) - c[j]);
            d2[i] = std::min(d2[i], s);
            total += d2[i];
        }
        std::size_t pick = static_cast<std::size_t>(rng.below(n));
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                u -= d2[i];
                if (u < 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(row_vec(pick));
    }
    return centers;
}

struct DegenerateComponent {};

inline GmmFit em_once(const Matrix& x, std::size_t k, RngStream& rng, const GmmFitOptions& opt) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    GmmModel g;
    g.weights.assign(k, 1.0 / static_cast<double>(k));
    g.means = kmeanspp(x, k, rng);
    {
        const ColumnStats s = col_stats(x);
        Matrix cov(d, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) cov(a, b) += (x(i, a) - s.mean[a]) * (x(i, b) - s.mean[b]);
        for (auto& v : cov.data()) v /= static_cast<double>(n);
        for (std::size_t a = 0; a < d; ++a) cov(a, a) += opt.jitter;
        g.covariances.assign(k, cov);
    }

    GmmFit fit;
    Matrix resp(n, k);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
        // E-step
        const Matrix lj = gmm_log_joint(g, x);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double lse = logsumexp(lj.row(i));
            ll += lse;
            for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(lj(i, c) - lse);
        }
        fit.log_likelihood.push_back(ll);
        if (iter > 0 && std::abs(ll - prev) / static_cast<double>(n) < opt.tol) break;
        prev = ll;

        // M-step
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            for (std::size_t i = 0; i < n; ++i) nk += resp(i, c);
            if (nk < static_cast<double>(d + 1)) throw DegenerateComponent{};
            std::vector<double> mu(d, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) mu[j] += resp(i, c) * x(i, j);
            for (auto& v : mu) v /= nk;
            Matrix cov(d, d);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp(i, c);
                for (std::size_t a = 0; a < d; ++a) {
                    const double da = x(i, a) - mu[a];
                    for (std::size_t b = a; b < d; ++b) cov(a, b) += r * da * (x(i, b) - mu[b]);
                }
            }
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = a; b < d; ++b) {
                    cov(a, b) /= nk;
                    cov(b, a) = cov(a, b);
                }
                cov(a, a) += opt.jitter;
            }
            g.weights[c] = nk / static_cast<double>(n);
            g.means[c] = std::move(mu);
            g.covariances[c] = std::move(cov);
        }
    }
    fit.model = std::move(g);
    return fit;
}

}  // namespace detail

inline GmmFit gmm_fit(const Matrix& x, std::size_t k, RngStream& rng, const GmmFitOptions& opt = {}) {
    if (k < 1) throw InvalidInput("gmm_fit: K must be >= 1");
    if (x.rows() <= k * (x.cols() + 1)) throw InvalidInput("gmm_fit: need n > K*(d+1) samples");
    for (std::size_t attempt = 0; attempt <= opt.max_restarts; ++attempt) {
        try {
            GmmFit fit = detail::em_once(x, k, rng, opt);
            fit.restarts = attempt;
            return fit;
        } catch (const detail::DegenerateComponent&) {
        } catch (const DegenerateFit&) {
        }
    }
    throw DegenerateFit("gmm_fit: every restart produced a degenerate component");
}

// ---------------------------------------------------------------------------
// Outlier injection

enum class OutlierKind { Local, Global, Cluster };

inline std::string to_string(OutlierKind k) {
    switch (k) {
        case OutlierKind::Local: return "local";
        case OutlierKind::Global: return "global";
        case OutlierKind::Cluster: return "cluster";
    }
    return "?";
}

inline OutlierKind parse_outlier_kind(const std::string& s) {
    if (s == "local") return OutlierKind::Local;
    if (s == "global") return OutlierKind::Global;
    if (s == "cluster") return OutlierKind::Cluster;
    throw InvalidInput("unknown outlier kind '" + s + "' (expected local, global or cluster)");
}

inline double default_alpha(OutlierKind k) { return k == OutlierKind::Global ? 1.1 : 5.0; }

struct InjectionConfig {
    OutlierKind kind = OutlierKind::Cluster;
    double alpha = 5.0;
    double ratio = 0.1;
    std::uint64_t seed = 0;
};

inline InjectionConfig injection_defaults(OutlierKind kind, double ratio, std::uint64_t seed) {
    return {kind, default_alpha(kind), ratio, seed};
}

// ceil(ratio / (1 - ratio) * n_in), so that outliers make up `ratio` of the
// final dataset.
inline std::size_t outlier_count(std::size_t n_inliers, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("outlier ratio must be in (0, 1)");
    const double exact = ratio / (1.0 - ratio) * static_cast<double>(n_inliers);
    return static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
}

namespace detail {

inline Dataset combine(const Matrix& inliers, const Matrix& outliers, std::uint64_t seed) {
    const Matrix all = vstack(inliers, outliers);
    std::vector<int> labels(inliers.rows(), 0);
    labels.resize(all.rows(), 1);
    std::vector<std::size_t> perm(all.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    RngStream shuffle_rng(derive_seed(seed, "shuffle"));
    shuffle_rng.shuffle(perm.begin(), perm.end());
    Dataset raw{all, labels, {}};
    return take_rows(raw, perm);
}

inline void check_kind(const InjectionConfig& cfg, OutlierKind expected) {
    if (cfg.kind != expected) throw InvalidInput("injection config kind is " + to_string(cfg.kind));
}

}  // namespace detail

inline Dataset inject_local(const Matrix& inliers, const GmmModel& gmm, const InjectionConfig& cfg) {
    detail::check_kind(cfg, OutlierKind::Local);
    RngStream rng(derive_seed(cfg.seed, "outliers"));
    const Matrix out = gmm_sample(gmm, outlier_count(inliers.rows(), cfg.ratio), rng, 1.0, cfg.alpha);
    return detail::combine(inliers, out, cfg.seed);
}

inline Dataset inject_global(const Matrix& inliers, const InjectionConfig& cfg) {
    detail::check_kind(cfg, OutlierKind::Global);
    const ColumnStats s = col_stats(inliers);
    RngStream rng(derive_seed(cfg.seed, "outliers"));
    Matrix out(outlier_count(inliers.rows(), cfg.ratio), inliers.cols());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = rng.uniform(cfg.alpha * s.min[j], cfg.alpha * s.max[j]);
    return detail::combine(inliers, out, cfg.seed);
}

inline Dataset inject_cluster(const Matrix& inliers, const GmmModel& gmm, const InjectionConfig& cfg) {
    detail::check_kind(cfg, OutlierKind::Cluster);
    bool any = false;
    for (const auto& mu : gmm.means) {
        double n2 = 0.0;
        for (double v : mu) n2 += v * v;
        any = any || std::sqrt(n2) >= 1e-8;
    }
    if (!any) throw DegenerateInjection("inject_cluster: all component means are ~0; inject before standardizing");
    RngStream rng(derive_seed(cfg.seed, "outliers"));
    const Matrix out = gmm_sample(gmm, outlier_count(inliers.rows(), cfg.ratio), rng, cfg.alpha, 1.0);
    return detail::combine(inliers, out, cfg.seed);
}

// Fits a K-component GMM to `inliers` when the kind needs one, then injects.
inline Dataset inject(const Matrix& inliers, const InjectionConfig& cfg, std::size_t k = 2,
                      GmmModel* fitted_out = nullptr) {
    if (cfg.kind == OutlierKind::Global) return inject_global(inliers, cfg);
    RngStream fit_rng(derive_seed(cfg.seed, "gmm_fit"));
    GmmFit fit = gmm_fit(inliers, k, fit_rng);
    if (fitted_out) *fitted_out = fit.model;
    return cfg.kind == OutlierKind::Local ? inject_local(inliers, fit.model, cfg) : inject_cluster(inliers, fit.model, cfg);
}

// ---------------------------------------------------------------------------
// Suites

// Random ground-truth mixture: means uniform in a ball of the given radius,
// covariances Q diag(λ) Qᵀ with λ ~ U(0.5, 1.5) and Q a random rotation.
inline GmmModel random_gmm(std::size_t k, std::size_t d, RngStream& rng, double radius = 3.0) {
    GmmModel g;
    double wsum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double w = rng.uniform(0.5, 1.5);
        g.weights.push_back(w);
        wsum += w;

        std::vector<double> dir(d);
        double norm = 0.0;
        for (auto& v : dir) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
        for (auto& v : dir) v = v / norm * r;
        g.means.push_back(std::move(dir));

        Eigen::MatrixXd a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
        Eigen::VectorXd lambda(static_cast<Eigen::Index>(d));
        for (auto& l : lambda) l = rng.uniform(0.5, 1.5);
        Eigen::MatrixXd cov = q * lambda.asDiagonal() * q.transpose();
        cov = 0.5 * (cov + cov.transpose());
        g.covariances.push_back(detail::from_eigen(cov));
    }
    for (auto& w : g.weights) w /= wsum;
    return g;
}

struct SuiteConfig {
    std::size_t n_datasets = 10;
    std::size_t n = 1000;  // inliers per dataset
    std::size_t d = 8;
    std::size_t k = 2;
    std::vector<OutlierKind> kinds{OutlierKind::Cluster};
    std::vector<double> ratios{0.1};
    std::uint64_t seed = 0;
    bool standardize = true;
    std::optional<double> alpha;  // overrides the per-kind default
};

struct SuiteEntry {
    Dataset data;  // standardized after injection unless disabled
    InjectionConfig injection;
    std::size_t base_index = 0;
    std::uint64_t base_seed = 0;
    GmmModel truth;
    std::optional<GmmModel> fitted;
};

// For each base index a ground-truth mixture and inlier pool are drawn once;
// every (kind, ratio) pair is injected into that same pool.
inline std::vector<SuiteEntry> make_synthetic_suite(const SuiteConfig& cfg) {
    if (cfg.n_datasets < 1 || cfg.d < 1 || cfg.k < 1) throw InvalidInput("suite: sizes must be >= 1");
    if (cfg.kinds.empty() || cfg.ratios.empty()) throw InvalidInput("suite: kinds and ratios must be non-empty");
    std::vector<SuiteEntry> suite;
    for (std::size_t i = 0; i < cfg.n_datasets; ++i) {
        const std::uint64_t base_seed = derive_seed(cfg.seed, i + 1);
        RngStream truth_rng(derive_seed(base_seed, "truth"));
        GmmModel truth = random_gmm(cfg.k, cfg.d, truth_rng);
        RngStream sample_rng(derive_seed(base_seed, "inliers"));
        const Matrix inliers = gmm_sample(truth, cfg.n, sample_rng);
        for (OutlierKind kind : cfg.kinds) {
            for (double ratio : cfg.ratios) {
                InjectionConfig inj =
                    injection_defaults(kind, ratio, derive_seed(base_seed, to_string(kind) + std::to_string(ratio)));
                if (cfg.alpha) inj.alpha = *cfg.alpha;
                GmmModel fitted;
                Dataset ds = inject(inliers, inj, cfg.k, &fitted);
                if (cfg.standardize) ds = standardize(ds);
                char ratio_buf[16];
                std::snprintf(ratio_buf, sizeof(ratio_buf), "%g", ratio);
                char idx_buf[16];
                std::snprintf(idx_buf, sizeof(idx_buf), "%03zu", i);
                ds.name = to_string(kind) + "_" + ratio_buf + "_" + idx_buf;
                SuiteEntry e{std::move(ds), inj, i, base_seed, truth, std::nullopt};
                if (kind != OutlierKind::Global) e.fitted = std::move(fitted);
                suite.push_back(std::move(e));
            }
        }
    }
    return suite;
}

}  // namespace entropystop
