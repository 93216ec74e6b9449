#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "entropystop/errors.hpp"
#include "entropystop/matrix.hpp"

namespace entropystop {

// 1-based ranks with ties assigned their average rank.
inline std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = r;
        i = j;
    }
    return rank;
}

// ROC AUC through the Mann-Whitney statistic; label 1 is the positive
// (outlier) class and ties count one half.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
    std::size_t m = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw InvalidInput("auc: labels must be 0/1");
        m += static_cast<std::size_t>(l);
    }
    const std::size_t n = labels.size();
    if (m == 0 || m == n) throw InvalidInput("auc: labels contain a single class");
    for (double s : scores)
        if (!std::isfinite(s)) throw NumericalError("auc: non-finite score");
    const auto rank = midranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == 1) rank_sum += rank[i];
    const auto mp = static_cast<double>(m);
    const auto mn = static_cast<double>(n - m);
    return (rank_sum - mp * (mp + 1.0) / 2.0) / (mp * mn);
}

// Score_AUC: for each algorithm (row), the mean over datasets (columns) of its
// AUC divided by the best AUC on that dataset.
inline std::vector<double> score_auc(const Matrix& auc_table) {
    if (auc_table.rows() == 0 || auc_table.cols() == 0) throw InvalidInput("score_auc: empty table");
    std::vector<double> col_max(auc_table.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < auc_table.rows(); ++i)
        for (std::size_t j = 0; j < auc_table.cols(); ++j) col_max[j] = std::max(col_max[j], auc_table(i, j));
    for (double v : col_max)
        if (!(v > 0.0)) throw InvalidInput("score_auc: a dataset column has no positive AUC");
    std::vector<double> out(auc_table.rows(), 0.0);
    for (std::size_t i = 0; i < auc_table.rows(); ++i) {
        for (std::size_t j = 0; j < auc_table.cols(); ++j) out[i] += auc_table(i, j) / col_max[j];
        out[i] /= static_cast<double>(auc_table.cols());
    }
    return out;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
    if (x.size() < 2) throw InvalidInput("pearson: need at least two points");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw InvalidInput("pearson: constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Paired Wilcoxon signed-rank test, alternative: median(a - b) > 0.

struct TestReport {
    double statistic = 0.0;  // W+: sum of ranks of positive differences
    double p_value = 1.0;
    std::size_t n_effective = 0;
    bool exact = false;
};

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline TestReport wilcoxon_one_sided(std::span<const double> a, std::span<const double> b,
                                     std::size_t exact_max_n = 20) {
    if (a.size() != b.size()) throw ShapeError("wilcoxon: samples differ in length");
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (!std::isfinite(d)) throw NumericalError("wilcoxon: non-finite difference");
        if (d != 0.0) diff.push_back(d);
    }
    if (diff.empty()) throw InvalidInput("wilcoxon: all differences are zero");

    std::vector<double> absd(diff.size());
    std::transform(diff.begin(), diff.end(), absd.begin(), [](double d) { return std::abs(d); });
    const auto rank = midranks(absd);

    TestReport r;
    r.n_effective = diff.size();
    for (std::size_t i = 0; i < diff.size(); ++i)
        if (diff[i] > 0.0) r.statistic += rank[i];

    const std::size_t n = diff.size();
    if (n <= exact_max_n) {
        // Midranks are multiples of 1/2, so doubled ranks are integers and the
        // null distribution of 2W+ is a subset-sum count over 2^n sign patterns.
        std::vector<std::size_t> twice(n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            twice[i] = static_cast<std::size_t>(std::llround(2.0 * rank[i]));
            total += twice[i];
        }
        std::vector<double> count(total + 1, 0.0);
        count[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t w : twice) {
            for (std::size_t s = reach + 1; s-- > 0;) count[s + w] += count[s];
            reach += w;
        }
        const auto observed = static_cast<std::size_t>(std::llround(2.0 * r.statistic));
        double tail = 0.0;
        for (std::size_t s = observed; s <= total; ++s) tail += count[s];
        r.p_value = std::ldexp(tail, -static_cast<int>(n));
        r.exact = true;
        return r;
    }

    const auto nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    {
        std::vector<double> sorted = absd;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i + 1;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const auto t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (r.statistic - mean - 0.5) / std::sqrt(var);
    r.p_value = std::clamp(normal_sf(z), std::numeric_limits<double>::min(), 1.0);
    return r;
}

}  // namespace entropystop
