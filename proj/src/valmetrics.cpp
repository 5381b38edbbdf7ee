#include "mfpca/valmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfpca/error.hpp"
#include "mfpca/special.hpp"

namespace mfpca {

IccResult icc(const Eigen::MatrixXd& values) {
    const Eigen::Index n = values.rows();
    const Eigen::Index k = values.cols();
    if (n < 2 || k < 2) throw Error(ErrorKind::insufficient_data, "ICC needs at least 2 subjects and 2 occasions");
    if (!values.allFinite()) throw Error(ErrorKind::insufficient_data, "incomplete design: missing or non-finite cell");

    const double grand = values.mean();
    const Eigen::VectorXd row_means = values.rowwise().mean();
    const Eigen::RowVectorXd col_means = values.colwise().mean();
    const double ss_total = (values.array() - grand).square().sum();
    if (!(ss_total > 0.0)) throw Error(ErrorKind::undefined, "ICC is undefined for zero total variance");
    const double ss_rows = static_cast<double>(k) * (row_means.array() - grand).square().sum();
    const double ss_cols = static_cast<double>(n) * (col_means.array() - grand).square().sum();
    const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

    IccResult out;
    out.n = n;
    out.k = k;
    out.msr = ss_rows / static_cast<double>(n - 1);
    out.msc = ss_cols / static_cast<double>(k - 1);
    out.mse = ss_error / static_cast<double>((n - 1) * (k - 1));
    const double kk = static_cast<double>(k);
    out.icc_c1 = (out.msr - out.mse) / (out.msr + (kk - 1.0) * out.mse);
    out.icc_a1 = (out.msr - out.mse) /
                 (out.msr + (kk - 1.0) * out.mse + kk / static_cast<double>(n) * (out.msc - out.mse));
    return out;
}

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

struct RankSummary {
    double u = 0.0;           // for the second sample
    double tie_term = 0.0;    // sum of t^3 - t over tie groups
    bool ties = false;
};

RankSummary rank_summary(std::span<const double> x, std::span<const double> y) {
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = midranks(pooled);
    double rank_sum_y = 0.0;
    for (std::size_t i = x.size(); i < pooled.size(); ++i) rank_sum_y += ranks[i];
    const double n2 = static_cast<double>(y.size());

    RankSummary out;
    out.u = rank_sum_y - n2 * (n2 + 1.0) / 2.0;
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1.0) {
            out.ties = true;
            out.tie_term += t * t * t - t;
        }
        i = j + 1;
    }
    return out;
}

// Number of arrangements giving each value of U for sample sizes (m, n),
// via f(u; m, n) = f(u - n; m - 1, n) + f(u; m, n - 1).
std::vector<double> exact_u_counts(std::size_t m, std::size_t n) {
    // table[i][j] over u, built incrementally in n for every m' <= m
    std::vector<std::vector<std::vector<double>>> table(m + 1, std::vector<std::vector<double>>(n + 1));
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = 0; j <= n; ++j) {
            auto& cell = table[i][j];
            cell.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                cell[0] = 1.0;
                continue;
            }
            const auto& drop_x = table[i - 1][j];
            const auto& drop_y = table[i][j - 1];
            for (std::size_t u = 0; u <= i * j; ++u) {
                double v = 0.0;
                if (u >= j && u - j < drop_x.size()) v += drop_x[u - j];
                if (u < drop_y.size()) v += drop_y[u];
                cell[u] = v;
            }
        }
    }
    return table[m][n];
}

} // namespace

MannWhitneyResult mann_whitney(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw Error(ErrorKind::insufficient_data, "Mann-Whitney needs two non-empty groups");
    const auto summary = rank_summary(x, y);
    const double n1 = static_cast<double>(x.size());
    const double n2 = static_cast<double>(y.size());

    MannWhitneyResult out;
    out.u = summary.u;
    out.u_min = std::min(summary.u, n1 * n2 - summary.u);

    if (x.size() + y.size() <= 20 && !summary.ties) {
        out.exact = true;
        const auto counts = exact_u_counts(y.size(), x.size());
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto u = static_cast<std::size_t>(std::llround(out.u));
        double lower = 0.0, upper = 0.0;
        for (std::size_t v = 0; v < counts.size(); ++v) {
            if (v <= u) lower += counts[v];
            if (v >= u) upper += counts[v];
        }
        out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        return out;
    }

    const double n = n1 + n2;
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - summary.tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) {
        out.p_value = 1.0;
        return out;
    }
    const double z = std::max(0.0, std::abs(out.u - n1 * n2 / 2.0) - 0.5) / std::sqrt(variance);
    out.p_value = std::min(1.0, 2.0 * special::normal_upper_tail(z));
    return out;
}

GroupTestResult group_test(std::span<const double> group1, std::span<const double> group2) {
    const auto mw = mann_whitney(group1, group2);
    GroupTestResult out;
    out.u_statistic = mw.u;
    out.p_value = mw.p_value;
    out.n1 = group1.size();
    out.n2 = group2.size();
    out.auc = mw.u / (static_cast<double>(out.n1) * static_cast<double>(out.n2));
    return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorKind::dimension, "scores and labels differ in length");
    std::vector<double> negatives, positives;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorKind::domain, "labels must be 0 or 1");
        (labels[i] ? positives : negatives).push_back(scores[i]);
    }
    if (negatives.empty() || positives.empty()) {
        throw Error(ErrorKind::insufficient_data, "AUC needs both label classes");
    }
    const auto summary = rank_summary(negatives, positives);
    return summary.u / (static_cast<double>(negatives.size()) * static_cast<double>(positives.size()));
}

double correlation(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
    if (x.size() != y.size()) throw Error(ErrorKind::dimension, "correlation inputs differ in length");
    if (x.size() < 3) throw Error(ErrorKind::insufficient_data, "correlation needs at least 3 pairs");
    std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
    if (method == CorrelationMethod::spearman) {
        a = midranks(x);
        b = midranks(y);
    }
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorKind::undefined, "correlation is undefined for constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

OlsResult ols_simple(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::dimension, "regression inputs differ in length");
    if (x.size() < 3) throw Error(ErrorKind::insufficient_data, "simple regression needs n >= 3 (n - 2 degrees of freedom)");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::rank, "regressor is constant");

    OlsResult out;
    out.n = x.size();
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - out.intercept - out.slope * x[i];
        rss += r * r;
    }
    if (!(syy > 0.0)) {
        out.r_squared = std::numeric_limits<double>::quiet_NaN();
        out.t_statistic = std::numeric_limits<double>::quiet_NaN();
        out.p_slope = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.r_squared = sxy * sxy / (sxx * syy);
    const double df = n - 2.0;
    // Relative to the signal, a residual at rounding level is an exact fit.
    if (rss <= 1e-28 * syy) {
        out.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), out.slope);
        out.p_slope = 0.0;
        return out;
    }
    const double se = std::sqrt(rss / df / sxx);
    out.t_statistic = out.slope / se;
    out.p_slope = special::student_t_two_sided(out.t_statistic, df);
    return out;
}

double ks_uniform(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::insufficient_data, "KS statistic needs data");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double u = std::clamp(sorted[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    return d;
}

} // namespace mfpca
