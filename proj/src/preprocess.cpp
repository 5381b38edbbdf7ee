#include "mfpca/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfpca/error.hpp"
#include "mfpca/kernels.hpp"

namespace mfpca {

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

} // namespace

std::size_t QcReport::passed_count() const {
    return static_cast<std::size_t>(std::count_if(per_cycle.begin(), per_cycle.end(), [](const CycleQc& c) { return c.passed; }));
}

QcReport template_qc(const CurveSet& cycles, double r_min, std::size_t min_good) {
    if (cycles.size() < 2) throw Error(ErrorKind::insufficient_data, "template matching needs at least 2 cycles");
    const std::size_t length = cycles.length();

    QcReport report;
    report.template_curve.assign(length, 0.0);
    for (const auto& rec : cycles.records()) {
        for (std::size_t l = 0; l < length; ++l) report.template_curve[l] += rec.values[l];
    }
    for (double& v : report.template_curve) v /= static_cast<double>(cycles.size());

    for (const auto& rec : cycles.records()) {
        CycleQc qc;
        qc.key = rec.key();
        qc.correlation = pearson(rec.values, report.template_curve);
        qc.zero_variance = std::isnan(qc.correlation);
        qc.passed = !qc.zero_variance && qc.correlation >= r_min;
        report.per_cycle.push_back(std::move(qc));
    }
    report.recording_good = report.passed_count() >= min_good;
    return report;
}

std::vector<double> mbd_depths(const CurveSet& curves) {
    if (curves.size() < 2) throw Error(ErrorKind::insufficient_data, "band depth needs at least 2 curves");
    return kernels::band_depths(curves.matrix());
}

std::vector<std::size_t> boxplot_outliers(const CurveSet& curves, double factor) {
    if (curves.size() < 4) throw Error(ErrorKind::insufficient_data, "functional boxplot needs at least 4 curves");
    if (!(factor >= 0.0)) throw Error(ErrorKind::config, "fence factor must be nonnegative");
    const auto depth = mbd_depths(curves);
    std::vector<std::size_t> order(curves.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });

    const std::size_t central = (curves.size() + 1) / 2;
    const std::size_t length = curves.length();
    std::vector<double> lower(length, std::numeric_limits<double>::infinity());
    std::vector<double> upper(length, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < central; ++r) {
        const auto& v = curves[order[r]].values;
        for (std::size_t l = 0; l < length; ++l) {
            lower[l] = std::min(lower[l], v[l]);
            upper[l] = std::max(upper[l], v[l]);
        }
    }
    for (std::size_t l = 0; l < length; ++l) {
        const double inflate = factor * (upper[l] - lower[l]);
        lower[l] -= inflate;
        upper[l] += inflate;
    }

    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& v = curves[i].values;
        for (std::size_t l = 0; l < length; ++l) {
            if (v[l] < lower[l] || v[l] > upper[l]) {
                flagged.push_back(i);
                break;
            }
        }
    }
    return flagged;
}

LandmarkSet LandmarkSet::ecg_default() { return {{"P", "R", "T"}, {0.104, 0.25, 0.508}}; }

LandmarkSet locate_landmarks(std::span<const double> values, const Grid& grid, std::span<const LandmarkWindow> windows) {
    if (values.size() != grid.size()) throw Error(ErrorKind::dimension, "curve does not match the grid");
    LandmarkSet out;
    double previous_hi = -std::numeric_limits<double>::infinity();
    for (const auto& window : windows) {
        if (!(window.lo < window.hi) || window.lo < previous_hi) {
            throw Error(ErrorKind::config, "landmark windows must be ordered and disjoint");
        }
        previous_hi = window.hi;

        std::size_t first = grid.size(), last = 0;
        for (std::size_t l = 0; l < grid.size(); ++l) {
            if (grid.points[l] >= window.lo && grid.points[l] <= window.hi) {
                first = std::min(first, l);
                last = l;
            }
        }
        if (first == grid.size() || last < first + 2) {
            throw Error(ErrorKind::landmark_not_found, "window " + window.name + " holds too few grid points");
        }
        std::size_t best = first;
        for (std::size_t l = first; l <= last; ++l) {
            if (values[l] > values[best]) best = l;
        }
        if (best == first || best == last || !(values[best] > values[first]) || !(values[best] > values[last])) {
            throw Error(ErrorKind::landmark_not_found,
                        "no interior peak in window " + window.name + " [" + format_double(window.lo) + ", " +
                            format_double(window.hi) + "]");
        }
        out.names.push_back(window.name);
        out.times.push_back(grid.points[best]);
    }
    return out;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw Error(ErrorKind::invalid_landmarks, "monotone interpolant needs >= 2 anchors");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x_[k + 1] - x_[k];
        if (!(h[k] > 0.0)) throw Error(ErrorKind::invalid_landmarks, "anchor abscissae must be strictly increasing");
        delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    slopes_.assign(n, 0.0);
    if (n == 2) {
        slopes_[0] = slopes_[1] = delta[0];
        return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] > 0.0) {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            slopes_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return d;
    };
    slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double MonotoneCubic::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * y_[k] + (s3 - 2.0 * s2 + s) * h * slopes_[k] +
           (-2.0 * s3 + 3.0 * s2) * y_[k + 1] + (s3 - s2) * h * slopes_[k + 1];
}

Registration landmark_register(std::span<const double> values, const Grid& grid, const LandmarkSet& source,
                               const LandmarkSet& target) {
    if (values.size() != grid.size()) throw Error(ErrorKind::dimension, "curve does not match the grid");
    if (source.times.size() != target.times.size()) {
        throw Error(ErrorKind::invalid_landmarks, "source and target landmark counts differ");
    }
    const double lo = grid.points.front();
    const double hi = grid.points.back();
    std::vector<double> x{lo}, y{lo};
    for (std::size_t k = 0; k < source.times.size(); ++k) {
        x.push_back(target.times[k]);
        y.push_back(source.times[k]);
    }
    x.push_back(hi);
    y.push_back(hi);
    for (std::size_t k = 1; k < x.size(); ++k) {
        if (!(x[k] > x[k - 1]) || !(y[k] > y[k - 1])) {
            throw Error(ErrorKind::invalid_landmarks, "landmarks must be strictly increasing and inside the domain");
        }
    }
    MonotoneCubic warp(std::move(x), std::move(y));
    Registration out;
    out.warp.resize(grid.size());
    out.registered.resize(grid.size());
    for (std::size_t l = 0; l < grid.size(); ++l) {
        out.warp[l] = warp(grid.points[l]);
        out.registered[l] = interpolate_linear(grid.points, values, out.warp[l]);
    }
    return out;
}

} // namespace mfpca
