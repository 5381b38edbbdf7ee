#include "mfpca/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfpca::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

CrossMoments cross_moments(const Eigen::MatrixXd& centered, const std::vector<CurveGroup>& groups) {
    const Eigen::Index length = centered.cols();

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), length);
    double pairs = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t idx : groups[g].members) sums.row(static_cast<Eigen::Index>(g)) += centered.row(static_cast<Eigen::Index>(idx));
        const double m = static_cast<double>(groups[g].members.size());
        pairs += m * (m - 1.0);
    }

    CrossMoments out;
    out.all.resize(length, length);
    out.within_pairs.resize(length, length);
    out.pair_count = pairs;

    // Column-major storage: the inner sums run over contiguous columns.
#pragma omp parallel for schedule(dynamic, 4)
    for (Eigen::Index s = 0; s < length; ++s) {
        for (Eigen::Index t = s; t < length; ++t) {
            const double all = centered.col(s).dot(centered.col(t));
            const double subj = sums.col(s).dot(sums.col(t));
            out.all(s, t) = all;
            out.all(t, s) = all;
            out.within_pairs(s, t) = subj - all;
            out.within_pairs(t, s) = subj - all;
        }
    }
    return out;
}

std::vector<double> band_depths(const Eigen::MatrixXd& curves) {
    const Eigen::Index n = curves.rows();
    const Eigen::Index length = curves.cols();

    std::vector<std::vector<double>> sorted(static_cast<std::size_t>(length));
#pragma omp parallel for
    for (Eigen::Index l = 0; l < length; ++l) {
        auto& column = sorted[static_cast<std::size_t>(l)];
        column.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = curves(i, l);
        std::sort(column.begin(), column.end());
    }

    auto choose2 = [](std::uint64_t m) { return m * (m - (m > 0 ? 1 : 0)) / 2; };
    const std::uint64_t pairs = choose2(static_cast<std::uint64_t>(n));
    std::vector<double> depth(static_cast<std::size_t>(n));

    // A pair {g, h} misses f at a point only if both lie strictly below or
    // both strictly above f there.
#pragma omp parallel for
    for (Eigen::Index i = 0; i < n; ++i) {
        std::uint64_t inside = 0;
        for (Eigen::Index l = 0; l < length; ++l) {
            const auto& column = sorted[static_cast<std::size_t>(l)];
            const double f = curves(i, l);
            const auto below = static_cast<std::uint64_t>(std::lower_bound(column.begin(), column.end(), f) - column.begin());
            const auto above = static_cast<std::uint64_t>(column.end() - std::upper_bound(column.begin(), column.end(), f));
            inside += pairs - choose2(below) - choose2(above);
        }
        depth[static_cast<std::size_t>(i)] =
            static_cast<double>(inside) / (static_cast<double>(pairs) * static_cast<double>(length));
    }
    return depth;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& centered, const std::vector<double>& weights,
                        const Eigen::MatrixXd& basis) {
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::MatrixXd weighted_basis = w.asDiagonal() * basis;
    Eigen::MatrixXd out(centered.rows(), basis.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < centered.rows(); ++i) {
        out.row(i).noalias() = centered.row(i) * weighted_basis;
    }
    return out;
}

namespace serial {

CrossMoments cross_moments(const Eigen::MatrixXd& centered, const std::vector<CurveGroup>& groups) {
    const Eigen::Index length = centered.cols();
    CrossMoments out;
    out.all = Eigen::MatrixXd::Zero(length, length);
    out.within_pairs = Eigen::MatrixXd::Zero(length, length);
    for (Eigen::Index r = 0; r < centered.rows(); ++r) {
        for (Eigen::Index s = 0; s < length; ++s) {
            for (Eigen::Index t = 0; t < length; ++t) out.all(s, t) += centered(r, s) * centered(r, t);
        }
    }
    for (const auto& group : groups) {
        for (std::size_t j : group.members) {
            for (std::size_t k : group.members) {
                if (j == k) continue;
                out.pair_count += 1.0;
                const auto a = static_cast<Eigen::Index>(j);
                const auto b = static_cast<Eigen::Index>(k);
                for (Eigen::Index s = 0; s < length; ++s) {
                    for (Eigen::Index t = 0; t < length; ++t) out.within_pairs(s, t) += centered(a, s) * centered(b, t);
                }
            }
        }
    }
    return out;
}

std::vector<double> band_depths(const Eigen::MatrixXd& curves) {
    const Eigen::Index n = curves.rows();
    const Eigen::Index length = curves.cols();
    std::vector<double> depth(static_cast<std::size_t>(n), 0.0);
    double pairs = 0.0;
    for (Eigen::Index g = 0; g < n; ++g) {
        for (Eigen::Index h = g + 1; h < n; ++h) {
            pairs += 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index inside = 0;
                for (Eigen::Index l = 0; l < length; ++l) {
                    const double lo = std::min(curves(g, l), curves(h, l));
                    const double hi = std::max(curves(g, l), curves(h, l));
                    if (lo <= curves(i, l) && curves(i, l) <= hi) ++inside;
                }
                depth[static_cast<std::size_t>(i)] += static_cast<double>(inside) / static_cast<double>(length);
            }
        }
    }
    for (double& d : depth) d /= pairs;
    return depth;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& centered, const std::vector<double>& weights,
                        const Eigen::MatrixXd& basis) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(centered.rows(), basis.cols());
    for (Eigen::Index i = 0; i < centered.rows(); ++i) {
        for (Eigen::Index k = 0; k < basis.cols(); ++k) {
            double sum = 0.0;
            for (Eigen::Index l = 0; l < centered.cols(); ++l) {
                sum += centered(i, l) * basis(l, k) * weights[static_cast<std::size_t>(l)];
            }
            out(i, k) = sum;
        }
    }
    return out;
}

} // namespace serial

} // namespace mfpca::kernels
