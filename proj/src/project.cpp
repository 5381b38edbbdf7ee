#include "mfpca/project.hpp"

#include <cmath>
#include <map>

#include "mfpca/error.hpp"
#include "mfpca/kernels.hpp"

namespace mfpca {

namespace {

void check_grid(const MfpcaModel& model, std::size_t length) {
    if (length != model.grid.size()) {
        throw Error(ErrorKind::dimension, "curves have " + std::to_string(length) + " points, model grid has " +
                                              std::to_string(model.grid.size()));
    }
}

} // namespace

double shrinkage_factor(double eigenvalue, double noise_variance) {
    if (eigenvalue <= 0.0) return 0.0;
    return eigenvalue / (eigenvalue + noise_variance);
}

Eigen::VectorXd fpca_project(const MfpcaModel& model, std::span<const double> curve) {
    check_grid(model, curve.size());
    const Eigen::Map<const Eigen::VectorXd> y(curve.data(), static_cast<Eigen::Index>(curve.size()));
    const Eigen::Map<const Eigen::VectorXd> w(model.grid.weights.data(), static_cast<Eigen::Index>(model.grid.size()));
    const Eigen::VectorXd centered = (y - model.mean).cwiseProduct(w);
    return model.level1.eigenfunctions.transpose() * centered;
}

Projection mfpca_project(const MfpcaModel& model, const CurveSet& curves, const ProjectOptions& options) {
    check_grid(model, curves.length());
    for (std::size_t l = 0; l < model.grid.size(); ++l) {
        if (std::abs(curves.grid().points[l] - model.grid.points[l]) > 1e-9) {
            throw Error(ErrorKind::dimension, "curves are not sampled on the model grid");
        }
    }
    const Eigen::MatrixXd centered = curves.matrix().rowwise() - model.mean.transpose();
    const auto& phi1 = model.level1.eigenfunctions;
    const auto& phi2 = model.level2.eigenfunctions;
    const Eigen::Index k1 = model.level1.size();
    const Eigen::Index k2 = model.level2.size();
    const Eigen::Index n = centered.rows();

    Projection out;
    out.scores.per_occasion = options.per_occasion;
    for (const auto& rec : curves.records()) out.scores.curves.push_back(rec.key());

    // (1) raw level-1 projections c_ijk
    const Eigen::MatrixXd raw1 = kernels::project(centered, model.grid.weights, phi1);

    // (2)-(3) unit averages and EBLUP shrinkage
    Eigen::MatrixXd eblup1(n, k1);
    for (const auto& group : curves.groups(options.per_occasion)) {
        const double n_i = static_cast<double>(group.members.size());
        Eigen::RowVectorXd mean_raw = Eigen::RowVectorXd::Zero(k1);
        for (std::size_t idx : group.members) mean_raw += raw1.row(static_cast<Eigen::Index>(idx));
        mean_raw /= n_i;
        Eigen::RowVectorXd score(k1);
        for (Eigen::Index k = 0; k < k1; ++k) {
            const double factor = shrinkage_factor(model.level1.eigenvalues(k), model.sigma_e / n_i);
            score(k) = factor * mean_raw(k);
            out.scores.between.push_back({group.subject_id, group.occasion_id, static_cast<int>(k + 1), mean_raw(k),
                                          score(k), factor, group.members.size()});
        }
        for (std::size_t idx : group.members) eblup1.row(static_cast<Eigen::Index>(idx)) = score;
    }

    // (4)-(5) fitted level-1 functions and residuals
    out.fitted.level1 = eblup1 * phi1.transpose();
    out.fitted.residual = centered - out.fitted.level1;

    // (6)-(8) within-curve projections, EBLUP and fitted level-2 functions
    const Eigen::MatrixXd raw2 = kernels::project(out.fitted.residual, model.grid.weights, phi2);
    Eigen::MatrixXd eblup2(n, k2);
    for (Eigen::Index k = 0; k < k2; ++k) {
        eblup2.col(k) = shrinkage_factor(model.level2.eigenvalues(k), model.sigma_e) * raw2.col(k);
    }
    out.fitted.level2 = eblup2 * phi2.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = curves[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < k2; ++k) {
            out.scores.within.push_back(
                {rec.subject_id, rec.occasion_id, rec.curve_id, static_cast<int>(k + 1), raw2(i, k), eblup2(i, k)});
        }
    }
    return out;
}

Eigen::MatrixXd ScoreTable::between_matrix() const {
    int k1 = 0;
    for (const auto& row : between) k1 = std::max(k1, row.component);
    std::vector<std::pair<std::string, std::string>> units;
    std::map<std::pair<std::string, std::string>, Eigen::Index> index;
    for (const auto& row : between) {
        auto key = std::make_pair(row.subject_id, row.occasion_id);
        if (index.emplace(key, static_cast<Eigen::Index>(units.size())).second) units.push_back(key);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units.size()), k1);
    for (const auto& row : between) out(index.at({row.subject_id, row.occasion_id}), row.component - 1) = row.score;
    return out;
}

Eigen::MatrixXd ScoreTable::within_matrix() const {
    int k2 = 0;
    for (const auto& row : within) k2 = std::max(k2, row.component);
    std::map<CurveKey, Eigen::Index> index;
    for (std::size_t i = 0; i < curves.size(); ++i) index.emplace(curves[i], static_cast<Eigen::Index>(i));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(curves.size()), k2);
    for (const auto& row : within) {
        out(index.at({row.subject_id, row.occasion_id, row.curve_id}), row.component - 1) = row.score;
    }
    return out;
}

CurveSet reconstruct(const MfpcaModel& model, const ScoreTable& scores) {
    const Eigen::Index k1 = model.level1.size();
    const Eigen::Index k2 = model.level2.size();
    std::map<std::pair<std::string, std::string>, Eigen::VectorXd> unit_scores;
    for (const auto& row : scores.between) {
        if (row.component < 1 || row.component > k1) {
            throw Error(ErrorKind::dimension, "between component " + std::to_string(row.component) + " is not in the model");
        }
        auto& v = unit_scores.try_emplace({row.subject_id, row.occasion_id}, Eigen::VectorXd::Zero(k1)).first->second;
        v(row.component - 1) = row.score;
    }
    std::map<CurveKey, Eigen::VectorXd> curve_scores;
    for (const auto& row : scores.within) {
        if (row.component < 1 || row.component > k2) {
            throw Error(ErrorKind::dimension, "within component " + std::to_string(row.component) + " is not in the model");
        }
        auto& v = curve_scores.try_emplace({row.subject_id, row.occasion_id, row.curve_id}, Eigen::VectorXd::Zero(k2))
                      .first->second;
        v(row.component - 1) = row.score;
    }

    std::vector<CurveRecord> records;
    for (const auto& key : scores.curves) {
        Eigen::VectorXd y = model.mean;
        const std::string occasion = scores.per_occasion ? key.occasion_id : std::string(pooled_token);
        if (auto it = unit_scores.find({key.subject_id, occasion}); it != unit_scores.end()) {
            y += model.level1.eigenfunctions * it->second;
        }
        if (auto it = curve_scores.find(key); it != curve_scores.end()) {
            y += model.level2.eigenfunctions * it->second;
        }
        records.push_back({key.subject_id, key.occasion_id, key.curve_id, {y.data(), y.data() + y.size()}, {}});
    }
    return CurveSet(model.grid, std::move(records));
}

} // namespace mfpca
