#include "mfpca/model.hpp"

#include <algorithm>
#include <cmath>

#include "mfpca/error.hpp"
#include "mfpca/kernels.hpp"
#include "mfpca/project.hpp"

namespace mfpca {

namespace {

Eigen::VectorXd column_means(const Eigen::MatrixXd& data) { return data.colwise().mean().transpose(); }

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Level truncate(const Eigenstructure& eig, Eigen::Index k) {
    return {eig.values.head(k), eig.functions.leftCols(k)};
}

double cumulative_fraction(const Eigen::VectorXd& values, Eigen::Index k) {
    const double total = values.sum();
    return total > 0.0 ? values.head(k).sum() / total : 0.0;
}

void check_pve(double pve, const char* name) {
    if (!(pve > 0.0 && pve <= 1.0)) {
        throw Error(ErrorKind::config, std::string(name) + " must lie in (0, 1]");
    }
}

double mean_squared(const Eigen::MatrixXd& residual) {
    return residual.size() == 0 ? 0.0 : residual.squaredNorm() / static_cast<double>(residual.size());
}

} // namespace

double orthonormality_error(const Eigen::MatrixXd& functions, const Grid& grid) {
    if (functions.cols() == 0) return 0.0;
    const Eigen::Map<const Eigen::VectorXd> w(grid.weights.data(), static_cast<Eigen::Index>(grid.weights.size()));
    const Eigen::MatrixXd gram = functions.transpose() * w.asDiagonal() * functions;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

void MfpcaModel::validate(ErrorKind kind) const {
    try {
        grid.validate();
    } catch (const Error& e) {
        throw Error(kind, e.what());
    }
    const auto length = static_cast<Eigen::Index>(grid.size());
    if (mean.size() != length) throw Error(kind, "mean has the wrong length");
    if (!mean.allFinite()) throw Error(kind, "mean holds non-finite values");
    if (!(sigma_e >= 0.0) || !std::isfinite(sigma_e)) throw Error(kind, "sigma_e must be a nonnegative number");
    auto check_level = [&](const Level& level, const char* name) {
        const std::string label(name);
        if (level.eigenfunctions.cols() != level.eigenvalues.size()) {
            throw Error(kind, label + ": eigenvalue and eigenfunction counts differ");
        }
        if (level.eigenvalues.size() > 0 && level.eigenfunctions.rows() != length) {
            throw Error(kind, label + ": eigenfunction length differs from the grid");
        }
        if (!level.eigenfunctions.allFinite() || !level.eigenvalues.allFinite()) {
            throw Error(kind, label + ": non-finite entries");
        }
        for (Eigen::Index k = 0; k < level.eigenvalues.size(); ++k) {
            if (level.eigenvalues(k) < 0.0) throw Error(kind, label + ": negative eigenvalue");
            if (k > 0 && level.eigenvalues(k) > level.eigenvalues(k - 1)) {
                throw Error(kind, label + ": eigenvalues must be nonincreasing");
            }
            const auto col = level.eigenfunctions.col(k);
            if (col.maxCoeff() < -col.minCoeff() - 1e-12) {
                throw Error(kind, label + ": eigenfunction " + std::to_string(k + 1) + " violates the sign convention");
            }
        }
        if (orthonormality_error(level.eigenfunctions, grid) > 1e-8) {
            throw Error(kind, label + ": eigenfunctions are not orthonormal");
        }
    };
    check_level(level1, "level1");
    check_level(level2, "level2");
}

CovariancePair estimate_covariances(const CurveSet& curves, const Eigen::VectorXd& mean) {
    if (mean.size() != static_cast<Eigen::Index>(curves.length())) {
        throw Error(ErrorKind::dimension, "mean does not match the grid");
    }
    const auto groups = curves.groups(false);
    const bool identifiable =
        std::any_of(groups.begin(), groups.end(), [](const CurveGroup& g) { return g.members.size() >= 2; });
    if (!identifiable) {
        throw Error(ErrorKind::unidentifiable, "every subject has a single curve; within-subject covariance is not identifiable");
    }
    const Eigen::MatrixXd centered = curves.matrix().rowwise() - mean.transpose();
    const auto moments = kernels::cross_moments(centered, groups);

    CovariancePair out;
    out.total = symmetrize(moments.all / static_cast<double>(curves.size()));
    out.between = symmetrize(moments.within_pairs / moments.pair_count);
    out.within = out.total - out.between;
    return out;
}

void apply_sign_convention(Eigen::MatrixXd& functions) {
    for (Eigen::Index k = 0; k < functions.cols(); ++k) {
        Eigen::Index best = 0;
        for (Eigen::Index l = 1; l < functions.rows(); ++l) {
            if (std::abs(functions(l, k)) > std::abs(functions(best, k))) best = l;
        }
        if (functions(best, k) < 0.0) functions.col(k) *= -1.0;
    }
}

Eigenstructure eigendecompose_operator(const Eigen::MatrixXd& covariance, const Grid& grid) {
    const auto length = static_cast<Eigen::Index>(grid.size());
    if (covariance.rows() != length || covariance.cols() != length) {
        throw Error(ErrorKind::dimension, "covariance does not match the grid");
    }
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw Error(ErrorKind::symmetry, "covariance operator is not symmetric");
    }
    const Eigen::Map<const Eigen::VectorXd> w(grid.weights.data(), length);
    const Eigen::VectorXd root = w.cwiseSqrt();
    const Eigen::MatrixXd weighted = root.asDiagonal() * symmetrize(covariance) * root.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::rank, "eigen decomposition did not converge");

    Eigenstructure out;
    out.values = solver.eigenvalues().reverse().cwiseMax(0.0);
    out.functions = root.cwiseInverse().asDiagonal() * solver.eigenvectors().rowwise().reverse();
    apply_sign_convention(out.functions);
    return out;
}

Eigen::Index select_components(const Eigen::VectorXd& eigenvalues, double pve) {
    check_pve(pve, "pve");
    const double total = eigenvalues.sum();
    if (!(total > 0.0)) return 0;
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        cumulative += eigenvalues(k);
        if (cumulative / total >= pve - 1e-12) return k + 1;
    }
    return eigenvalues.size();
}

MfpcaModel fit_mfpca(const CurveSet& curves, const FitOptions& options) {
    check_pve(options.pve1, "pve1");
    check_pve(options.pve2, "pve2");
    const Eigen::MatrixXd data = curves.matrix();
    const auto length = static_cast<Eigen::Index>(curves.length());

    MfpcaModel model;
    model.grid = curves.grid();
    model.mean = column_means(data);
    const auto cov = estimate_covariances(curves, model.mean);
    const auto eig1 = eigendecompose_operator(cov.between, model.grid);
    const auto eig2 = eigendecompose_operator(cov.within, model.grid);

    const Eigen::Index k1 = options.k1 ? std::min(*options.k1, length) : select_components(eig1.values, options.pve1);
    const Eigen::Index k2 = options.k2 ? std::min(*options.k2, length) : select_components(eig2.values, options.pve2);
    model.level1 = truncate(eig1, k1);
    model.level2 = truncate(eig2, k2);

    model.metadata.selection = (options.k1 || options.k2) ? "fixed" : "pve";
    model.metadata.pve1_target = options.pve1;
    model.metadata.pve2_target = options.pve2;
    model.metadata.pve1 = cumulative_fraction(eig1.values, k1);
    model.metadata.pve2 = cumulative_fraction(eig2.values, k2);
    model.metadata.n_subjects = curves.groups(false).size();
    model.metadata.n_curves = curves.size();

    // Mean squared truncation residual: one reconstruction pass with the
    // unshrunk projections (sigma_e = 0 makes every EBLUP factor 1).
    model.sigma_e = 0.0;
    const auto projection = mfpca_project(model, curves);
    model.sigma_e = mean_squared(projection.fitted.residual - projection.fitted.level2);
    return model;
}

MfpcaModel fit_fpca(const CurveSet& curves, const FitOptions& options) {
    check_pve(options.pve1, "pve1");
    for (const auto& group : curves.groups(false)) {
        if (group.members.size() != 1) {
            throw Error(ErrorKind::precondition,
                        "FPCA needs one curve per subject (subject " + group.subject_id +
                            " has several); average with subject_mean_curves first");
        }
    }
    const Eigen::MatrixXd data = curves.matrix();
    const auto length = static_cast<Eigen::Index>(curves.length());

    MfpcaModel model;
    model.grid = curves.grid();
    model.mean = column_means(data);
    const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
    const auto moments = kernels::cross_moments(centered, {});
    const Eigen::MatrixXd total = symmetrize(moments.all / static_cast<double>(curves.size()));
    const auto eig = eigendecompose_operator(total, model.grid);

    const Eigen::Index k1 = options.k1 ? std::min(*options.k1, length) : select_components(eig.values, options.pve1);
    model.level1 = truncate(eig, k1);
    model.level2 = Level{Eigen::VectorXd(0), Eigen::MatrixXd(length, 0)};

    model.metadata.selection = options.k1 ? "fixed" : "pve";
    model.metadata.pve1_target = options.pve1;
    model.metadata.pve2_target = 0.0;
    model.metadata.pve1 = cumulative_fraction(eig.values, k1);
    model.metadata.pve2 = 0.0;
    model.metadata.n_subjects = curves.size();
    model.metadata.n_curves = curves.size();

    const auto& phi = model.level1.eigenfunctions;
    const Eigen::MatrixXd scores = kernels::project(centered, model.grid.weights, phi);
    model.sigma_e = mean_squared(centered - scores * phi.transpose());
    return model;
}

} // namespace mfpca
