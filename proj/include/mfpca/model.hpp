#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "mfpca/curves.hpp"
#include "mfpca/error.hpp"

namespace mfpca {

/// Retained eigenstructure of one level. Eigenfunctions are stored as the
/// columns of an L x K matrix.
struct Level {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenfunctions;

    Eigen::Index size() const { return eigenvalues.size(); }
};

struct ModelMetadata {
    std::string selection = "pve"; // "pve", "fixed" or "synthetic"
    double pve1_target = 0.95;
    double pve2_target = 0.90;
    double pve1 = 0.0;             // achieved cumulative fraction at level 1
    double pve2 = 0.0;
    std::size_t n_subjects = 0;
    std::size_t n_curves = 0;
};

/// Two-level reference model y_ij = mu + sum eta phi1 + sum xi phi2 + e.
/// A single-level FPCA model is the special case with an empty level 2.
struct MfpcaModel {
    Grid grid;
    Eigen::VectorXd mean;
    Level level1;
    Level level2;
    double sigma_e = 0.0;
    ModelMetadata metadata;

    /// Throws Error(kind) on the first violated invariant.
    void validate(ErrorKind kind_on_failure) const;
};

struct CovariancePair {
    Eigen::MatrixXd total;
    Eigen::MatrixXd between;
    Eigen::MatrixXd within;
};

CovariancePair estimate_covariances(const CurveSet& curves, const Eigen::VectorXd& mean);

struct Eigenstructure {
    Eigen::VectorXd values;       // descending, clipped at zero
    Eigen::MatrixXd functions;    // L x L, orthonormal under the grid inner product
};

/// Weighted eigenproblem of a covariance operator sampled on the grid.
Eigenstructure eigendecompose_operator(const Eigen::MatrixXd& covariance, const Grid& grid);

/// Flips each column so that its largest-magnitude entry is positive
/// (earliest index on ties).
void apply_sign_convention(Eigen::MatrixXd& functions);

/// Smallest K whose cumulative eigenvalue fraction reaches `pve`.
Eigen::Index select_components(const Eigen::VectorXd& eigenvalues, double pve);

struct FitOptions {
    double pve1 = 0.95;
    double pve2 = 0.90;
    std::optional<Eigen::Index> k1;
    std::optional<Eigen::Index> k2;
};

MfpcaModel fit_mfpca(const CurveSet& curves, const FitOptions& options = {});

/// Single-level FPCA; requires exactly one curve per subject.
MfpcaModel fit_fpca(const CurveSet& curves, const FitOptions& options = {});

void save_model(const MfpcaModel& model, const std::filesystem::path& path);
std::string format_model(const MfpcaModel& model);
MfpcaModel load_model(const std::filesystem::path& path);
MfpcaModel parse_model(const std::string& text);

inline constexpr int model_format_version = 1;

/// Max |<phi_a, phi_b> - delta_ab| over a level.
double orthonormality_error(const Eigen::MatrixXd& functions, const Grid& grid);

} // namespace mfpca
