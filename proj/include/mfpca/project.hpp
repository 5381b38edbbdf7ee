#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfpca/curves.hpp"
#include "mfpca/model.hpp"

namespace mfpca {

struct BetweenScore {
    std::string subject_id;
    std::string occasion_id; // pooled_token unless scoring per occasion
    int component = 0;       // 1-based
    double raw_mean = 0.0;   // subject-average projection
    double score = 0.0;      // EBLUP
    double shrinkage = 0.0;
    std::size_t n_curves = 0;
};

struct WithinScore {
    std::string subject_id;
    std::string occasion_id;
    std::string curve_id;
    int component = 0;
    double raw = 0.0;
    double score = 0.0;
};

struct ScoreTable {
    bool per_occasion = false;
    std::vector<CurveKey> curves; // scored curves in input order
    std::vector<BetweenScore> between;
    std::vector<WithinScore> within;

    /// Units x K1 matrix of EBLUP between scores, units in order of appearance.
    Eigen::MatrixXd between_matrix() const;
    /// Curves x K2 matrix of EBLUP within scores.
    Eigen::MatrixXd within_matrix() const;
};

/// Per-curve decomposition, rows aligned with the scored curves.
struct FittedDecomposition {
    Eigen::MatrixXd level1;   // f1_ij(t)
    Eigen::MatrixXd residual; // r_ij = y_ij - mu - f1_ij
    Eigen::MatrixXd level2;   // f2_ij(t)
};

struct Projection {
    ScoreTable scores;
    FittedDecomposition fitted;
};

struct ProjectOptions {
    bool per_occasion = false;
};

/// EBLUP shrinkage lambda / (lambda + noise); defined as 0 when lambda = 0.
double shrinkage_factor(double eigenvalue, double noise_variance);

/// FPCA scores <curve - mu, phi_k> for every retained level-1 component.
Eigen::VectorXd fpca_project(const MfpcaModel& model, std::span<const double> curve);

/// Two-stage MFPCA scoring of new curves against a fixed reference model.
Projection mfpca_project(const MfpcaModel& model, const CurveSet& curves, const ProjectOptions& options = {});

/// mu + sum b phi1 + sum a phi2 for every curve listed in the table.
CurveSet reconstruct(const MfpcaModel& model, const ScoreTable& scores);

} // namespace mfpca
