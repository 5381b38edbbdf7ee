#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mfpca/curves.hpp"
#include "mfpca/model.hpp"

namespace mfpca {

/// p(t; A, c, tau) = A exp(-((t - c) / tau)^2 / 2).
double gaussian_bump(double t, double amplitude, double center, double width);

struct Bump {
    double amplitude = 0.0;
    double center = 0.0;
    double width = 1.0;
};

enum class ScenarioKind { no_change, flattened_t, changing_t, all_flattened, st_elevation };
enum class PerturbationMode { multiplicative, additive };
/// Level at which a mixture amplitude is drawn.
enum class MixtureLevel { subject, occasion, curve };

struct MixtureOption {
    double amplitude = 0.0;
    double probability = 0.0;
};

/// Group-2 perturbation. Multiplicative: y * prod(1 - p_b(t)); additive:
/// y + sum p_b(t). A mixture, when present, replaces every bump amplitude
/// with a draw made once per unit at `mixture_level`.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::no_change;
    std::vector<Bump> bumps;
    std::vector<MixtureOption> mixture;
    PerturbationMode mode = PerturbationMode::multiplicative;
    MixtureLevel mixture_level = MixtureLevel::occasion;

    static ScenarioSpec preset(ScenarioKind kind);
    void validate(double domain_end = 1.0) const;
    std::string name() const;
};

const char* to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& text);

/// Parses a scenario object: {"kind": ..., optional overrides}.
ScenarioSpec scenario_from_json(const nlohmann::json& node);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

CurveSet apply_scenario(const CurveSet& curves, const ScenarioSpec& spec, std::uint64_t seed);

/// Multivariate normal law of the within-subject scores.
struct WithinScoreDistribution {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    /// Factor A with A A' = covariance: Cholesky, or a PSD square root when the
    /// matrix is singular. Throws Error(covariance) if it is not PSD.
    Eigen::MatrixXd factor() const;
};

/// Sample mean and (n - 1)-denominator covariance of score rows.
WithinScoreDistribution empirical_score_moments(const Eigen::MatrixXd& scores);

struct PopulationSpec {
    std::size_t n_subjects = 59;
    std::size_t curves_min = 20;
    std::size_t curves_max = 20; // curves per occasion drawn uniformly in [min, max]
    std::size_t occasions = 2;
    std::uint64_t seed = 0;
    std::string id_prefix = "s";

    void validate() const;
};

struct Population {
    CurveSet curves;
    Eigen::MatrixXd between_scores; // subjects x K1, the draws used
};

/// Curves from given per-subject between scores; within scores are drawn
/// fresh for every curve on every occasion.
Population synthesize_from_scores(const MfpcaModel& model, const Eigen::MatrixXd& subject_scores,
                                  const WithinScoreDistribution& within, const PopulationSpec& spec);

/// Row-wise bootstrap of the reference between scores, shared across occasions.
Population synthesize_population_detailed(const MfpcaModel& model, const Eigen::MatrixXd& reference_between,
                                          const WithinScoreDistribution& within, const PopulationSpec& spec);

CurveSet synthesize_population(const MfpcaModel& model, const Eigen::MatrixXd& reference_between,
                               const WithinScoreDistribution& within, const PopulationSpec& spec);

struct SyntheticModelParams {
    std::size_t grid_points = 256;
    double baseline = 0.0;
    std::vector<Bump> mean_bumps;
    std::vector<Bump> level1_seeds; // amplitude sets the seed sign/scale only
    Eigen::VectorXd level1_eigenvalues;
    std::vector<Bump> level2_seeds;
    Eigen::VectorXd level2_eigenvalues;
    double sigma_e = 1.0;

    /// Three-wave cardiac cycle with P/R/T bumps at 0.104 / 0.25 / 0.508.
    static SyntheticModelParams ecg();
    /// Knee flexion-extension cycle with stance and swing peaks.
    static SyntheticModelParams gait();
};

/// Mean from bumps; eigenfunctions from Gram-Schmidt-orthonormalized bumps.
MfpcaModel synthetic_reference_model(const SyntheticModelParams& params);

/// A synthetic stand-in for a fitted reference: the model, a matrix of
/// reference between scores to bootstrap from, and the within-score law.
struct ReferenceData {
    MfpcaModel model;
    Eigen::MatrixXd between_scores;
    WithinScoreDistribution within;
};

ReferenceData synthetic_reference(const SyntheticModelParams& params, std::size_t n_subjects, std::uint64_t seed);

/// Reference quantities from a model fitted to real curves: EBLUP between
/// scores of the reference subjects and moments of their within scores.
ReferenceData fitted_reference(const MfpcaModel& model, const CurveSet& reference_curves);

} // namespace mfpca
