#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mfpca/curves.hpp"
#include "mfpca/model.hpp"
#include "mfpca/preprocess.hpp"
#include "mfpca/simgen.hpp"

namespace mfpca {

enum class SummaryKind { scalar_amplitude, fpca_score, mfpca_score, mean_peak };

const char* to_string(SummaryKind kind);

struct SummaryDefinition {
    std::string name;
    SummaryKind kind = SummaryKind::scalar_amplitude;
    double time = 0.0;  // scalar_amplitude: landmark time
    int component = 0;  // fpca_score / mfpca_score: 1-based
    double lo = 0.5;    // mean_peak window
    double hi = 1.0;

    static SummaryDefinition amplitude(std::string name, double time);
    static SummaryDefinition fpca(int component);
    static SummaryDefinition mfpca(int component);
    static SummaryDefinition peak(double lo = 0.5, double hi = 1.0);

    void validate() const;
};

SummaryDefinition summary_from_json(const nlohmann::json& node);
nlohmann::json summary_to_json(const SummaryDefinition& summary);

/// P/R/T amplitudes, FPCA scores 1-4 and MFPCA scores 1-4.
std::vector<SummaryDefinition> default_study_summaries();

/// Scalar values per (subject, occasion) unit, units in order of appearance.
struct UnitTable {
    std::vector<std::string> subject_ids;
    std::vector<std::string> occasion_ids;
    std::vector<std::string> names;
    Eigen::MatrixXd values; // units x names

    Eigen::Index column(const std::string& name) const;
};

/// Grid index nearest to t; Error(domain) when further than half a grid step.
std::size_t landmark_index(const Grid& grid, double t);

/// Mean over each unit's curves of the value at every landmark.
UnitTable scalar_summaries(const CurveSet& curves, const LandmarkSet& landmarks, bool per_occasion = true);

/// Mean over each unit's curves of the curve maximum inside [lo, hi].
UnitTable mean_peak(const CurveSet& curves, double lo = 0.5, double hi = 1.0, bool per_occasion = true);

/// Models the harness scores against: the MFPCA reference with the
/// between-score matrix and within-score law to simulate from, plus a
/// single-level FPCA model fitted to subject-mean curves.
struct StudyReference {
    ReferenceData reference;
    MfpcaModel fpca;
};

/// Synthetic reference; the FPCA model is fitted to the subject means of a
/// generated reference cohort of the same size.
StudyReference synthetic_study_reference(const SyntheticModelParams& params, std::size_t n_subjects,
                                         std::size_t curves_per_subject, std::uint64_t seed);

/// Reference built from a fitted model and the curves it was fitted on.
StudyReference fitted_study_reference(const MfpcaModel& model, const CurveSet& reference_curves,
                                      Eigen::Index fpca_components = 4);

enum class IccPooling { both_groups, group1 };
enum class GroupOccasion { first, average };

struct StudyConfig {
    std::vector<ScenarioSpec> scenarios;
    std::vector<SummaryDefinition> summaries;
    PopulationSpec population; // per group; its seed is ignored
    std::size_t replications = 200;
    std::uint64_t seed = 0;
    IccPooling icc_pooling = IccPooling::both_groups;
    GroupOccasion group_occasion = GroupOccasion::first;
    int workers = 0; // 0: OpenMP default

    /// Five scenarios, default summaries, 59 subjects x 20 curves x 2 occasions.
    static StudyConfig defaults();
    void validate() const;
};

/// Applies the fields present in `node` on top of `base`.
StudyConfig study_config_from_json(const nlohmann::json& node, StudyConfig base = StudyConfig::defaults());
nlohmann::json study_config_to_json(const StudyConfig& config);

struct ReplicationRow {
    std::string scenario;
    std::string summary;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    double icc_a1 = 0.0;
    double icc_c1 = 0.0;
    double mw_p = 1.0;
    double auc = 0.5; // P(group 2 > group 1), ties one half
};

struct AggregateRow {
    std::string scenario;
    std::string summary;
    std::size_t replications = 0;
    double icc_a1 = 0.0;
    double icc_c1 = 0.0;
    double mw_p = 0.0;
    double auc = 0.0;
    double auc_discrimination = 0.0; // max(auc, 1 - auc): direction-free
    double ks_p_uniform = 0.0;       // KS distance of the p-values to Uniform(0,1)
};

struct StudyResult {
    std::vector<ReplicationRow> replications; // scenario-major, then summary, then replication
    std::vector<AggregateRow> aggregates;
    std::string config_digest; // FNV-1a of the canonical config JSON
    std::uint64_t seed = 0;
    std::size_t replication_count = 0;

    const AggregateRow& aggregate(const std::string& scenario, const std::string& summary) const;

    std::string per_replication_csv() const;
    std::string aggregate_csv() const;
};

/// Seed of replication r; shared by all scenarios (common random numbers).
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t replication);

StudyResult run_study(const StudyConfig& config, const StudyReference& reference);

/// Per-subject clinical outcomes under two conditions.
struct ClinicalTable {
    std::vector<std::string> subject_ids;
    std::vector<std::string> outcomes;
    Eigen::MatrixXd condition_a; // subjects x outcomes
    Eigen::MatrixXd condition_b;

    /// Header: subject_id, then <outcome>_a and <outcome>_b columns.
    static ClinicalTable load(const std::filesystem::path& path);
    static ClinicalTable parse(const std::string& text);
    Eigen::Index row(const std::string& subject_id) const; // -1 if absent
};

struct ValidationOptions {
    int components = 3;
    double peak_lo = 0.5;
    double peak_hi = 1.0;
};

struct ValidationRow {
    std::string analysis; // "cross_sectional" or "change"
    std::string summary;
    std::string outcome;
    std::size_t n = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double p_value = 1.0;
    std::string status; // "ok" or "zero_variance"
};

struct ValidationReport {
    std::vector<ValidationRow> rows;

    const ValidationRow& find(const std::string& analysis, const std::string& summary,
                              const std::string& outcome) const;
    std::string to_csv() const;
};

/// Convergent validity (condition-A summaries regressed on clinical outcomes)
/// and responsiveness (B - A change regressed on clinical change).
ValidationReport validate_workflow(const MfpcaModel& model, const CurveSet& condition_a,
                                   const CurveSet& condition_b, const ClinicalTable& clinical,
                                   const ValidationOptions& options = {});

} // namespace mfpca
