#include "mfpca/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mfpca/error.hpp"
#include "mfpca/project.hpp"
#include "mfpca/rng.hpp"

namespace mfpca {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

double gaussian_bump(double t, double amplitude, double center, double width) {
    if (!(width > 0.0)) throw Error(ErrorKind::config, "bump width must be positive");
    const double z = (t - center) / width;
    return amplitude * std::exp(-0.5 * z * z);
}

namespace {

constexpr double c_p = 0.104;
constexpr double c_r = 0.25;
constexpr double c_t = 0.508;

struct KindName {
    ScenarioKind kind;
    const char* name;
};

constexpr KindName kind_names[] = {
    {ScenarioKind::no_change, "NoChange"},
    {ScenarioKind::flattened_t, "FlattenedT"},
    {ScenarioKind::changing_t, "ChangingT"},
    {ScenarioKind::all_flattened, "AllFlattened"},
    {ScenarioKind::st_elevation, "StElevation"},
};

const char* to_string(MixtureLevel level) {
    switch (level) {
    case MixtureLevel::subject: return "subject";
    case MixtureLevel::occasion: return "occasion";
    case MixtureLevel::curve: return "curve";
    }
    return "?";
}

MixtureLevel mixture_level_from_string(const std::string& text) {
    if (text == "subject") return MixtureLevel::subject;
    if (text == "occasion") return MixtureLevel::occasion;
    if (text == "curve") return MixtureLevel::curve;
    throw Error(ErrorKind::config, "unknown mixture_level '" + text + "'");
}

double pick_amplitude(const std::vector<MixtureOption>& mixture, double u) {
    double cumulative = 0.0;
    for (const auto& option : mixture) {
        cumulative += option.probability;
        if (u < cumulative) return option.amplitude;
    }
    return mixture.back().amplitude;
}

} // namespace

const char* to_string(ScenarioKind kind) {
    for (const auto& entry : kind_names)
        if (entry.kind == kind) return entry.name;
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& text) {
    for (const auto& entry : kind_names)
        if (text == entry.name) return entry.kind;
    throw Error(ErrorKind::config, "unknown scenario kind '" + text + "'");
}

std::string ScenarioSpec::name() const { return to_string(kind); }

ScenarioSpec ScenarioSpec::preset(ScenarioKind kind) {
    ScenarioSpec spec;
    spec.kind = kind;
    switch (kind) {
    case ScenarioKind::no_change:
        break;
    case ScenarioKind::flattened_t:
        spec.bumps = {{0.5, c_t, 0.1}};
        break;
    case ScenarioKind::changing_t:
        spec.bumps = {{0.5, c_t, 0.1}};
        spec.mixture = {{0.2, 0.5}, {0.7, 0.5}};
        break;
    case ScenarioKind::all_flattened:
        spec.bumps = {{0.2, c_p, 0.1}, {0.2, c_r, 0.1}, {0.2, c_t, 0.1}};
        break;
    case ScenarioKind::st_elevation:
        spec.bumps = {{120.0, 0.37, 0.05}};
        spec.mode = PerturbationMode::additive;
        break;
    default:
        throw Error(ErrorKind::config, "unknown scenario kind");
    }
    return spec;
}

void ScenarioSpec::validate(double domain_end) const {
    for (const auto& bump : bumps) {
        if (!(bump.width > 0.0) || !std::isfinite(bump.width))
            throw Error(ErrorKind::config, name() + ": bump width must be positive");
        if (!(bump.center > 0.0 && bump.center < domain_end))
            throw Error(ErrorKind::config, name() + ": bump center outside the domain");
        if (!std::isfinite(bump.amplitude)) throw Error(ErrorKind::config, name() + ": non-finite amplitude");
    }
    if (!mixture.empty()) {
        double total = 0.0;
        for (const auto& option : mixture) {
            if (!(option.probability >= 0.0) || !std::isfinite(option.amplitude))
                throw Error(ErrorKind::config, name() + ": invalid mixture option");
            total += option.probability;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw Error(ErrorKind::config, name() + ": mixture probabilities must sum to 1");
    }
}

ScenarioSpec scenario_from_json(const json& node) {
    if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string())
        throw Error(ErrorKind::config, "scenario needs a string 'kind'");
    try {
        ScenarioSpec spec = ScenarioSpec::preset(scenario_kind_from_string(node["kind"].get<std::string>()));
        if (node.contains("bumps")) {
            spec.bumps.clear();
            for (const auto& b : node["bumps"])
                spec.bumps.push_back({b.at("amplitude").get<double>(), b.at("center").get<double>(),
                                      b.at("width").get<double>()});
        }
        // Scalar overrides apply to every bump of the preset.
        for (auto& bump : spec.bumps) {
            if (node.contains("amplitude")) bump.amplitude = node["amplitude"].get<double>();
            if (node.contains("center")) bump.center = node["center"].get<double>();
            if (node.contains("width")) bump.width = node["width"].get<double>();
        }
        if (node.contains("mixture")) {
            spec.mixture.clear();
            for (const auto& m : node["mixture"])
                spec.mixture.push_back({m.at("amplitude").get<double>(), m.at("probability").get<double>()});
        }
        if (node.contains("mode")) {
            const auto mode = node["mode"].get<std::string>();
            if (mode == "multiplicative") spec.mode = PerturbationMode::multiplicative;
            else if (mode == "additive") spec.mode = PerturbationMode::additive;
            else throw Error(ErrorKind::config, "unknown mode '" + mode + "'");
        }
        if (node.contains("mixture_level"))
            spec.mixture_level = mixture_level_from_string(node["mixture_level"].get<std::string>());
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("scenario: ") + e.what());
    }
}

json scenario_to_json(const ScenarioSpec& spec) {
    json node;
    node["kind"] = spec.name();
    node["mode"] = spec.mode == PerturbationMode::additive ? "additive" : "multiplicative";
    node["bumps"] = json::array();
    for (const auto& b : spec.bumps)
        node["bumps"].push_back({{"amplitude", b.amplitude}, {"center", b.center}, {"width", b.width}});
    if (!spec.mixture.empty()) {
        node["mixture"] = json::array();
        for (const auto& m : spec.mixture)
            node["mixture"].push_back({{"amplitude", m.amplitude}, {"probability", m.probability}});
        node["mixture_level"] = to_string(spec.mixture_level);
    }
    return node;
}

CurveSet apply_scenario(const CurveSet& curves, const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate(curves.grid().domain_end());
    if (spec.kind == ScenarioKind::no_change && spec.bumps.empty()) return curves;

    const auto& t = curves.grid().points;
    const std::size_t L = t.size();

    auto profile = [&](double amplitude_override, bool use_override) {
        std::vector<double> out(L, spec.mode == PerturbationMode::multiplicative ? 1.0 : 0.0);
        for (const auto& bump : spec.bumps) {
            const double a = use_override ? amplitude_override : bump.amplitude;
            for (std::size_t l = 0; l < L; ++l) {
                const double p = gaussian_bump(t[l], a, bump.center, bump.width);
                if (spec.mode == PerturbationMode::multiplicative) out[l] *= 1.0 - p;
                else out[l] += p;
            }
        }
        return out;
    };

    const auto fixed = profile(0.0, false);
    std::vector<CurveRecord> records = curves.records();
    for (auto& record : records) {
        const std::vector<double>* factor = &fixed;
        std::vector<double> drawn;
        if (!spec.mixture.empty()) {
            std::uint64_t stream;
            switch (spec.mixture_level) {
            case MixtureLevel::subject:
                stream = derive_seed(seed, {hash_string(record.subject_id)});
                break;
            case MixtureLevel::occasion:
                stream = derive_seed(seed, {hash_string(record.subject_id), hash_string(record.occasion_id)});
                break;
            default:
                stream = derive_seed(seed, {hash_string(record.subject_id), hash_string(record.occasion_id),
                                            hash_string(record.curve_id)});
            }
            Rng rng(stream);
            drawn = profile(pick_amplitude(spec.mixture, rng.uniform()), true);
            factor = &drawn;
        }
        for (std::size_t l = 0; l < L; ++l) {
            if (spec.mode == PerturbationMode::multiplicative) record.values[l] *= (*factor)[l];
            else record.values[l] += (*factor)[l];
        }
    }
    return CurveSet(curves.grid(), std::move(records));
}

MatrixXd WithinScoreDistribution::factor() const {
    const auto k = covariance.rows();
    if (covariance.cols() != k || mean.size() != k)
        throw Error(ErrorKind::dimension, "within-score mean/covariance size mismatch");
    if (k == 0) return MatrixXd(0, 0);
    const MatrixXd sym = 0.5 * (covariance + covariance.transpose());
    Eigen::LLT<MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    // Singular (e.g. all-zero) covariance: symmetric PSD square root.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw Error(ErrorKind::covariance, "within-score covariance is not positive semi-definite");
    const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

WithinScoreDistribution empirical_score_moments(const MatrixXd& scores) {
    const auto n = scores.rows();
    const auto k = scores.cols();
    if (n < k + 1 || n < 2)
        throw Error(ErrorKind::insufficient_data, "need at least K2 + 1 score vectors, got " + std::to_string(n));
    WithinScoreDistribution out;
    out.mean = scores.colwise().mean().transpose();
    const MatrixXd centered = scores.rowwise() - out.mean.transpose();
    out.covariance = centered.transpose() * centered / static_cast<double>(n - 1);
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    return out;
}

void PopulationSpec::validate() const {
    if (n_subjects < 1 || occasions < 1 || curves_min < 1)
        throw Error(ErrorKind::config, "population counts must be at least 1");
    if (curves_max < curves_min) throw Error(ErrorKind::config, "curves_max below curves_min");
}

namespace {

std::string padded(const std::string& prefix, std::size_t index, int width) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%0*zu", width, index);
    return prefix + buffer;
}

int digits(std::size_t n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

} // namespace

Population synthesize_from_scores(const MfpcaModel& model, const MatrixXd& subject_scores,
                                  const WithinScoreDistribution& within, const PopulationSpec& spec) {
    spec.validate();
    model.validate(ErrorKind::precondition);
    const auto L = static_cast<Eigen::Index>(model.grid.size());
    const auto k1 = model.level1.size();
    const auto k2 = model.level2.size();
    if (subject_scores.rows() != static_cast<Eigen::Index>(spec.n_subjects) || subject_scores.cols() != k1)
        throw Error(ErrorKind::dimension, "subject score matrix must be n_subjects x K1");
    if (within.mean.size() != k2) throw Error(ErrorKind::dimension, "within-score law must have K2 components");
    const MatrixXd factor = within.factor();

    const int subject_width = std::max(3, digits(spec.n_subjects));
    const int curve_width = std::max(2, digits(spec.curves_max));
    const auto n_subjects = static_cast<std::ptrdiff_t>(spec.n_subjects);
    std::vector<std::vector<CurveRecord>> slots(spec.n_subjects);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < n_subjects; ++s) {
        const std::string subject = padded(spec.id_prefix, static_cast<std::size_t>(s) + 1, subject_width);
        const VectorXd subject_part = model.mean + model.level1.eigenfunctions * subject_scores.row(s).transpose();
        auto& out = slots[static_cast<std::size_t>(s)];
        for (std::size_t m = 0; m < spec.occasions; ++m) {
            Rng rng(derive_seed(spec.seed, {1, static_cast<std::uint64_t>(s), m}));
            std::size_t n_curves = spec.curves_min;
            if (spec.curves_max > spec.curves_min) n_curves += rng.index(spec.curves_max - spec.curves_min + 1);
            VectorXd z(k2);
            for (std::size_t j = 0; j < n_curves; ++j) {
                for (Eigen::Index c = 0; c < k2; ++c) z[c] = rng.normal();
                const VectorXd xi = within.mean + factor * z;
                const VectorXd y = subject_part + model.level2.eigenfunctions * xi;
                CurveRecord record;
                record.subject_id = subject;
                record.occasion_id = std::to_string(m + 1);
                record.curve_id = padded("c", j + 1, curve_width);
                record.values.assign(y.data(), y.data() + L);
                out.push_back(std::move(record));
            }
        }
    }

    std::vector<CurveRecord> records;
    for (auto& slot : slots)
        for (auto& r : slot) records.push_back(std::move(r));
    return {CurveSet(model.grid, std::move(records)), subject_scores};
}

Population synthesize_population_detailed(const MfpcaModel& model, const MatrixXd& reference_between,
                                          const WithinScoreDistribution& within, const PopulationSpec& spec) {
    spec.validate();
    if (reference_between.rows() < 1) throw Error(ErrorKind::insufficient_data, "empty reference between-score matrix");
    if (reference_between.cols() != model.level1.size())
        throw Error(ErrorKind::dimension, "reference between scores must have K1 columns");
    MatrixXd drawn(static_cast<Eigen::Index>(spec.n_subjects), reference_between.cols());
    const auto rows = static_cast<std::uint64_t>(reference_between.rows());
    for (std::size_t s = 0; s < spec.n_subjects; ++s) {
        Rng rng(derive_seed(spec.seed, {0, s}));
        drawn.row(static_cast<Eigen::Index>(s)) = reference_between.row(static_cast<Eigen::Index>(rng.index(rows)));
    }
    return synthesize_from_scores(model, drawn, within, spec);
}

CurveSet synthesize_population(const MfpcaModel& model, const MatrixXd& reference_between,
                               const WithinScoreDistribution& within, const PopulationSpec& spec) {
    return synthesize_population_detailed(model, reference_between, within, spec).curves;
}

SyntheticModelParams SyntheticModelParams::ecg() {
    SyntheticModelParams p;
    p.grid_points = 256;
    p.mean_bumps = {{100.0, c_p, 0.02}, {800.0, c_r, 0.015}, {200.0, c_t, 0.04}};
    p.level1_seeds = {{1.0, c_r, 0.015}, {1.0, c_t, 0.04}, {1.0, c_p, 0.02}, {1.0, 0.37, 0.05}};
    p.level1_eigenvalues = (VectorXd(4) << 64.0, 12.0, 8.0, 4.0).finished();
    p.level2_seeds = {{1.0, c_r, 0.02}, {1.0, c_t, 0.05}, {1.0, c_p, 0.03}, {1.0, 0.75, 0.12}};
    p.level2_eigenvalues = (VectorXd(4) << 32.0, 12.0, 8.0, 4.0).finished();
    p.sigma_e = 4.0;
    return p;
}

SyntheticModelParams SyntheticModelParams::gait() {
    SyntheticModelParams p;
    p.grid_points = 101;
    p.baseline = 5.0;
    p.mean_bumps = {{15.0, 0.15, 0.06}, {55.0, 0.72, 0.09}};
    p.level1_seeds = {{1.0, 0.5, 0.5}, {1.0, 0.15, 0.05}, {1.0, 0.62, 0.05}};
    p.level1_eigenvalues = (VectorXd(3) << 20.0, 10.0, 6.0).finished();
    p.level2_seeds = {{1.0, 0.15, 0.08}, {1.0, 0.72, 0.08}};
    p.level2_eigenvalues = (VectorXd(2) << 4.0, 2.0).finished();
    p.sigma_e = 1.0;
    return p;
}

namespace {

MatrixXd orthonormal_bumps(const std::vector<Bump>& seeds, const Grid& grid) {
    const auto L = static_cast<Eigen::Index>(grid.size());
    const Eigen::Map<const VectorXd> w(grid.weights.data(), L);
    MatrixXd out(L, static_cast<Eigen::Index>(seeds.size()));
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        VectorXd v(L);
        for (Eigen::Index l = 0; l < L; ++l)
            v[l] = gaussian_bump(grid.points[static_cast<std::size_t>(l)], seeds[k].amplitude, seeds[k].center,
                                 seeds[k].width);
        const double original = std::sqrt(v.cwiseProduct(w).dot(v));
        // Two sweeps of classical Gram-Schmidt keep the result orthonormal to
        // rounding even for strongly overlapping seeds.
        for (int sweep = 0; sweep < 2; ++sweep)
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k); ++j)
                v -= out.col(j).cwiseProduct(w).dot(v) * out.col(j);
        const double norm = std::sqrt(v.cwiseProduct(w).dot(v));
        if (!(original > 0.0) || norm <= 1e-8 * original)
            throw Error(ErrorKind::orthonormalization, "seed function " + std::to_string(k + 1) +
                                                           " is linearly dependent on earlier seeds");
        out.col(static_cast<Eigen::Index>(k)) = v / norm;
    }
    apply_sign_convention(out);
    return out;
}

void check_spectrum(const VectorXd& values, std::size_t n_seeds, const char* level) {
    if (static_cast<std::size_t>(values.size()) != n_seeds)
        throw Error(ErrorKind::config, std::string(level) + ": one eigenvalue per seed function required");
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (!(values[k] >= 0.0) || (k > 0 && values[k] > values[k - 1]))
            throw Error(ErrorKind::config, std::string(level) + ": eigenvalues must be nonnegative and nonincreasing");
    }
}

} // namespace

MfpcaModel synthetic_reference_model(const SyntheticModelParams& params) {
    if (params.grid_points < 2) throw Error(ErrorKind::config, "synthetic grid needs at least 2 points");
    check_spectrum(params.level1_eigenvalues, params.level1_seeds.size(), "level 1");
    check_spectrum(params.level2_eigenvalues, params.level2_seeds.size(), "level 2");
    if (!(params.sigma_e >= 0.0)) throw Error(ErrorKind::config, "sigma_e must be nonnegative");

    MfpcaModel model;
    model.grid = Grid::uniform(params.grid_points);
    const auto L = static_cast<Eigen::Index>(params.grid_points);
    model.mean = VectorXd::Constant(L, params.baseline);
    for (const auto& bump : params.mean_bumps)
        for (Eigen::Index l = 0; l < L; ++l)
            model.mean[l] += gaussian_bump(model.grid.points[static_cast<std::size_t>(l)], bump.amplitude,
                                           bump.center, bump.width);
    model.level1 = {params.level1_eigenvalues, orthonormal_bumps(params.level1_seeds, model.grid)};
    model.level2 = {params.level2_eigenvalues, orthonormal_bumps(params.level2_seeds, model.grid)};
    model.sigma_e = params.sigma_e;
    model.metadata.selection = "synthetic";
    model.metadata.pve1 = model.level1.size() > 0 ? 1.0 : 0.0;
    model.metadata.pve2 = model.level2.size() > 0 ? 1.0 : 0.0;
    model.metadata.pve1_target = 1.0;
    model.metadata.pve2_target = 1.0;
    model.validate(ErrorKind::orthonormalization);
    return model;
}

ReferenceData synthetic_reference(const SyntheticModelParams& params, std::size_t n_subjects, std::uint64_t seed) {
    if (n_subjects < 1) throw Error(ErrorKind::config, "reference needs at least one subject");
    ReferenceData ref;
    ref.model = synthetic_reference_model(params);
    const auto k1 = ref.model.level1.size();
    ref.between_scores.resize(static_cast<Eigen::Index>(n_subjects), k1);
    Rng rng(derive_seed(seed, {2}));
    for (Eigen::Index i = 0; i < ref.between_scores.rows(); ++i)
        for (Eigen::Index k = 0; k < k1; ++k)
            ref.between_scores(i, k) = std::sqrt(ref.model.level1.eigenvalues[k]) * rng.normal();
    const auto k2 = ref.model.level2.size();
    ref.within.mean = VectorXd::Zero(k2);
    ref.within.covariance = ref.model.level2.eigenvalues.asDiagonal();
    return ref;
}

ReferenceData fitted_reference(const MfpcaModel& model, const CurveSet& reference_curves) {
    const Projection projection = mfpca_project(model, reference_curves);
    ReferenceData ref;
    ref.model = model;
    ref.between_scores = projection.scores.between_matrix();
    const MatrixXd within = projection.scores.within_matrix();
    if (within.cols() == 0) {
        ref.within.mean = VectorXd(0);
        ref.within.covariance = MatrixXd(0, 0);
    } else {
        ref.within = empirical_score_moments(within);
    }
    return ref;
}

} // namespace mfpca
