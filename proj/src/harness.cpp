#include "mfpca/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <sstream>

#include "mfpca/error.hpp"
#include "mfpca/project.hpp"
#include "mfpca/rng.hpp"
#include "mfpca/valmetrics.hpp"

namespace mfpca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

const char* to_string(SummaryKind kind) {
    switch (kind) {
    case SummaryKind::scalar_amplitude: return "scalar_amplitude";
    case SummaryKind::fpca_score: return "fpca_score";
    case SummaryKind::mfpca_score: return "mfpca_score";
    case SummaryKind::mean_peak: return "mean_peak";
    }
    return "?";
}

namespace {

SummaryKind summary_kind_from_string(const std::string& text) {
    for (auto kind : {SummaryKind::scalar_amplitude, SummaryKind::fpca_score, SummaryKind::mfpca_score,
                      SummaryKind::mean_peak})
        if (text == to_string(kind)) return kind;
    throw Error(ErrorKind::config, "unknown summary kind '" + text + "'");
}

} // namespace

SummaryDefinition SummaryDefinition::amplitude(std::string name, double time) {
    SummaryDefinition s;
    s.name = std::move(name);
    s.kind = SummaryKind::scalar_amplitude;
    s.time = time;
    return s;
}

SummaryDefinition SummaryDefinition::fpca(int component) {
    SummaryDefinition s;
    s.name = "fpca" + std::to_string(component);
    s.kind = SummaryKind::fpca_score;
    s.component = component;
    return s;
}

SummaryDefinition SummaryDefinition::mfpca(int component) {
    SummaryDefinition s;
    s.name = "mfpca" + std::to_string(component);
    s.kind = SummaryKind::mfpca_score;
    s.component = component;
    return s;
}

SummaryDefinition SummaryDefinition::peak(double lo, double hi) {
    SummaryDefinition s;
    s.name = "mean_peak";
    s.kind = SummaryKind::mean_peak;
    s.lo = lo;
    s.hi = hi;
    return s;
}

void SummaryDefinition::validate() const {
    if (name.empty()) throw Error(ErrorKind::config, "summary needs a name");
    switch (kind) {
    case SummaryKind::scalar_amplitude:
        if (!std::isfinite(time)) throw Error(ErrorKind::config, name + ": landmark time must be finite");
        break;
    case SummaryKind::fpca_score:
    case SummaryKind::mfpca_score:
        if (component < 1) throw Error(ErrorKind::config, name + ": component index must be >= 1");
        break;
    case SummaryKind::mean_peak:
        if (!(lo < hi)) throw Error(ErrorKind::config, name + ": peak window needs lo < hi");
        break;
    }
}

SummaryDefinition summary_from_json(const json& node) {
    try {
        SummaryDefinition s;
        s.kind = summary_kind_from_string(node.at("kind").get<std::string>());
        switch (s.kind) {
        case SummaryKind::scalar_amplitude:
            s = SummaryDefinition::amplitude(node.at("name").get<std::string>(), node.at("time").get<double>());
            break;
        case SummaryKind::fpca_score:
            s = SummaryDefinition::fpca(node.at("component").get<int>());
            break;
        case SummaryKind::mfpca_score:
            s = SummaryDefinition::mfpca(node.at("component").get<int>());
            break;
        case SummaryKind::mean_peak:
            s = SummaryDefinition::peak(node.value("lo", 0.5), node.value("hi", 1.0));
            break;
        }
        if (node.contains("name")) s.name = node["name"].get<std::string>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("summary: ") + e.what());
    }
}

json summary_to_json(const SummaryDefinition& s) {
    json node{{"name", s.name}, {"kind", to_string(s.kind)}};
    switch (s.kind) {
    case SummaryKind::scalar_amplitude: node["time"] = s.time; break;
    case SummaryKind::fpca_score:
    case SummaryKind::mfpca_score: node["component"] = s.component; break;
    case SummaryKind::mean_peak:
        node["lo"] = s.lo;
        node["hi"] = s.hi;
        break;
    }
    return node;
}

std::vector<SummaryDefinition> default_study_summaries() {
    std::vector<SummaryDefinition> out;
    const auto landmarks = LandmarkSet::ecg_default();
    for (std::size_t i = 0; i < landmarks.names.size(); ++i)
        out.push_back(SummaryDefinition::amplitude(landmarks.names[i], landmarks.times[i]));
    for (int k = 1; k <= 4; ++k) out.push_back(SummaryDefinition::fpca(k));
    for (int k = 1; k <= 4; ++k) out.push_back(SummaryDefinition::mfpca(k));
    return out;
}

Index UnitTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Index>(i);
    throw Error(ErrorKind::config, "no summary named '" + name + "'");
}

std::size_t landmark_index(const Grid& grid, double t) {
    const auto& p = grid.points;
    const auto it = std::lower_bound(p.begin(), p.end(), t);
    std::size_t best = static_cast<std::size_t>(it - p.begin());
    if (best == p.size() || (best > 0 && std::abs(p[best - 1] - t) <= std::abs(p[best] - t))) --best;
    const double left = best > 0 ? p[best] - p[best - 1] : 0.0;
    const double right = best + 1 < p.size() ? p[best + 1] - p[best] : 0.0;
    const double half_step = 0.5 * std::max(left, right);
    if (std::abs(p[best] - t) > half_step * (1.0 + 1e-9))
        throw Error(ErrorKind::domain, "landmark " + format_double(t) + " is off the grid");
    return best;
}

namespace {

UnitTable unit_frame(const std::vector<CurveGroup>& units, std::vector<std::string> names) {
    UnitTable table;
    for (const auto& unit : units) {
        table.subject_ids.push_back(unit.subject_id);
        table.occasion_ids.push_back(unit.occasion_id);
    }
    table.names = std::move(names);
    table.values.resize(static_cast<Index>(units.size()), static_cast<Index>(table.names.size()));
    return table;
}

std::pair<std::size_t, std::size_t> window_indices(const Grid& grid, double lo, double hi) {
    const auto& p = grid.points;
    const auto first = static_cast<std::size_t>(std::lower_bound(p.begin(), p.end(), lo - 1e-12) - p.begin());
    const auto last = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), hi + 1e-12) - p.begin());
    if (!(lo < hi) || first >= last) throw Error(ErrorKind::config, "peak window contains no grid points");
    return {first, last};
}

} // namespace

UnitTable scalar_summaries(const CurveSet& curves, const LandmarkSet& landmarks, bool per_occasion) {
    std::vector<std::size_t> index;
    for (double t : landmarks.times) index.push_back(landmark_index(curves.grid(), t));
    const auto units = curves.groups(per_occasion);
    UnitTable table = unit_frame(units, landmarks.names);
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (std::size_t k = 0; k < index.size(); ++k) {
            double sum = 0.0;
            for (auto m : units[u].members) sum += curves[m].values[index[k]];
            table.values(static_cast<Index>(u), static_cast<Index>(k)) =
                sum / static_cast<double>(units[u].members.size());
        }
    }
    return table;
}

UnitTable mean_peak(const CurveSet& curves, double lo, double hi, bool per_occasion) {
    const auto [first, last] = window_indices(curves.grid(), lo, hi);
    const auto units = curves.groups(per_occasion);
    UnitTable table = unit_frame(units, {"mean_peak"});
    for (std::size_t u = 0; u < units.size(); ++u) {
        double sum = 0.0;
        for (auto m : units[u].members) {
            const auto& v = curves[m].values;
            sum += *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(first),
                                     v.begin() + static_cast<std::ptrdiff_t>(last));
        }
        table.values(static_cast<Index>(u), 0) = sum / static_cast<double>(units[u].members.size());
    }
    return table;
}

StudyReference synthetic_study_reference(const SyntheticModelParams& params, std::size_t n_subjects,
                                         std::size_t curves_per_subject, std::uint64_t seed) {
    StudyReference out;
    out.reference = synthetic_reference(params, n_subjects, seed);
    PopulationSpec cohort;
    cohort.n_subjects = n_subjects;
    cohort.curves_min = cohort.curves_max = curves_per_subject;
    cohort.occasions = 1;
    cohort.seed = derive_seed(seed, {3});
    cohort.id_prefix = "ref_s";
    const CurveSet curves = synthesize_population(out.reference.model, out.reference.between_scores,
                                                  out.reference.within, cohort);
    FitOptions options;
    options.k1 = 4;
    out.fpca = fit_fpca(subject_mean_curves(curves), options);
    return out;
}

StudyReference fitted_study_reference(const MfpcaModel& model, const CurveSet& reference_curves,
                                      Index fpca_components) {
    StudyReference out;
    out.reference = fitted_reference(model, reference_curves);
    FitOptions options;
    options.k1 = fpca_components;
    out.fpca = fit_fpca(subject_mean_curves(reference_curves), options);
    return out;
}

StudyConfig StudyConfig::defaults() {
    StudyConfig config;
    for (auto kind : {ScenarioKind::no_change, ScenarioKind::flattened_t, ScenarioKind::changing_t,
                      ScenarioKind::all_flattened, ScenarioKind::st_elevation})
        config.scenarios.push_back(ScenarioSpec::preset(kind));
    config.summaries = default_study_summaries();
    config.population.n_subjects = 59;
    config.population.curves_min = config.population.curves_max = 20;
    config.population.occasions = 2;
    return config;
}

void StudyConfig::validate() const {
    if (scenarios.empty()) throw Error(ErrorKind::config, "study needs at least one scenario");
    if (summaries.empty()) throw Error(ErrorKind::config, "study needs at least one summary");
    if (replications < 1) throw Error(ErrorKind::config, "replication count must be at least 1");
    if (population.occasions < 2) throw Error(ErrorKind::config, "ICC needs at least two occasions");
    if (population.n_subjects < 2) throw Error(ErrorKind::config, "groups need at least two subjects");
    population.validate();
    std::map<std::string, int> names;
    for (const auto& s : summaries) {
        s.validate();
        if (++names[s.name] > 1) throw Error(ErrorKind::config, "duplicate summary name '" + s.name + "'");
    }
    std::map<std::string, int> scenario_names;
    for (const auto& s : scenarios) {
        s.validate();
        if (++scenario_names[s.name()] > 1) throw Error(ErrorKind::config, "duplicate scenario '" + s.name() + "'");
    }
}

StudyConfig study_config_from_json(const json& node, StudyConfig base) {
    if (!node.is_object()) throw Error(ErrorKind::config, "study config must be a JSON object");
    try {
        if (node.contains("scenarios")) {
            base.scenarios.clear();
            for (const auto& s : node["scenarios"]) {
                if (s.is_string()) base.scenarios.push_back(ScenarioSpec::preset(scenario_kind_from_string(s)));
                else base.scenarios.push_back(scenario_from_json(s));
            }
        }
        if (node.contains("summaries")) {
            base.summaries.clear();
            for (const auto& s : node["summaries"]) base.summaries.push_back(summary_from_json(s));
        }
        if (node.contains("population")) {
            const auto& p = node["population"];
            base.population.n_subjects = p.value("n_subjects", base.population.n_subjects);
            if (p.contains("curves_per_subject")) {
                const auto& c = p["curves_per_subject"];
                if (c.is_array()) {
                    base.population.curves_min = c.at(0).get<std::size_t>();
                    base.population.curves_max = c.at(1).get<std::size_t>();
                } else {
                    base.population.curves_min = base.population.curves_max = c.get<std::size_t>();
                }
            }
            base.population.occasions = p.value("occasions", base.population.occasions);
        }
        base.replications = node.value("replications", base.replications);
        base.seed = node.value("seed", base.seed);
        if (node.contains("icc_pooling")) {
            const auto v = node["icc_pooling"].get<std::string>();
            if (v == "both_groups") base.icc_pooling = IccPooling::both_groups;
            else if (v == "group1") base.icc_pooling = IccPooling::group1;
            else throw Error(ErrorKind::config, "unknown icc_pooling '" + v + "'");
        }
        if (node.contains("group_occasion")) {
            const auto v = node["group_occasion"].get<std::string>();
            if (v == "first") base.group_occasion = GroupOccasion::first;
            else if (v == "average") base.group_occasion = GroupOccasion::average;
            else throw Error(ErrorKind::config, "unknown group_occasion '" + v + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("study config: ") + e.what());
    }
    base.validate();
    return base;
}

json study_config_to_json(const StudyConfig& config) {
    json node;
    node["scenarios"] = json::array();
    for (const auto& s : config.scenarios) node["scenarios"].push_back(scenario_to_json(s));
    node["summaries"] = json::array();
    for (const auto& s : config.summaries) node["summaries"].push_back(summary_to_json(s));
    node["population"] = {{"n_subjects", config.population.n_subjects},
                          {"curves_per_subject", {config.population.curves_min, config.population.curves_max}},
                          {"occasions", config.population.occasions}};
    node["replications"] = config.replications;
    node["seed"] = config.seed;
    node["icc_pooling"] = config.icc_pooling == IccPooling::both_groups ? "both_groups" : "group1";
    node["group_occasion"] = config.group_occasion == GroupOccasion::first ? "first" : "average";
    return node;
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t replication) {
    return derive_seed(base_seed, {0x5245504cULL, replication});
}

const AggregateRow& StudyResult::aggregate(const std::string& scenario, const std::string& summary) const {
    for (const auto& row : aggregates)
        if (row.scenario == scenario && row.summary == summary) return row;
    throw Error(ErrorKind::config, "no aggregate for " + scenario + "/" + summary);
}

namespace {

// Every summary of every (subject, occasion) unit of one group. Also returns
// the per-subject layout needed for the ICC.
struct GroupSummaries {
    MatrixXd values;                     // units x summaries
    std::vector<std::vector<Index>> cell; // subject -> occasion -> unit row
};

GroupSummaries summarize(const CurveSet& curves, const std::vector<SummaryDefinition>& summaries,
                         const StudyReference& ref, std::size_t occasions) {
    const auto units = curves.groups(true);
    const auto L = static_cast<Index>(curves.length());
    GroupSummaries out;
    out.values.resize(static_cast<Index>(units.size()), static_cast<Index>(summaries.size()));

    std::map<std::string, std::size_t> subject_row;
    for (std::size_t u = 0; u < units.size(); ++u) {
        auto [it, fresh] = subject_row.emplace(units[u].subject_id, out.cell.size());
        if (fresh) out.cell.emplace_back(occasions, -1);
        const std::size_t occasion = static_cast<std::size_t>(std::stoul(units[u].occasion_id)) - 1;
        out.cell[it->second].at(occasion) = static_cast<Index>(u);
    }
    for (const auto& subject : out.cell)
        if (std::find(subject.begin(), subject.end(), Index{-1}) != subject.end())
            throw Error(ErrorKind::insufficient_data, "every subject needs curves on every occasion");

    bool need_mfpca = false, need_fpca = false;
    for (const auto& s : summaries) {
        need_mfpca |= s.kind == SummaryKind::mfpca_score;
        need_fpca |= s.kind == SummaryKind::fpca_score;
    }
    MatrixXd between;
    if (need_mfpca) {
        between = mfpca_project(ref.reference.model, curves, {.per_occasion = true}).scores.between_matrix();
    }
    MatrixXd fpca_scores;
    if (need_fpca) {
        const MatrixXd y = curves.matrix();
        fpca_scores.resize(static_cast<Index>(units.size()), ref.fpca.level1.size());
        VectorXd average(L);
        for (std::size_t u = 0; u < units.size(); ++u) {
            average.setZero();
            for (auto m : units[u].members) average += y.row(static_cast<Index>(m)).transpose();
            average /= static_cast<double>(units[u].members.size());
            fpca_scores.row(static_cast<Index>(u)) =
                fpca_project(ref.fpca, std::span<const double>(average.data(), static_cast<std::size_t>(L)))
                    .transpose();
        }
    }

    for (std::size_t q = 0; q < summaries.size(); ++q) {
        const auto& s = summaries[q];
        const auto col = static_cast<Index>(q);
        switch (s.kind) {
        case SummaryKind::scalar_amplitude: {
            LandmarkSet single{{s.name}, {s.time}};
            out.values.col(col) = scalar_summaries(curves, single, true).values.col(0);
            break;
        }
        case SummaryKind::mean_peak:
            out.values.col(col) = mean_peak(curves, s.lo, s.hi, true).values.col(0);
            break;
        case SummaryKind::fpca_score:
            out.values.col(col) = fpca_scores.col(s.component - 1);
            break;
        case SummaryKind::mfpca_score:
            out.values.col(col) = between.col(s.component - 1);
            break;
        }
    }
    return out;
}

std::vector<double> group_values(const GroupSummaries& g, Index column, GroupOccasion mode) {
    std::vector<double> out;
    for (const auto& subject : g.cell) {
        if (mode == GroupOccasion::first) {
            out.push_back(g.values(subject[0], column));
        } else {
            double sum = 0.0;
            for (auto row : subject) sum += g.values(row, column);
            out.push_back(sum / static_cast<double>(subject.size()));
        }
    }
    return out;
}

void append_icc_rows(const GroupSummaries& g, Index column, MatrixXd& layout, Index& next) {
    for (const auto& subject : g.cell) {
        for (std::size_t m = 0; m < subject.size(); ++m) layout(next, static_cast<Index>(m)) = g.values(subject[m], column);
        ++next;
    }
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

std::string hex64(std::uint64_t v) {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(v));
    return buffer;
}

} // namespace

StudyResult run_study(const StudyConfig& config, const StudyReference& ref) {
    config.validate();
    ref.reference.model.validate(ErrorKind::precondition);
    for (const auto& s : config.summaries) {
        if (s.kind == SummaryKind::mfpca_score && s.component > ref.reference.model.level1.size())
            throw Error(ErrorKind::config, s.name + ": reference model has only " +
                                               std::to_string(ref.reference.model.level1.size()) +
                                               " level-1 components");
        if (s.kind == SummaryKind::fpca_score && s.component > ref.fpca.level1.size())
            throw Error(ErrorKind::config, s.name + ": FPCA reference has only " +
                                               std::to_string(ref.fpca.level1.size()) + " components");
        if (s.kind == SummaryKind::scalar_amplitude) landmark_index(ref.reference.model.grid, s.time);
    }
    for (const auto& s : config.scenarios) s.validate(ref.reference.model.grid.domain_end());

    const std::size_t S = config.scenarios.size();
    const std::size_t Q = config.summaries.size();
    const std::size_t R = config.replications;
    const auto M = config.population.occasions;

    StudyResult result;
    result.seed = config.seed;
    result.replication_count = R;
    result.config_digest = hex64(hash_string(study_config_to_json(config).dump()));
    result.replications.resize(S * Q * R);
    std::vector<std::exception_ptr> failures(R);

    const auto reps = static_cast<std::ptrdiff_t>(R);
    const int threads = config.workers > 0 ? config.workers : 0;
    auto body = [&](std::ptrdiff_t r_signed) {
        const auto r = static_cast<std::size_t>(r_signed);
        const std::uint64_t seed = replication_seed(config.seed, r);
        try {
            PopulationSpec g1_spec = config.population;
            g1_spec.seed = derive_seed(seed, {1});
            g1_spec.id_prefix = "g1_s";
            PopulationSpec g2_spec = config.population;
            g2_spec.seed = derive_seed(seed, {2});
            g2_spec.id_prefix = "g2_s";
            const auto& rd = ref.reference;
            const CurveSet group1 = synthesize_population(rd.model, rd.between_scores, rd.within, g1_spec);
            const CurveSet base2 = synthesize_population(rd.model, rd.between_scores, rd.within, g2_spec);
            const GroupSummaries s1 = summarize(group1, config.summaries, ref, M);

            for (std::size_t sc = 0; sc < S; ++sc) {
                const CurveSet group2 = apply_scenario(base2, config.scenarios[sc], derive_seed(seed, {3}));
                const GroupSummaries s2 = summarize(group2, config.summaries, ref, M);
                for (std::size_t q = 0; q < Q; ++q) {
                    const auto col = static_cast<Index>(q);
                    const bool pooled = config.icc_pooling == IccPooling::both_groups;
                    const auto rows = static_cast<Index>(s1.cell.size() + (pooled ? s2.cell.size() : 0));
                    MatrixXd layout(rows, static_cast<Index>(M));
                    Index next = 0;
                    append_icc_rows(s1, col, layout, next);
                    if (pooled) append_icc_rows(s2, col, layout, next);
                    const IccResult ic = icc(layout);
                    const auto x = group_values(s1, col, config.group_occasion);
                    const auto y = group_values(s2, col, config.group_occasion);
                    const GroupTestResult gt = group_test(x, y);

                    ReplicationRow& row = result.replications[(sc * Q + q) * R + r];
                    row.scenario = config.scenarios[sc].name();
                    row.summary = config.summaries[q].name;
                    row.replication = r;
                    row.seed = seed;
                    row.icc_a1 = ic.icc_a1;
                    row.icc_c1 = ic.icc_c1;
                    row.mw_p = gt.p_value;
                    row.auc = gt.auc;
                }
            }
        } catch (...) {
            failures[r] = std::current_exception();
        }
    };

    if (threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::ptrdiff_t r = 0; r < reps; ++r) body(r);
    } else {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t r = 0; r < reps; ++r) body(r);
    }

    for (std::size_t r = 0; r < R; ++r) {
        if (!failures[r]) continue;
        const std::string where = "replication " + std::to_string(r) + " (seed " +
                                  std::to_string(replication_seed(config.seed, r)) + "): ";
        try {
            std::rethrow_exception(failures[r]);
        } catch (const Error& e) {
            throw Error(e.kind(), where + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorKind::precondition, where + e.what());
        }
    }

    for (std::size_t sc = 0; sc < S; ++sc) {
        for (std::size_t q = 0; q < Q; ++q) {
            AggregateRow agg;
            agg.scenario = config.scenarios[sc].name();
            agg.summary = config.summaries[q].name;
            agg.replications = R;
            std::vector<double> p_values;
            for (std::size_t r = 0; r < R; ++r) {
                const auto& row = result.replications[(sc * Q + q) * R + r];
                agg.icc_a1 += row.icc_a1;
                agg.icc_c1 += row.icc_c1;
                agg.mw_p += row.mw_p;
                agg.auc += row.auc;
                p_values.push_back(row.mw_p);
            }
            const auto n = static_cast<double>(R);
            agg.icc_a1 /= n;
            agg.icc_c1 /= n;
            agg.mw_p /= n;
            agg.auc /= n;
            agg.auc_discrimination = std::max(agg.auc, 1.0 - agg.auc);
            agg.ks_p_uniform = ks_uniform(p_values);
            result.aggregates.push_back(agg);
        }
    }
    return result;
}

std::string StudyResult::per_replication_csv() const {
    std::ostringstream out;
    out << "scenario,summary,replication,seed,icc_a1,icc_c1,mw_p,auc\n";
    for (const auto& row : replications) {
        out << row.scenario << ',' << row.summary << ',' << row.replication << ',' << row.seed << ','
            << csv_number(row.icc_a1) << ',' << csv_number(row.icc_c1) << ',' << csv_number(row.mw_p) << ','
            << csv_number(row.auc) << '\n';
    }
    return out.str();
}

std::string StudyResult::aggregate_csv() const {
    std::ostringstream out;
    out << "scenario,summary,replications,mean_icc_a1,mean_icc_c1,mean_mw_p,mean_auc,auc_discrimination,"
           "ks_p_uniform\n";
    for (const auto& row : aggregates) {
        out << row.scenario << ',' << row.summary << ',' << row.replications << ',' << csv_number(row.icc_a1)
            << ',' << csv_number(row.icc_c1) << ',' << csv_number(row.mw_p) << ',' << csv_number(row.auc) << ','
            << csv_number(row.auc_discrimination) << ',' << csv_number(row.ks_p_uniform) << '\n';
    }
    return out.str();
}

} // namespace mfpca
