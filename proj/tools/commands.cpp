#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "mfpca/curves.hpp"
#include "mfpca/error.hpp"
#include "mfpca/harness.hpp"
#include "mfpca/model.hpp"
#include "mfpca/preprocess.hpp"
#include "mfpca/project.hpp"
#include "mfpca/simgen.hpp"
#include "mfpca/valmetrics.hpp"

namespace fs = std::filesystem;

namespace mfpca::cli {

namespace {

using nlohmann::json;

// Raised for semantically invalid flag values that CLI11 cannot catch.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path manifest_path_for(const fs::path& output) {
    auto path = output;
    path += ".manifest.json";
    return path;
}

RunManifest start_manifest(const std::string& command, int argc, char** argv) {
    RunManifest manifest;
    manifest.command = command;
    for (int i = 0; i < argc; ++i) manifest.command_line.emplace_back(argv[i]);
    manifest.timestamp = utc_timestamp();
    return manifest;
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delimiter)) out.push_back(field);
    if (!line.empty() && line.back() == delimiter) out.emplace_back();
    return out;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string curves, grid, out;
    double pve1 = 0.95, pve2 = 0.90;
    int k1 = 0, k2 = 0;
    bool fpca = false, subject_means = false;
};

int run_fit(const FitArgs& a, int argc, char** argv) {
    CsvOptions csv;
    if (!a.grid.empty()) csv.grid_path = a.grid;
    CurveSet curves = load_curves(a.curves, csv);
    FitOptions options;
    options.pve1 = a.pve1;
    options.pve2 = a.pve2;
    if (a.k1 > 0) options.k1 = a.k1;
    if (a.k2 > 0) options.k2 = a.k2;
    if (a.subject_means) curves = subject_mean_curves(curves);
    const MfpcaModel model = a.fpca ? fit_fpca(curves, options) : fit_mfpca(curves, options);

    RunManifest manifest = start_manifest("fit", argc, argv);
    manifest.add_input(a.curves);
    if (!a.grid.empty()) manifest.add_input(a.grid);
    json config{{"pve1", a.pve1}, {"pve2", a.pve2}, {"k1", a.k1}, {"k2", a.k2}, {"fpca", a.fpca},
                {"subject_means", a.subject_means}};
    manifest.config_hash = sha256_hex(config.dump());
    manifest.outputs = {a.out};
    write_atomic(manifest_path_for(a.out), manifest.to_json());
    write_atomic(a.out, format_model(model));
    std::cerr << "fit: K1=" << model.level1.size() << " K2=" << model.level2.size()
              << " sigma_e=" << format_double(model.sigma_e) << "\n";
    return 0;
}

// ---------------------------------------------------------------- project

struct ProjectArgs {
    std::string model, curves, grid, out, levels = "both";
    bool per_occasion = false;
};

int run_project(const ProjectArgs& a, int argc, char** argv) {
    if (a.levels != "1" && a.levels != "2" && a.levels != "both")
        throw UsageError("--levels must be 1, 2 or both");
    const MfpcaModel model = load_model(a.model);
    CsvOptions csv;
    if (!a.grid.empty()) csv.grid_path = a.grid;
    const CurveSet curves = load_curves(a.curves, csv);
    const Projection projection = mfpca_project(model, curves, {.per_occasion = a.per_occasion});

    std::ostringstream out;
    out << "subject_id,occasion_id,curve_id,level,component,raw,score\n";
    if (a.levels != "2")
        for (const auto& s : projection.scores.between)
            out << s.subject_id << ',' << s.occasion_id << ',' << pooled_token << ",1," << s.component << ','
                << num(s.raw_mean) << ',' << num(s.score) << '\n';
    if (a.levels != "1")
        for (const auto& s : projection.scores.within)
            out << s.subject_id << ',' << s.occasion_id << ',' << s.curve_id << ",2," << s.component << ','
                << num(s.raw) << ',' << num(s.score) << '\n';

    RunManifest manifest = start_manifest("project", argc, argv);
    manifest.add_input(a.model);
    manifest.add_input(a.curves);
    if (!a.grid.empty()) manifest.add_input(a.grid);
    manifest.config_hash = sha256_hex(json{{"per_occasion", a.per_occasion}, {"levels", a.levels}}.dump());
    manifest.outputs = {a.out};
    write_atomic(manifest_path_for(a.out), manifest.to_json());
    write_atomic(a.out, out.str());
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config, out, reference_model, reference_curves;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    int workers = 0;
    std::size_t reference_subjects = 59;
};

int resolve_workers(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("MFPCA_WORKERS")) {
        char* end = nullptr;
        const long value = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || value < 1) throw UsageError("MFPCA_WORKERS must be a positive integer");
        return static_cast<int>(value);
    }
    return 0;
}

int run_simulate(const SimulateArgs& a, bool reps_given, int argc, char** argv) {
    StudyConfig config = StudyConfig::defaults();
    json config_node = json::object();
    if (!a.config.empty()) {
        try {
            config_node = json::parse(read_text(a.config));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
        }
        config = study_config_from_json(config_node);
    }
    if (reps_given) config.replications = a.reps;
    config.seed = a.seed;
    config.workers = resolve_workers(a.workers);
    config.validate();

    StudyReference reference;
    const bool fitted = !a.reference_model.empty();
    if (fitted != !a.reference_curves.empty())
        throw UsageError("--reference-model and --reference-curves go together");
    if (fitted) {
        reference = fitted_study_reference(load_model(a.reference_model), load_curves(a.reference_curves));
    } else {
        reference = synthetic_study_reference(SyntheticModelParams::ecg(), a.reference_subjects,
                                              config.population.curves_max, a.seed);
    }
    const StudyResult result = run_study(config, reference);

    const fs::path dir = a.out;
    json echo = study_config_to_json(config);
    echo["reference"] = fitted ? json{{"kind", "fitted"}, {"model", a.reference_model}, {"curves", a.reference_curves}}
                               : json{{"kind", "synthetic_ecg"}, {"n_subjects", a.reference_subjects}};
    const std::string echo_text = echo.dump(2) + "\n";
    const std::string hash = sha256_hex(echo.dump());
    json echo_file{{"config", echo}, {"sha256", hash}, {"digest", result.config_digest}};

    RunManifest manifest = start_manifest("simulate", argc, argv);
    if (!a.config.empty()) manifest.add_input(a.config);
    if (fitted) {
        manifest.add_input(a.reference_model);
        manifest.add_input(a.reference_curves);
    }
    manifest.config_hash = hash;
    manifest.seed = a.seed;
    manifest.outputs = {"per_replication.csv", "aggregate.csv", "config_echo.json"};
    write_atomic(dir / "manifest.json", manifest.to_json());
    write_atomic(dir / "config_echo.json", echo_file.dump(2) + "\n");
    write_atomic(dir / "per_replication.csv", result.per_replication_csv());
    write_atomic(dir / "aggregate.csv", result.aggregate_csv());
    return 0;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
    std::string curves, grid, out, qc_out, landmarks = "P=0.104,R=0.25,T=0.508";
    double r_min = 0.9, outlier_factor = 1.5;
    std::size_t min_good = 10;
    bool no_register = false;
};

LandmarkSet parse_landmarks(const std::string& text) {
    LandmarkSet set;
    for (const auto& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--landmarks entries look like NAME=TIME");
        const auto t = parse_double(item.substr(eq + 1));
        if (!t) throw UsageError("--landmarks: bad time in '" + item + "'");
        set.names.push_back(item.substr(0, eq));
        set.times.push_back(*t);
    }
    if (set.names.empty()) throw UsageError("--landmarks is empty");
    for (std::size_t i = 1; i < set.times.size(); ++i)
        if (!(set.times[i] > set.times[i - 1])) throw UsageError("--landmarks must be strictly increasing");
    return set;
}

int run_preprocess(const PreprocessArgs& a, int argc, char** argv) {
    CsvOptions csv;
    if (!a.grid.empty()) csv.grid_path = a.grid;
    const CurveSet cycles = load_curves(a.curves, csv);
    const Grid& grid = cycles.grid();
    const LandmarkSet target = parse_landmarks(a.landmarks);
    for (double t : target.times)
        if (!(t > grid.points.front() && t < grid.domain_end()))
            throw UsageError("--landmarks must lie strictly inside the grid domain");

    // Search windows split the domain at midpoints between target landmarks.
    std::vector<LandmarkWindow> windows;
    for (std::size_t k = 0; k < target.times.size(); ++k) {
        const double lo = k == 0 ? grid.points.front() : 0.5 * (target.times[k - 1] + target.times[k]);
        const double hi = k + 1 == target.times.size() ? grid.domain_end() : 0.5 * (target.times[k] + target.times[k + 1]);
        windows.push_back({target.names[k], lo, hi});
    }

    struct Row {
        CurveKey key;
        double correlation = std::numeric_limits<double>::quiet_NaN();
        bool passed = false, zero_variance = false;
        std::string status;
    };
    std::vector<Row> qc_rows;
    std::vector<CurveRecord> kept;

    for (const auto& recording : cycles.groups(true)) {
        std::vector<CurveRecord> members;
        for (auto m : recording.members) members.push_back(cycles[m]);
        if (members.size() < 2) {
            for (const auto& r : members) qc_rows.push_back({r.key(), std::numeric_limits<double>::quiet_NaN(), false, false, "recording_failed"});
            continue;
        }
        const QcReport qc = template_qc(CurveSet(grid, members), a.r_min, a.min_good);
        std::vector<CurveRecord> good;
        std::vector<std::size_t> row_of;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto& c = qc.per_cycle[i];
            Row row{c.key, c.correlation, c.passed, c.zero_variance, ""};
            if (!qc.recording_good) row.status = "recording_failed";
            else if (!c.passed) row.status = "qc_failed";
            else {
                good.push_back(members[i]);
                row_of.push_back(qc_rows.size());
            }
            qc_rows.push_back(row);
        }
        if (good.empty()) continue;
        std::vector<bool> outlier(good.size(), false);
        if (good.size() >= 4)
            for (auto idx : boxplot_outliers(CurveSet(grid, good), a.outlier_factor)) outlier[idx] = true;
        for (std::size_t i = 0; i < good.size(); ++i) {
            Row& row = qc_rows[row_of[i]];
            if (outlier[i]) {
                row.status = "outlier";
                continue;
            }
            if (a.no_register) {
                row.status = "kept";
                kept.push_back(good[i]);
                continue;
            }
            try {
                const LandmarkSet source = locate_landmarks(good[i].values, grid, windows);
                Registration reg = landmark_register(good[i].values, grid, source, target);
                CurveRecord record = good[i];
                record.values = std::move(reg.registered);
                kept.push_back(std::move(record));
                row.status = "kept";
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::landmark_not_found && e.kind() != ErrorKind::invalid_landmarks) throw;
                row.status = e.kind() == ErrorKind::landmark_not_found ? "landmark_not_found" : "invalid_landmarks";
            }
        }
    }
    if (kept.empty()) throw Error(ErrorKind::insufficient_data, "no cycle survived preprocessing");

    std::ostringstream qc_csv;
    qc_csv << "subject_id,occasion_id,curve_id,correlation,passed,zero_variance,status\n";
    for (const auto& r : qc_rows)
        qc_csv << r.key.subject_id << ',' << r.key.occasion_id << ',' << r.key.curve_id << ',' << num(r.correlation)
               << ',' << (r.passed ? 1 : 0) << ',' << (r.zero_variance ? 1 : 0) << ',' << r.status << '\n';
    const CurveSet cleaned(grid, std::move(kept));

    fs::path qc_path = a.qc_out;
    if (qc_path.empty()) {
        qc_path = a.out;
        qc_path += ".qc.csv";
    }
    RunManifest manifest = start_manifest("preprocess", argc, argv);
    manifest.add_input(a.curves);
    if (!a.grid.empty()) manifest.add_input(a.grid);
    manifest.config_hash = sha256_hex(json{{"qc_rmin", a.r_min}, {"qc_min_good", a.min_good},
                                           {"outlier_factor", a.outlier_factor}, {"landmarks", a.landmarks},
                                           {"register", !a.no_register}}
                                          .dump());
    manifest.outputs = {a.out, qc_path.string()};
    write_atomic(manifest_path_for(a.out), manifest.to_json());
    write_atomic(qc_path, qc_csv.str());
    write_atomic(a.out, format_curves(cleaned));
    return 0;
}

// ---------------------------------------------------------------- icc / compare

// summary -> subject -> occasion -> value, with subjects in order of appearance.
struct SummaryValues {
    std::vector<std::string> summaries;
    std::vector<std::string> subjects;
    std::vector<std::string> occasions;
    std::map<std::string, std::map<std::string, std::map<std::string, double>>> values;
};

// Accepts either the score CSV written by `project` (level-1 rows become
// summaries mfpca<k>) or a wide table subject_id,occasion_id,<summary>...
SummaryValues read_summaries(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::format, path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.size() < 3 || header[0] != "subject_id" || header[1] != "occasion_id")
        throw Error(ErrorKind::format, path.string() + ": header must start with subject_id,occasion_id");
    const bool score_format = header.size() == 7 && header[3] == "level" && header[4] == "component" &&
                              header[6] == "score";
    SummaryValues out;
    auto note = [](std::vector<std::string>& list, const std::string& v) {
        if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
    };
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != header.size())
            throw Error(ErrorKind::format, path.string() + ": row " + std::to_string(row) + " has the wrong field count");
        auto value_of = [&](const std::string& text) {
            const auto v = parse_double(text);
            if (!v) throw Error(ErrorKind::parse, path.string() + ": row " + std::to_string(row) + ": bad number '" + text + "'");
            return *v;
        };
        if (score_format) {
            if (f[3] != "1") continue;
            const std::string name = "mfpca" + f[4];
            note(out.summaries, name);
            note(out.subjects, f[0]);
            note(out.occasions, f[1]);
            out.values[name][f[0]][f[1]] = value_of(f[6]);
        } else {
            note(out.subjects, f[0]);
            note(out.occasions, f[1]);
            for (std::size_t c = 2; c < header.size(); ++c) {
                note(out.summaries, header[c]);
                out.values[header[c]][f[0]][f[1]] = value_of(f[c]);
            }
        }
    }
    if (out.summaries.empty()) throw Error(ErrorKind::insufficient_data, path.string() + ": no summary values");
    return out;
}

struct IccArgs {
    std::string scores, out;
};

int run_icc(const IccArgs& a, int argc, char** argv) {
    const SummaryValues sv = read_summaries(a.scores);
    std::ostringstream out;
    out << "summary,metric,value\n";
    for (const auto& name : sv.summaries) {
        const auto& table = sv.values.at(name);
        Eigen::MatrixXd layout(static_cast<Eigen::Index>(sv.subjects.size()),
                               static_cast<Eigen::Index>(sv.occasions.size()));
        for (std::size_t i = 0; i < sv.subjects.size(); ++i)
            for (std::size_t m = 0; m < sv.occasions.size(); ++m) {
                const auto s = table.find(sv.subjects[i]);
                double v = std::numeric_limits<double>::quiet_NaN();
                if (s != table.end())
                    if (const auto o = s->second.find(sv.occasions[m]); o != s->second.end()) v = o->second;
                layout(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = v;
            }
        const IccResult r = icc(layout);
        out << name << ",icc_a1," << num(r.icc_a1) << '\n'
            << name << ",icc_c1," << num(r.icc_c1) << '\n'
            << name << ",n," << r.n << '\n'
            << name << ",k," << r.k << '\n';
    }
    RunManifest manifest = start_manifest("icc", argc, argv);
    manifest.add_input(a.scores);
    manifest.config_hash = sha256_hex("{}");
    manifest.outputs = {a.out};
    write_atomic(manifest_path_for(a.out), manifest.to_json());
    write_atomic(a.out, out.str());
    return 0;
}

struct CompareArgs {
    std::string group1, group2, out, occasion;
};

std::vector<double> subject_values(const SummaryValues& sv, const std::string& name, const std::string& occasion) {
    std::vector<double> out;
    const auto it = sv.values.find(name);
    if (it == sv.values.end()) throw Error(ErrorKind::join, "summary '" + name + "' missing from one group");
    for (const auto& subject : sv.subjects) {
        const auto s = it->second.find(subject);
        if (s == it->second.end()) continue;
        if (!occasion.empty()) {
            if (const auto o = s->second.find(occasion); o != s->second.end()) out.push_back(o->second);
            continue;
        }
        double sum = 0.0;
        for (const auto& [_, v] : s->second) sum += v;
        out.push_back(sum / static_cast<double>(s->second.size()));
    }
    return out;
}

int run_compare(const CompareArgs& a, int argc, char** argv) {
    const SummaryValues g1 = read_summaries(a.group1);
    const SummaryValues g2 = read_summaries(a.group2);
    std::ostringstream out;
    out << "summary,metric,value\n";
    for (const auto& name : g1.summaries) {
        const auto x = subject_values(g1, name, a.occasion);
        const auto y = subject_values(g2, name, a.occasion);
        if (x.empty() || y.empty()) throw Error(ErrorKind::insufficient_data, name + ": a group has no values");
        const GroupTestResult r = group_test(x, y);
        out << name << ",u," << num(r.u_statistic) << '\n'
            << name << ",p_value," << num(r.p_value) << '\n'
            << name << ",auc," << num(r.auc) << '\n'
            << name << ",n1," << r.n1 << '\n'
            << name << ",n2," << r.n2 << '\n';
    }
    RunManifest manifest = start_manifest("compare", argc, argv);
    manifest.add_input(a.group1);
    manifest.add_input(a.group2);
    manifest.config_hash = sha256_hex(json{{"occasion", a.occasion}}.dump());
    manifest.outputs = {a.out};
    write_atomic(manifest_path_for(a.out), manifest.to_json());
    write_atomic(a.out, out.str());
    return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string model, curves_a, curves_b, clinical, out;
    int components = 3;
    double peak_lo = 0.5, peak_hi = 1.0;
};

int run_validate(const ValidateArgs& a, int argc, char** argv) {
    const MfpcaModel model = load_model(a.model);
    const CurveSet curves_a = load_curves(a.curves_a);
    const CurveSet curves_b = load_curves(a.curves_b);
    const ClinicalTable clinical = ClinicalTable::load(a.clinical);
    ValidationOptions options;
    options.components = a.components;
    options.peak_lo = a.peak_lo;
    options.peak_hi = a.peak_hi;
    const ValidationReport report = validate_workflow(model, curves_a, curves_b, clinical, options);

    RunManifest manifest = start_manifest("validate", argc, argv);
    for (const auto& p : {a.model, a.curves_a, a.curves_b, a.clinical}) manifest.add_input(p);
    manifest.config_hash = sha256_hex(
        json{{"components", a.components}, {"peak_lo", a.peak_lo}, {"peak_hi", a.peak_hi}}.dump());
    manifest.outputs = {a.out};
    write_atomic(manifest_path_for(a.out), manifest.to_json());
    write_atomic(a.out, report.to_csv());
    return 0;
}

} // namespace

int dispatch(int argc, char** argv) {
    CLI::App app{"Multilevel functional PCA toolkit for digital outcome validation", "mfpca"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a reference MFPCA (or FPCA) model");
    fit_cmd->add_option("--curves", fit.curves, "Curve CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--grid", fit.grid, "Grid CSV (default: uniform on [0,1])")->check(CLI::ExistingFile);
    fit_cmd->add_option("--pve1", fit.pve1, "Level-1 variance fraction")->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_option("--pve2", fit.pve2, "Level-2 variance fraction")->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_option("--k1", fit.k1, "Fixed level-1 component count")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--k2", fit.k2, "Fixed level-2 component count")->check(CLI::PositiveNumber);
    fit_cmd->add_flag("--fpca", fit.fpca, "Single-level FPCA (one curve per subject)");
    fit_cmd->add_flag("--subject-means", fit.subject_means, "Average each subject's curves first");
    fit_cmd->add_option("--out", fit.out, "Model JSON")->required();

    ProjectArgs project;
    auto* project_cmd = app.add_subcommand("project", "Score curves against a reference model");
    project_cmd->add_option("--model", project.model, "Model JSON")->required()->check(CLI::ExistingFile);
    project_cmd->add_option("--curves", project.curves, "Curve CSV")->required()->check(CLI::ExistingFile);
    project_cmd->add_option("--grid", project.grid, "Grid CSV")->check(CLI::ExistingFile);
    project_cmd->add_flag("--per-occasion", project.per_occasion, "Between scores per (subject, occasion)");
    project_cmd->add_option("--levels", project.levels, "1, 2 or both");
    project_cmd->add_option("--out", project.out, "Score CSV")->required();

    SimulateArgs simulate;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run the Monte-Carlo validation study");
    simulate_cmd->add_option("--config", simulate.config, "Study config JSON")->check(CLI::ExistingFile);
    auto* reps_opt = simulate_cmd->add_option("--reps", simulate.reps, "Replications")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", simulate.seed, "Base seed")->required();
    simulate_cmd->add_option("--out", simulate.out, "Output directory")->required();
    simulate_cmd->add_option("--workers", simulate.workers, "Worker threads (env MFPCA_WORKERS)")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--reference-model", simulate.reference_model, "Fitted reference model")
        ->check(CLI::ExistingFile);
    simulate_cmd->add_option("--reference-curves", simulate.reference_curves, "Curves the reference was fitted on")
        ->check(CLI::ExistingFile);
    simulate_cmd->add_option("--reference-subjects", simulate.reference_subjects, "Synthetic reference size")
        ->check(CLI::PositiveNumber);

    PreprocessArgs pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "QC, outlier removal and landmark registration of cycles");
    pre_cmd->add_option("--curves", pre.curves, "Cycle CSV")->required()->check(CLI::ExistingFile);
    pre_cmd->add_option("--grid", pre.grid, "Grid CSV")->check(CLI::ExistingFile);
    pre_cmd->add_option("--qc-rmin", pre.r_min, "Minimum template correlation");
    pre_cmd->add_option("--qc-min-good", pre.min_good, "Minimum passing cycles per recording");
    pre_cmd->add_option("--outlier-factor", pre.outlier_factor, "Functional boxplot fence factor")
        ->check(CLI::NonNegativeNumber);
    pre_cmd->add_option("--landmarks", pre.landmarks, "Target landmarks NAME=TIME,...");
    pre_cmd->add_flag("--no-register", pre.no_register, "Skip landmark registration");
    pre_cmd->add_option("--qc-out", pre.qc_out, "QC report CSV (default <out>.qc.csv)");
    pre_cmd->add_option("--out", pre.out, "Cleaned curve CSV")->required();

    IccArgs icc_args;
    auto* icc_cmd = app.add_subcommand("icc", "ICC(A,1) and ICC(C,1) per summary");
    icc_cmd->add_option("--scores", icc_args.scores, "Score CSV or wide summary table")->required()->check(CLI::ExistingFile);
    icc_cmd->add_option("--out", icc_args.out, "Result CSV")->required();

    CompareArgs compare;
    auto* compare_cmd = app.add_subcommand("compare", "Mann-Whitney test and AUC between two groups");
    compare_cmd->add_option("--group1", compare.group1, "Group 1 scores")->required()->check(CLI::ExistingFile);
    compare_cmd->add_option("--group2", compare.group2, "Group 2 scores")->required()->check(CLI::ExistingFile);
    compare_cmd->add_option("--occasion", compare.occasion, "Use this occasion (default: occasion average)");
    compare_cmd->add_option("--out", compare.out, "Result CSV")->required();

    ValidateArgs validate;
    auto* validate_cmd = app.add_subcommand("validate", "Convergent validity and responsiveness regressions");
    validate_cmd->add_option("--model", validate.model, "Model JSON")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--curves-a", validate.curves_a, "Condition A curves")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--curves-b", validate.curves_b, "Condition B curves")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--clinical", validate.clinical, "Clinical table CSV")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--components", validate.components, "MFPCA components")->check(CLI::PositiveNumber);
    validate_cmd->add_option("--peak-lo", validate.peak_lo, "Peak window start");
    validate_cmd->add_option("--peak-hi", validate.peak_hi, "Peak window end");
    validate_cmd->add_option("--out", validate.out, "Report CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fit_cmd) return run_fit(fit, argc, argv);
        if (*project_cmd) return run_project(project, argc, argv);
        if (*simulate_cmd) return run_simulate(simulate, reps_opt->count() > 0, argc, argv);
        if (*pre_cmd) return run_preprocess(pre, argc, argv);
        if (*icc_cmd) return run_icc(icc_args, argc, argv);
        if (*compare_cmd) return run_compare(compare, argc, argv);
        if (*validate_cmd) return run_validate(validate, argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n" << app.help();
        return 1;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace mfpca::cli
