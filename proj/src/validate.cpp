#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mfpca/error.hpp"
#include "mfpca/harness.hpp"
#include "mfpca/project.hpp"
#include "mfpca/valmetrics.hpp"

namespace mfpca {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delimiter)) out.push_back(field);
    if (!line.empty() && line.back() == delimiter) out.emplace_back();
    return out;
}

std::string trim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace

ClinicalTable ClinicalTable::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::format, "clinical table is empty");
    const auto header = split(trim_cr(line), ',');
    if (header.empty() || header[0] != "subject_id")
        throw Error(ErrorKind::format, "clinical table header must start with subject_id");

    ClinicalTable table;
    // Columns pair up as <outcome>_a / <outcome>_b in any order.
    std::map<std::string, std::pair<int, int>> columns;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name.size() < 3 || (name.substr(name.size() - 2) != "_a" && name.substr(name.size() - 2) != "_b"))
            throw Error(ErrorKind::format, "clinical column '" + name + "' must end in _a or _b");
        const auto outcome = name.substr(0, name.size() - 2);
        auto [it, fresh] = columns.emplace(outcome, std::make_pair(-1, -1));
        if (fresh) table.outcomes.push_back(outcome);
        int& slot = name.back() == 'a' ? it->second.first : it->second.second;
        if (slot >= 0) throw Error(ErrorKind::format, "duplicate clinical column '" + name + "'");
        slot = static_cast<int>(c);
    }
    for (const auto& outcome : table.outcomes) {
        const auto& [a, b] = columns.at(outcome);
        if (a < 0 || b < 0) throw Error(ErrorKind::format, "outcome '" + outcome + "' needs both _a and _b columns");
    }

    std::vector<std::vector<double>> a_rows, b_rows;
    std::map<std::string, int> seen;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        line = trim_cr(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != header.size())
            throw Error(ErrorKind::format, "clinical row " + std::to_string(row_number) + " has " +
                                               std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(header.size()));
        if (++seen[fields[0]] > 1)
            throw Error(ErrorKind::uniqueness, "clinical subject '" + fields[0] + "' appears twice");
        table.subject_ids.push_back(fields[0]);
        std::vector<double> a, b;
        for (const auto& outcome : table.outcomes) {
            const auto& [ca, cb] = columns.at(outcome);
            for (auto [col, dest] : {std::pair{ca, &a}, std::pair{cb, &b}}) {
                const auto value = parse_double(fields[static_cast<std::size_t>(col)]);
                if (!value || !std::isfinite(*value))
                    throw Error(ErrorKind::parse, "clinical row " + std::to_string(row_number) + ", column " +
                                                      header[static_cast<std::size_t>(col)] + ": not a number");
                dest->push_back(*value);
            }
        }
        a_rows.push_back(std::move(a));
        b_rows.push_back(std::move(b));
    }
    if (table.subject_ids.empty()) throw Error(ErrorKind::insufficient_data, "clinical table has no rows");
    const auto n = static_cast<Index>(table.subject_ids.size());
    const auto k = static_cast<Index>(table.outcomes.size());
    table.condition_a.resize(n, k);
    table.condition_b.resize(n, k);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) {
            table.condition_a(i, j) = a_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            table.condition_b(i, j) = b_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    return table;
}

ClinicalTable ClinicalTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

Index ClinicalTable::row(const std::string& subject_id) const {
    const auto it = std::find(subject_ids.begin(), subject_ids.end(), subject_id);
    return it == subject_ids.end() ? -1 : static_cast<Index>(it - subject_ids.begin());
}

const ValidationRow& ValidationReport::find(const std::string& analysis, const std::string& summary,
                                            const std::string& outcome) const {
    for (const auto& row : rows)
        if (row.analysis == analysis && row.summary == summary && row.outcome == outcome) return row;
    throw Error(ErrorKind::config, "no validation row " + analysis + "/" + summary + "/" + outcome);
}

std::string ValidationReport::to_csv() const {
    auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
    std::ostringstream out;
    out << "analysis,summary,outcome,n,slope,intercept,r_squared,p_value,status\n";
    for (const auto& r : rows) {
        out << r.analysis << ',' << r.summary << ',' << r.outcome << ',' << r.n << ',' << num(r.slope) << ','
            << num(r.intercept) << ',' << num(r.r_squared) << ',' << num(r.p_value) << ',' << r.status << '\n';
    }
    return out.str();
}

namespace {

// Per-subject summaries (pooled over occasions) keyed by subject id.
struct SubjectSummaries {
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> values;
};

SubjectSummaries subject_summaries(const MfpcaModel& model, const CurveSet& curves, const ValidationOptions& options) {
    SubjectSummaries out;
    const int k = std::min<int>(options.components, static_cast<int>(model.level1.size()));
    for (int c = 1; c <= k; ++c) out.names.push_back("mfpca" + std::to_string(c));
    out.names.push_back("mean_peak");

    const auto projection = mfpca_project(model, curves);
    const MatrixXd between = projection.scores.between_matrix();
    const UnitTable peak = mean_peak(curves, options.peak_lo, options.peak_hi, false);
    for (std::size_t u = 0; u < peak.subject_ids.size(); ++u) {
        std::vector<double> row;
        for (int c = 0; c < k; ++c) row.push_back(between(static_cast<Index>(u), c));
        row.push_back(peak.values(static_cast<Index>(u), 0));
        out.values.emplace(peak.subject_ids[u], std::move(row));
    }
    return out;
}

bool constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

ValidationRow regress(std::string analysis, std::string summary, std::string outcome, const std::vector<double>& x,
                      const std::vector<double>& y) {
    ValidationRow row;
    row.analysis = std::move(analysis);
    row.summary = std::move(summary);
    row.outcome = std::move(outcome);
    row.n = x.size();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (x.size() < 3 || constant(x) || constant(y)) {
        row.slope = row.intercept = row.r_squared = row.p_value = nan;
        row.status = x.size() < 3 ? "insufficient_data" : "zero_variance";
        return row;
    }
    const OlsResult fit = ols_simple(x, y);
    row.slope = fit.slope;
    row.intercept = fit.intercept;
    row.r_squared = fit.r_squared;
    row.p_value = fit.p_slope;
    row.status = "ok";
    return row;
}

} // namespace

ValidationReport validate_workflow(const MfpcaModel& model, const CurveSet& condition_a, const CurveSet& condition_b,
                                   const ClinicalTable& clinical, const ValidationOptions& options) {
    if (options.components < 1) throw Error(ErrorKind::config, "at least one MFPCA component is required");
    const auto a = subject_summaries(model, condition_a, options);
    const auto b = subject_summaries(model, condition_b, options);

    std::vector<std::string> missing;
    for (const auto& [id, _] : a.values)
        if (clinical.row(id) < 0) missing.push_back(id);
    for (const auto& [id, _] : b.values)
        if (clinical.row(id) < 0 && std::find(missing.begin(), missing.end(), id) == missing.end())
            missing.push_back(id);
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw Error(ErrorKind::join, "subjects missing from the clinical table: " + list);
    }

    // Subjects in clinical-table order, restricted to those with curves.
    std::vector<std::string> cross_ids, change_ids;
    for (const auto& id : clinical.subject_ids) {
        if (a.values.count(id)) cross_ids.push_back(id);
        if (a.values.count(id) && b.values.count(id)) change_ids.push_back(id);
    }

    ValidationReport report;
    for (std::size_t o = 0; o < clinical.outcomes.size(); ++o) {
        const auto col = static_cast<Index>(o);
        for (std::size_t q = 0; q < a.names.size(); ++q) {
            std::vector<double> x, y;
            for (const auto& id : cross_ids) {
                x.push_back(clinical.condition_a(clinical.row(id), col));
                y.push_back(a.values.at(id)[q]);
            }
            report.rows.push_back(regress("cross_sectional", a.names[q], clinical.outcomes[o], x, y));
        }
        for (std::size_t q = 0; q < a.names.size(); ++q) {
            std::vector<double> dx, dy;
            for (const auto& id : change_ids) {
                const Index r = clinical.row(id);
                dx.push_back(clinical.condition_b(r, col) - clinical.condition_a(r, col));
                dy.push_back(b.values.at(id)[q] - a.values.at(id)[q]);
            }
            report.rows.push_back(regress("change", a.names[q], clinical.outcomes[o], dx, dy));
        }
    }
    return report;
}

} // namespace mfpca
