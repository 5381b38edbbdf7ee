#include "mfpca/curves.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mfpca/error.hpp"

namespace mfpca {

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == delimiter) {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

Grid Grid::uniform(std::size_t length, double domain_end) {
    if (length < 2) throw Error(ErrorKind::domain, "grid needs at least 2 points");
    Grid grid;
    grid.points.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        grid.points[i] = domain_end * static_cast<double>(i) / static_cast<double>(length - 1);
    }
    grid.points.back() = domain_end;
    grid.weights.assign(length, domain_end / static_cast<double>(length));
    return grid;
}

Grid Grid::from_points(std::vector<double> points) {
    if (points.size() < 2) throw Error(ErrorKind::domain, "grid needs at least 2 points");
    Grid grid;
    const double end = points.back();
    grid.weights.assign(points.size(), end / static_cast<double>(points.size()));
    grid.points = std::move(points);
    grid.validate();
    return grid;
}

void Grid::validate() const {
    if (points.size() < 2) throw Error(ErrorKind::domain, "grid needs at least 2 points");
    if (weights.size() != points.size()) throw Error(ErrorKind::domain, "grid weights and points differ in length");
    if (points.front() < 0.0) throw Error(ErrorKind::domain, "grid must lie in [0, T]");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i])) throw Error(ErrorKind::domain, "non-finite grid point");
        if (i > 0 && !(points[i] > points[i - 1])) {
            throw Error(ErrorKind::domain, "grid points must be strictly increasing");
        }
        if (!(weights[i] > 0.0)) throw Error(ErrorKind::domain, "grid weights must be positive");
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (std::abs(total - points.back()) > 1e-9 * std::max(1.0, points.back())) {
        throw Error(ErrorKind::domain, "grid weights must sum to the domain length");
    }
}

CurveSet::CurveSet(Grid grid, std::vector<CurveRecord> records)
    : grid_(std::move(grid)), records_(std::move(records)) {
    grid_.validate();
    if (records_.empty()) throw Error(ErrorKind::insufficient_data, "curve set has no records");
    std::set<CurveKey> seen;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& rec = records_[i];
        if (rec.values.size() != grid_.size()) {
            throw Error(ErrorKind::dimension, "record " + std::to_string(i) + " has " +
                                                  std::to_string(rec.values.size()) + " values, grid has " +
                                                  std::to_string(grid_.size()));
        }
        for (double v : rec.values) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::domain, "record " + std::to_string(i) + " holds a non-finite value");
            }
        }
        if (!seen.insert(rec.key()).second) {
            throw Error(ErrorKind::uniqueness, "duplicate curve (" + rec.subject_id + ", " + rec.occasion_id +
                                                   ", " + rec.curve_id + ")");
        }
    }
}

Eigen::MatrixXd CurveSet::matrix() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(records_.size()), static_cast<Eigen::Index>(grid_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(records_[i].values.data(), static_cast<Eigen::Index>(grid_.size()));
    }
    return out;
}

std::vector<CurveGroup> CurveSet::groups(bool per_occasion) const {
    std::vector<CurveGroup> out;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& rec = records_[i];
        std::string occasion = per_occasion ? rec.occasion_id : std::string(pooled_token);
        auto key = std::make_pair(rec.subject_id, occasion);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, out.size());
            out.push_back({rec.subject_id, std::move(occasion), {i}});
        } else {
            out[it->second].members.push_back(i);
        }
    }
    return out;
}

std::vector<std::string> CurveSet::subject_ids() const {
    std::vector<std::string> out;
    for (const auto& g : groups(false)) out.push_back(g.subject_id);
    return out;
}

std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw Error(ErrorKind::format, "cannot format value");
    return std::string(buffer, ptr);
}

std::optional<double> parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

Grid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open grid file " + path.string());
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "t") {
        throw Error(ErrorKind::format, "grid file " + path.string() + " must start with header 't'");
    }
    std::vector<double> points;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto value = parse_double(line);
        if (!value) throw Error(ErrorKind::parse, "grid file row " + std::to_string(row) + ": '" + line + "'");
        points.push_back(*value);
    }
    return Grid::from_points(std::move(points));
}

CurveSet load_curves(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open curve file " + path.string());

    std::string line;
    std::size_t row = 0;
    std::size_t expected_columns = 0;
    bool has_unit = false;
    if (options.header) {
        if (!std::getline(in, line)) throw Error(ErrorKind::format, "empty curve file " + path.string());
        ++row;
        auto header = split(strip_cr(line), options.delimiter);
        if (header.size() < 5 || header[0] != "subject_id" || header[1] != "occasion_id" || header[2] != "curve_id") {
            throw Error(ErrorKind::format, "header must be subject_id,occasion_id,curve_id,v0,...");
        }
        has_unit = header[3] == "unit";
        expected_columns = header.size();
    }

    std::vector<CurveRecord> records;
    while (std::getline(in, line)) {
        ++row;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split(line, options.delimiter);
        if (expected_columns == 0) expected_columns = fields.size();
        if (fields.size() != expected_columns) {
            throw Error(ErrorKind::format, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                               " columns, expected " + std::to_string(expected_columns));
        }
        const std::size_t first_value = has_unit ? 4 : 3;
        if (fields.size() < first_value + 2) {
            throw Error(ErrorKind::format, "row " + std::to_string(row) + " has fewer than 2 value columns");
        }
        CurveRecord rec{fields[0], fields[1], fields[2], {}, has_unit ? fields[3] : std::string()};
        rec.values.reserve(fields.size() - first_value);
        for (std::size_t c = first_value; c < fields.size(); ++c) {
            auto value = parse_double(fields[c]);
            if (!value) {
                throw Error(ErrorKind::parse, "row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                                  ": '" + fields[c] + "' is not a number");
            }
            rec.values.push_back(*value);
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error(ErrorKind::insufficient_data, "curve file " + path.string() + " has no rows");

    const std::size_t length = records.front().values.size();
    Grid grid = options.grid_path ? load_grid(*options.grid_path) : Grid::uniform(length);
    if (grid.size() != length) {
        throw Error(ErrorKind::dimension, "grid file has " + std::to_string(grid.size()) + " points but curves have " +
                                              std::to_string(length) + " values");
    }
    return CurveSet(std::move(grid), std::move(records));
}

std::string format_curves(const CurveSet& curves) {
    std::ostringstream out;
    bool has_unit = std::any_of(curves.records().begin(), curves.records().end(),
                                [](const CurveRecord& r) { return !r.unit.empty(); });
    out << "subject_id,occasion_id,curve_id";
    if (has_unit) out << ",unit";
    for (std::size_t l = 0; l < curves.length(); ++l) out << ",v" << l;
    out << '\n';
    for (const auto& rec : curves.records()) {
        out << rec.subject_id << ',' << rec.occasion_id << ',' << rec.curve_id;
        if (has_unit) out << ',' << rec.unit;
        for (double v : rec.values) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

void save_curves(const CurveSet& curves, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << format_curves(curves);
    if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

void save_grid(const Grid& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "t\n";
    for (double t : grid.points) out << format_double(t) << '\n';
}

CurveSet subject_mean_curves(const CurveSet& curves) {
    const std::size_t length = curves.length();
    std::vector<CurveRecord> out;
    for (const auto& group : curves.groups(false)) {
        std::vector<double> mean(length, 0.0);
        for (std::size_t idx : group.members) {
            const auto& v = curves[idx].values;
            for (std::size_t l = 0; l < length; ++l) mean[l] += v[l];
        }
        const double n = static_cast<double>(group.members.size());
        for (double& m : mean) m /= n;
        out.push_back({group.subject_id, pooled_token, pooled_token, std::move(mean), curves[group.members.front()].unit});
    }
    return CurveSet(curves.grid(), std::move(out));
}

double interpolate_linear(std::span<const double> points, std::span<const double> values, double t) {
    const std::size_t n = points.size();
    if (t <= points.front()) return values.front();
    if (t >= points.back()) return values.back();
    auto it = std::upper_bound(points.begin(), points.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - points.begin());
    std::size_t lo = hi - 1;
    if (hi >= n) return values.back();
    const double span = points[hi] - points[lo];
    const double frac = (t - points[lo]) / span;
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> resample_to_grid(std::span<const double> values, const Grid& source, const Grid& target) {
    if (source.size() < 2) throw Error(ErrorKind::domain, "source grid needs at least 2 points");
    if (values.size() != source.size()) throw Error(ErrorKind::dimension, "values do not match the source grid");
    constexpr double tolerance = 1e-9;
    std::vector<double> out(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double t = target.points[i];
        if (t < source.points.front() - tolerance || t > source.points.back() + tolerance) {
            throw Error(ErrorKind::domain, "target point " + format_double(t) + " lies outside the source grid");
        }
        out[i] = interpolate_linear(source.points, values, t);
    }
    return out;
}

} // namespace mfpca
