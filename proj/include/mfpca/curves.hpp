#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfpca {

/// Sampling grid on [0, T] with quadrature weights for inner products.
///
/// The default weights are T/L at every point (1/L on the unit interval), so
/// that the weights sum to the domain length T = points.back().
struct Grid {
    std::vector<double> points;
    std::vector<double> weights;

    static Grid uniform(std::size_t length, double domain_end = 1.0);
    /// Builds a grid from explicit points with default equal weights.
    static Grid from_points(std::vector<double> points);

    std::size_t size() const { return points.size(); }
    double domain_end() const { return points.back(); }

    /// Throws Error(domain) when any invariant is violated.
    void validate() const;

    bool operator==(const Grid&) const = default;
};

/// Token used for occasion_id / curve_id after pooling.
inline constexpr const char* pooled_token = "*";

struct CurveKey {
    std::string subject_id;
    std::string occasion_id;
    std::string curve_id;

    auto operator<=>(const CurveKey&) const = default;
};

struct CurveRecord {
    std::string subject_id;
    std::string occasion_id;
    std::string curve_id;
    std::vector<double> values;
    std::string unit;

    CurveKey key() const { return {subject_id, occasion_id, curve_id}; }
};

/// A group of record indices sharing a subject (and optionally an occasion).
struct CurveGroup {
    std::string subject_id;
    std::string occasion_id; // pooled_token when occasions are pooled
    std::vector<std::size_t> members;
};

/// Hierarchical functional sample: subjects x occasions x curves on one grid.
/// Immutable once constructed; the constructor enforces all invariants.
class CurveSet {
public:
    CurveSet(Grid grid, std::vector<CurveRecord> records);

    const Grid& grid() const { return grid_; }
    const std::vector<CurveRecord>& records() const { return records_; }
    const CurveRecord& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const { return records_.size(); }
    std::size_t length() const { return grid_.size(); }

    /// Curves as rows of an n x L matrix.
    Eigen::MatrixXd matrix() const;

    /// Groups in order of first appearance. With per_occasion the unit is
    /// (subject, occasion), otherwise all of a subject's curves are pooled.
    std::vector<CurveGroup> groups(bool per_occasion = false) const;

    std::vector<std::string> subject_ids() const;

private:
    Grid grid_;
    std::vector<CurveRecord> records_;
};

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
    std::optional<std::filesystem::path> grid_path;
};

/// Reads the wide curve layout: subject_id, occasion_id, curve_id, then L values.
/// An optional `unit` column may follow curve_id when a header is present.
CurveSet load_curves(const std::filesystem::path& path, const CsvOptions& options = {});

/// Reads a single-column grid file with header `t`.
Grid load_grid(const std::filesystem::path& path);

void save_curves(const CurveSet& curves, const std::filesystem::path& path);
std::string format_curves(const CurveSet& curves);
void save_grid(const Grid& grid, const std::filesystem::path& path);

/// One record per subject holding the pointwise mean over all its curves.
CurveSet subject_mean_curves(const CurveSet& curves);

/// Linear interpolation onto `target`; end points are clamped to the nearest
/// source value within a tolerance of 1e-9.
std::vector<double> resample_to_grid(std::span<const double> values, const Grid& source,
                                     const Grid& target);

/// Linear interpolation of (points, values) at a single location inside the span.
double interpolate_linear(std::span<const double> points, std::span<const double> values, double t);

/// Shortest decimal representation that reads back to the same double.
std::string format_double(double value);
/// Strict decimal parse of a whole field; returns nullopt on any junk.
std::optional<double> parse_double(std::string_view text);

} // namespace mfpca
