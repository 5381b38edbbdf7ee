#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfpca/curves.hpp"

namespace mfpca {

struct CycleQc {
    CurveKey key;
    double correlation = 0.0; // NaN when the cycle has zero variance
    bool passed = false;
    bool zero_variance = false;
};

struct QcReport {
    std::vector<CycleQc> per_cycle;
    bool recording_good = false;
    std::vector<double> template_curve;

    std::size_t passed_count() const;
};

/// Pearson correlation of each cycle with the pointwise-mean template.
QcReport template_qc(const CurveSet& cycles, double r_min = 0.9, std::size_t min_good = 10);

/// Modified band depth (J = 2) of each record, in record order.
std::vector<double> mbd_depths(const CurveSet& curves);

/// Record indices of curves leaving the functional-boxplot fence.
std::vector<std::size_t> boxplot_outliers(const CurveSet& curves, double factor = 1.5);

struct LandmarkWindow {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
};

struct LandmarkSet {
    std::vector<std::string> names;
    std::vector<double> times;

    static LandmarkSet ecg_default(); // P, R, T at 0.104, 0.25, 0.508
};

LandmarkSet locate_landmarks(std::span<const double> values, const Grid& grid,
                             std::span<const LandmarkWindow> windows);

/// Fritsch-Carlson monotone cubic through the points; evaluate with `operator()`.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slopes_;
};

struct Registration {
    std::vector<double> registered;
    std::vector<double> warp;
};

/// Warps time so that the source landmarks land on the target landmarks.
/// The warp h maps target to source times and fixes both domain end points;
/// registered(t) = values(h(t)).
Registration landmark_register(std::span<const double> values, const Grid& grid, const LandmarkSet& source,
                               const LandmarkSet& target);

} // namespace mfpca
