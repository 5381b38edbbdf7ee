#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mfpca {

struct IccResult {
    double icc_a1 = 0.0;
    double icc_c1 = 0.0;
    double msr = 0.0; // between subjects (rows)
    double msc = 0.0; // between occasions (columns)
    double mse = 0.0;
    Eigen::Index n = 0;
    Eigen::Index k = 0;
};

/// ICC(A,1) and ICC(C,1) from the two-way mean squares of an n x k layout
/// (subjects x occasions). Estimates are returned unclipped.
IccResult icc(const Eigen::MatrixXd& values);

struct MannWhitneyResult {
    double u = 0.0;      // wins + half ties of y over x
    double u_min = 0.0;
    double p_value = 1.0; // two-sided
    bool exact = false;
};

MannWhitneyResult mann_whitney(std::span<const double> x, std::span<const double> y);

struct GroupTestResult {
    double u_statistic = 0.0;
    double p_value = 1.0;
    double auc = 0.5;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

/// Mann-Whitney test and ROC AUC of group 2 (y) against group 1 (x).
GroupTestResult group_test(std::span<const double> group1, std::span<const double> group2);

/// P(positive outranks negative) with ties counted one half; labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Midranks (1-based) of the values.
std::vector<double> midranks(std::span<const double> values);

enum class CorrelationMethod { pearson, spearman };

double correlation(std::span<const double> x, std::span<const double> y,
                   CorrelationMethod method = CorrelationMethod::pearson);

struct OlsResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double p_slope = 1.0;
    double t_statistic = 0.0;
    std::size_t n = 0;
};

/// y = intercept + slope x by least squares with a two-sided t-test on the slope.
OlsResult ols_simple(std::span<const double> x, std::span<const double> y);

/// One-sample Kolmogorov-Smirnov statistic against Uniform(0, 1).
double ks_uniform(std::span<const double> values);

} // namespace mfpca
