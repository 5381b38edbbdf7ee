#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// library and a plain serial reference in `kernels::serial` that the tests
// compare against and the benchmark times.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfpca/curves.hpp"

namespace mfpca::kernels {

/// Second-moment sums of centered curves.
struct CrossMoments {
    Eigen::MatrixXd all;          // sum over curves of d d'
    Eigen::MatrixXd within_pairs; // sum over subjects of sum_{j != k} d_j d_k'
    double pair_count = 0.0;      // sum over subjects of n_i (n_i - 1)
};

CrossMoments cross_moments(const Eigen::MatrixXd& centered, const std::vector<CurveGroup>& groups);

/// Modified band depth (J = 2) of every row of `curves`; boundary counts as inside.
std::vector<double> band_depths(const Eigen::MatrixXd& curves);

/// out(i, k) = sum_l centered(i, l) w_l basis(l, k).
Eigen::MatrixXd project(const Eigen::MatrixXd& centered, const std::vector<double>& weights,
                        const Eigen::MatrixXd& basis);

int max_threads();

namespace serial {

CrossMoments cross_moments(const Eigen::MatrixXd& centered, const std::vector<CurveGroup>& groups);
std::vector<double> band_depths(const Eigen::MatrixXd& curves);
Eigen::MatrixXd project(const Eigen::MatrixXd& centered, const std::vector<double>& weights,
                        const Eigen::MatrixXd& basis);

} // namespace serial

} // namespace mfpca::kernels
