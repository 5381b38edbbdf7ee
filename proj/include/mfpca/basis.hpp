#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfpca/curves.hpp"

namespace mfpca {

/// B-spline basis evaluated on a grid, with its exact second-derivative
/// roughness penalty.
struct BasisSystem {
    int degree = 3;
    int n_basis = 18;
    std::vector<double> knots;  // full knot vector, endpoints repeated degree + 1 times
    Eigen::MatrixXd design;     // L x n_basis
    Eigen::MatrixXd penalty;    // n_basis x n_basis, integral of B_i'' B_j''

    std::vector<double> interior_knots() const;
};

BasisSystem build_basis(const Grid& grid, int n_basis = 18, int degree = 3);

/// Values (deriv = 0) or derivatives of every basis function at x.
Eigen::VectorXd evaluate_bspline(std::span<const double> knots, int degree, double x, int deriv = 0);

struct SmoothResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd fitted;
};

/// Minimizes |values - design c|^2 + lambda c' penalty c.
SmoothResult penalized_smooth(std::span<const double> values, const BasisSystem& basis, double lambda);

/// Weighted Riemann sum sum_l f(t_l) g(t_l) w_l.
double inner_product(std::span<const double> f, std::span<const double> g, const Grid& grid);

} // namespace mfpca
