#include "mfpca/basis.hpp"

#include <algorithm>
#include <cmath>

#include "mfpca/error.hpp"

namespace mfpca {

namespace {

// Index of the non-degenerate knot span containing x; the right end point
// belongs to the last non-empty span.
std::size_t find_span(std::span<const double> knots, double x) {
    const std::size_t m = knots.size();
    if (x >= knots[m - 1]) {
        std::size_t i = m - 2;
        while (i > 0 && knots[i] >= knots[m - 1]) --i;
        return i;
    }
    auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return static_cast<std::size_t>(it - knots.begin()) - 1;
}

Eigen::VectorXd cox_de_boor(std::span<const double> knots, int degree, double x) {
    const std::size_t n0 = knots.size() - 1;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n0));
    if (x < knots.front() || x > knots.back()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(knots.size() - degree - 1));
    b(static_cast<Eigen::Index>(find_span(knots, x))) = 1.0;
    for (int p = 1; p <= degree; ++p) {
        const std::size_t count = knots.size() - static_cast<std::size_t>(p) - 1;
        Eigen::VectorXd next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
        for (std::size_t i = 0; i < count; ++i) {
            double value = 0.0;
            const double left = knots[i + p] - knots[i];
            if (left > 0.0) value += (x - knots[i]) / left * b(static_cast<Eigen::Index>(i));
            const double right = knots[i + p + 1] - knots[i + 1];
            if (right > 0.0) value += (knots[i + p + 1] - x) / right * b(static_cast<Eigen::Index>(i + 1));
            next(static_cast<Eigen::Index>(i)) = value;
        }
        b = std::move(next);
    }
    return b;
}

} // namespace

Eigen::VectorXd evaluate_bspline(std::span<const double> knots, int degree, double x, int deriv) {
    const auto count = static_cast<Eigen::Index>(knots.size() - degree - 1);
    if (deriv == 0) return cox_de_boor(knots, degree, x);
    if (deriv > degree) return Eigen::VectorXd::Zero(count);
    // B'_{i,p} = p/(t_{i+p}-t_i) B_{i,p-1} - p/(t_{i+p+1}-t_{i+1}) B_{i+1,p-1}
    Eigen::VectorXd lower = evaluate_bspline(knots, degree - 1, x, deriv - 1);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double left = knots[u + degree] - knots[u];
        const double right = knots[u + degree + 1] - knots[u + 1];
        double value = 0.0;
        if (left > 0.0) value += degree / left * lower(i);
        if (right > 0.0) value -= degree / right * lower(i + 1);
        out(i) = value;
    }
    return out;
}

std::vector<double> BasisSystem::interior_knots() const {
    return {knots.begin() + degree + 1, knots.end() - degree - 1};
}

BasisSystem build_basis(const Grid& grid, int n_basis, int degree) {
    if (degree < 0) throw Error(ErrorKind::config, "spline degree must be nonnegative");
    if (n_basis < degree + 1) {
        throw Error(ErrorKind::config, "n_basis (" + std::to_string(n_basis) + ") must be at least degree + 1 (" +
                                           std::to_string(degree + 1) + ")");
    }
    grid.validate();
    const double lo = grid.points.front();
    const double hi = grid.points.back();

    BasisSystem basis;
    basis.degree = degree;
    basis.n_basis = n_basis;
    const int interior = n_basis - degree - 1;
    basis.knots.assign(static_cast<std::size_t>(degree + 1), lo);
    for (int k = 1; k <= interior; ++k) {
        basis.knots.push_back(lo + (hi - lo) * k / (interior + 1));
    }
    basis.knots.insert(basis.knots.end(), static_cast<std::size_t>(degree + 1), hi);

    basis.design.resize(static_cast<Eigen::Index>(grid.size()), n_basis);
    for (std::size_t l = 0; l < grid.size(); ++l) {
        basis.design.row(static_cast<Eigen::Index>(l)) = evaluate_bspline(basis.knots, degree, grid.points[l]).transpose();
    }

    // Second derivatives are piecewise polynomials of degree (degree - 2), so a
    // Gauss-Legendre rule with max(degree, 2) nodes per span integrates the
    // products exactly.
    basis.penalty = Eigen::MatrixXd::Zero(n_basis, n_basis);
    if (degree >= 2) {
        static const double nodes3[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static const double weights3[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        std::vector<double> nodes(nodes3, nodes3 + 3);
        std::vector<double> weights(weights3, weights3 + 3);
        if (degree > 3) {
            // Golub-Welsch for higher orders.
            const int m = degree;
            Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
            for (int i = 1; i < m; ++i) {
                const double b = i / std::sqrt(4.0 * i * i - 1.0);
                jacobi(i, i - 1) = b;
                jacobi(i - 1, i) = b;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
            nodes.resize(static_cast<std::size_t>(m));
            weights.resize(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) {
                nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
                const double v = solver.eigenvectors()(0, i);
                weights[static_cast<std::size_t>(i)] = 2.0 * v * v;
            }
        }
        for (std::size_t s = 0; s + 1 < basis.knots.size(); ++s) {
            const double a = basis.knots[s];
            const double b = basis.knots[s + 1];
            if (!(b > a)) continue;
            const double half = 0.5 * (b - a);
            const double mid = 0.5 * (a + b);
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                const Eigen::VectorXd d2 = evaluate_bspline(basis.knots, degree, mid + half * nodes[q], 2);
                basis.penalty.noalias() += (half * weights[q]) * d2 * d2.transpose();
            }
        }
        basis.penalty = 0.5 * (basis.penalty + basis.penalty.transpose()).eval();
    }
    return basis;
}

SmoothResult penalized_smooth(std::span<const double> values, const BasisSystem& basis, double lambda) {
    const auto length = basis.design.rows();
    if (static_cast<Eigen::Index>(values.size()) != length) {
        throw Error(ErrorKind::dimension, "values have " + std::to_string(values.size()) + " points, basis has " +
                                              std::to_string(length));
    }
    if (!(lambda >= 0.0)) throw Error(ErrorKind::config, "lambda must be nonnegative");
    if (lambda == 0.0 && length < basis.n_basis) {
        throw Error(ErrorKind::rank, "unpenalized fit needs at least n_basis grid points");
    }
    const Eigen::Map<const Eigen::VectorXd> y(values.data(), length);
    Eigen::MatrixXd normal = basis.design.transpose() * basis.design + lambda * basis.penalty;
    const Eigen::VectorXd rhs = basis.design.transpose() * y;

    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
        normal.diagonal().array() += 1e-12;
        llt.compute(normal);
        if (llt.info() != Eigen::Success) throw Error(ErrorKind::rank, "normal equations are singular");
    }
    SmoothResult out;
    out.coefficients = llt.solve(rhs);
    out.fitted = basis.design * out.coefficients;
    return out;
}

double inner_product(std::span<const double> f, std::span<const double> g, const Grid& grid) {
    if (f.size() != grid.size() || g.size() != grid.size()) {
        throw Error(ErrorKind::dimension, "inner product operands must match the grid length");
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < f.size(); ++l) sum += f[l] * g[l] * grid.weights[l];
    return sum;
}

} // namespace mfpca
