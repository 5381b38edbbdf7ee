#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "mfpca/basis.hpp"
#include "mfpca/error.hpp"
#include "oracles.hpp"

using namespace mfpca;

TEST_CASE("partition of unity for many configurations") {
    for (int degree : {0, 1, 2, 3, 4, 5})
        for (int n_basis : {degree + 1, degree + 3, 18}) {
            if (n_basis < degree + 1) continue;
            for (std::size_t L : {7u, 101u, 256u}) {
                const auto b = build_basis(Grid::uniform(L), n_basis, degree);
                CHECK(b.design.rows() == static_cast<Eigen::Index>(L));
                CHECK(b.design.cols() == n_basis);
                CHECK((b.design.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
            }
        }
}

TEST_CASE("piecewise-constant basis splits at the interior knot") {
    const auto b = build_basis(Grid::from_points({0.0, 0.49, 0.51, 1.0}), 2, 0);
    Eigen::MatrixXd expected(4, 2);
    expected << 1, 0, 1, 0, 0, 1, 0, 1;
    CHECK((b.design - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cubic basis with 18 functions has 14 interior knots") {
    const auto b = build_basis(Grid::uniform(101), 18, 3);
    CHECK(b.interior_knots().size() == 14);
    const std::set<double> unique(b.knots.begin(), b.knots.end());
    CHECK(unique.size() == 16);
    CHECK(b.knots.size() == 22);
}

TEST_CASE("too few basis functions is a configuration error") {
    try {
        build_basis(Grid::uniform(10), 3, 3);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}

TEST_CASE("penalty matches a Simpson-rule integral of second derivatives") {
    for (int degree : {2, 3, 4}) {
        const auto b = build_basis(Grid::uniform(50), 9, degree);
        CHECK((b.penalty - b.penalty.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * b.penalty.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.penalty);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * es.eigenvalues().maxCoeff());
        // Simpson is exact only per polynomial piece, so integrate piece by piece.
        const auto knots = b.interior_knots();
        std::vector<double> breaks{0.0};
        breaks.insert(breaks.end(), knots.begin(), knots.end());
        breaks.push_back(1.0);
        for (int i = 0; i < 9; i += 2)
            for (int j = i; j < 9; j += 3) {
                double integral = 0.0;
                for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
                    const double a = breaks[p] + 1e-13, c = breaks[p + 1] - 1e-13;
                    integral += oracle::simpson(
                        [&](double x) {
                            const auto d2 = evaluate_bspline(b.knots, degree, x, 2);
                            return d2[i] * d2[j];
                        },
                        a, c, 400);
                }
                CHECK(b.penalty(i, j) == doctest::Approx(integral).epsilon(1e-6).scale(1.0));
            }
    }
}

TEST_CASE("penalized smoothing") {
    const Grid grid = Grid::uniform(101);
    const auto b = build_basis(grid);

    SUBCASE("constants are reproduced for any lambda") {
        const std::vector<double> five(101, 5.0);
        for (double lambda : {0.0, 1e-5, 1.0, 1e6}) {
            const auto fit = penalized_smooth(five, b, lambda);
            // Exact in exact arithmetic; roundoff grows with the penalty's conditioning.
            CHECK((fit.fitted.array() - 5.0).abs().maxCoeff() <= 1e-11 * std::max(1.0, lambda));
        }
    }
    SUBCASE("exact fit recovers coefficients") {
        Eigen::VectorXd c(18);
        for (int k = 0; k < 18; ++k) c[k] = std::sin(0.7 * k) + 0.1 * k;
        const Eigen::VectorXd y = b.design * c;
        const auto fit = penalized_smooth(std::vector<double>(y.data(), y.data() + y.size()), b, 0.0);
        CHECK((fit.coefficients - c).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((fit.fitted - y).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("residual sum of squares is nondecreasing in lambda") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> z(0.0, 0.2);
        std::vector<double> y;
        for (double t : grid.points) y.push_back(std::sin(2 * std::numbers::pi * t) + z(rng));
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), 101);
        double previous = -1.0;
        for (double lambda : {0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6}) {
            const double rss = (yv - penalized_smooth(y, b, lambda).fitted).squaredNorm();
            CHECK(rss >= previous - 1e-12 * std::max(1.0, rss));
            previous = rss;
        }
    }
    SUBCASE("errors") {
        const auto small = build_basis(Grid::uniform(10), 12, 3);
        try {
            penalized_smooth(std::vector<double>(10, 1.0), small, 0.0);
            FAIL("expected a rank error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::rank);
        }
        try {
            penalized_smooth(std::vector<double>(7, 1.0), b, 0.0);
            FAIL("expected a dimension error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::dimension);
        }
    }
}

TEST_CASE("inner products") {
    const Grid g = Grid::uniform(512);
    const std::vector<double> one(512, 1.0), zero(512, 0.0);
    CHECK(inner_product(one, one, g) == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<double> s, c, f;
    for (double t : g.points) {
        s.push_back(std::sin(2 * std::numbers::pi * t));
        c.push_back(std::cos(2 * std::numbers::pi * t));
        f.push_back(std::exp(t) - 3 * t * t);
    }
    CHECK(inner_product(f, zero, g) == 0.0);
    CHECK(std::abs(inner_product(s, c, g)) <= 1e-3);
    CHECK(inner_product(s, f, g) == doctest::Approx(inner_product(f, s, g)).epsilon(1e-15));
    std::vector<double> combo(512);
    for (std::size_t l = 0; l < 512; ++l) combo[l] = 2.0 * s[l] - 3.0 * c[l];
    CHECK(inner_product(combo, f, g) ==
          doctest::Approx(2.0 * inner_product(s, f, g) - 3.0 * inner_product(c, f, g)).epsilon(1e-12));
    try {
        inner_product(one, std::vector<double>(3, 1.0), g);
        FAIL("expected a dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension);
    }
}
