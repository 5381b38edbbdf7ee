#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mfpca/error.hpp"
#include "mfpca/special.hpp"
#include "mfpca/valmetrics.hpp"
#include "oracles.hpp"

#if MFPCA_HAVE_BOOST_ORACLE
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#endif

using namespace mfpca;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an mfpca::Error");
    return ErrorKind::io;
}

Eigen::MatrixXd two_way(std::size_t n, std::size_t k, double sr, double sc, double sv, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> col(k);
    for (auto& c : col) c = std::sqrt(sc) * z(rng);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::sqrt(sr) * z(rng);
        for (std::size_t j = 0; j < k; ++j)
            y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 10.0 + r + col[j] + std::sqrt(sv) * z(rng);
    }
    return y;
}

} // namespace

TEST_CASE("ICC on constant rows") {
    Eigen::MatrixXd y(5, 2);
    for (int i = 0; i < 5; ++i) y.row(i).setConstant(i);
    auto r = icc(y);
    CHECK(r.mse == 0.0);
    CHECK(r.icc_a1 == doctest::Approx(1.0));
    CHECK(r.icc_c1 == doctest::Approx(1.0));
    y.col(1).array() += 5.0;
    r = icc(y);
    CHECK(r.icc_c1 == doctest::Approx(1.0));
    CHECK(r.icc_a1 < 1.0);
}

TEST_CASE("ICC matches the variance-component oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto y = two_way(40, 3, 2.0, 0.5, 1.0, seed);
        const auto r = icc(y);
        const auto o = oracle::icc_by_components(y);
        CHECK(r.icc_a1 == doctest::Approx(o.a1).epsilon(1e-12));
        CHECK(r.icc_c1 == doctest::Approx(o.c1).epsilon(1e-12));
        CHECK(r.icc_a1 <= 1.0);
        if (r.msc >= r.mse) CHECK(r.icc_c1 >= r.icc_a1);
    }
}

TEST_CASE("ICC population ratios are recovered on average") {
    // A single k = 2 layout estimates sigma_c^2 from one column difference, so
    // ICC(A,1) is checked as an average over independent layouts.
    double a1 = 0.0, c1 = 0.0;
    const int layouts = 200;
    for (int rep = 0; rep < layouts; ++rep) {
        const auto r = icc(two_way(2000, 2, 4.0, 1.0, 1.0, 1000 + static_cast<std::uint64_t>(rep)));
        a1 += r.icc_a1 / layouts;
        c1 += r.icc_c1 / layouts;
    }
    CHECK(std::abs(c1 - 0.8) <= 0.03);
    // E over layouts of 4 / (5 + chi^2_1) for the agreement form.
    double expected = 0.0;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    for (int i = 0; i < 200000; ++i) {
        const double q = z(rng);
        expected += 4.0 / (5.0 + q * q) / 200000.0;
    }
    CHECK(std::abs(a1 - expected) <= 0.03);
}

TEST_CASE("ICC invariances and errors") {
    const auto y = two_way(30, 2, 3.0, 1.0, 1.0, 8);
    const auto base = icc(y);
    Eigen::MatrixXd shifted = y.array() + 7.0;
    CHECK(icc(shifted).icc_a1 == doctest::Approx(base.icc_a1).epsilon(1e-10));
    CHECK(icc(shifted).icc_c1 == doctest::Approx(base.icc_c1).epsilon(1e-10));
    Eigen::MatrixXd col = y;
    col.col(1).array() += 3.0;
    CHECK(icc(col).icc_c1 == doctest::Approx(base.icc_c1).epsilon(1e-10));

    CHECK(kind_of([] { icc(Eigen::MatrixXd::Constant(4, 2, 1.0)); }) == ErrorKind::undefined);
    CHECK(kind_of([] { icc(Eigen::MatrixXd::Ones(1, 2)); }) == ErrorKind::insufficient_data);
    Eigen::MatrixXd missing = y;
    missing(3, 1) = std::nan("");
    CHECK_THROWS_AS(icc(missing), Error);
}

TEST_CASE("negative ICC is reported unclipped") {
    Eigen::MatrixXd y(4, 2);
    y << 0, 1, 1, 0, 0, 1, 1, 0;
    CHECK(icc(y).icc_c1 < 0.0);
}

TEST_CASE("Mann-Whitney exact p-values") {
    const std::vector<double> x{1, 2}, y{3, 4};
    const auto r = mann_whitney(x, y);
    CHECK(r.exact);
    CHECK(r.u == 4.0);
    CHECK(r.u_min == 0.0);
    CHECK(r.p_value == 1.0 / 3.0);

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u;
    for (auto [n1, n2] : {std::pair{3, 4}, {5, 5}, {2, 9}, {6, 7}}) {
        std::vector<double> a(static_cast<std::size_t>(n1)), b(static_cast<std::size_t>(n2));
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng) + 0.2;
        const auto res = mann_whitney(a, b);
        CHECK(res.exact);
        CHECK(res.p_value == doctest::Approx(oracle::brute_exact_mw_p(a.size(), b.size(), res.u)).epsilon(1e-12));
    }
}

TEST_CASE("Mann-Whitney normal approximation") {
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
        x.push_back(i);
        y.push_back(100 + i);
    }
    const auto far = mann_whitney(x, y);
    CHECK_FALSE(far.exact);
    CHECK(far.u == 900.0);
    CHECK(far.p_value < 1e-9);
    // Closed form at maximal U: z = (450 - 0.5) / sqrt(30*30*61/12).
    const double z = 449.5 / std::sqrt(900.0 * 61.0 / 12.0);
    CHECK(far.p_value == doctest::Approx(2.0 * special::normal_upper_tail(z)).epsilon(1e-12));

    const auto same = mann_whitney(x, x);
    CHECK(same.u == 450.0);
    CHECK(same.p_value >= 0.99);

    const std::vector<double> tied_x{1, 1, 2, 2, 3}, tied_y{2, 3, 3, 3};
    const auto tied = mann_whitney(tied_x, tied_y);
    CHECK_FALSE(tied.exact);
    CHECK(tied.u == doctest::Approx(oracle::brute_auc(tied_x, tied_y) * 20.0));
    CHECK(kind_of([&] { mann_whitney(std::vector<double>{}, y); }) == ErrorKind::insufficient_data);
}

TEST_CASE("Mann-Whitney p is invariant under increasing transforms") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    std::vector<double> x(25), y(30);
    for (auto& v : x) v = z(rng);
    for (auto& v : y) v = z(rng) + 0.3;
    auto tx = x, ty = y;
    for (auto& v : tx) v = std::exp(v) * 3.0 - 1.0;
    for (auto& v : ty) v = std::exp(v) * 3.0 - 1.0;
    CHECK(mann_whitney(tx, ty).p_value == mann_whitney(x, y).p_value);
}

TEST_CASE("AUC properties") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(auc(s, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auc(s, std::vector<int>{0, 1, 0, 1}) == 0.75);
    CHECK(auc(std::vector<double>(6, 2.0), std::vector<int>{0, 1, 0, 1, 0, 1}) == 0.5);
    CHECK(kind_of([&] { auc(s, std::vector<int>{1, 1, 1, 1}); }) == ErrorKind::insufficient_data);

    std::mt19937_64 rng(13);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n1 = 3 + rep % 17, n2 = 4 + rep % 11;
        std::vector<double> x(n1), y(n2), scores;
        std::vector<int> labels;
        for (auto& v : x) v = z(rng);
        for (auto& v : y) v = z(rng) + 0.5;
        for (double v : x) scores.push_back(v), labels.push_back(0);
        for (double v : y) scores.push_back(v), labels.push_back(1);
        const double a = auc(scores, labels);
        CHECK(a == oracle::brute_auc(x, y));
        const auto g = group_test(x, y);
        CHECK(g.auc == g.u_statistic / static_cast<double>(n1 * n2));
        CHECK(g.auc == a);
        std::vector<double> negated = scores;
        for (auto& v : negated) v = -v;
        CHECK(a + auc(negated, labels) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("midranks") {
    CHECK(midranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("correlation") {
    std::vector<double> x, affine, expo;
    for (int i = 0; i < 20; ++i) {
        x.push_back(0.3 * i);
        affine.push_back(3 * 0.3 * i + 1);
        expo.push_back(std::exp(0.3 * i));
    }
    CHECK(correlation(x, affine) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(correlation(x, affine, CorrelationMethod::spearman) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(correlation(x, expo, CorrelationMethod::spearman) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(correlation(x, expo) < 1.0);

    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u;
    std::vector<double> a(10000), b(10000);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    CHECK(std::abs(correlation(a, b)) < 0.05);
    CHECK(kind_of([] { correlation(std::vector<double>(5, 1.0), std::vector<double>{1, 2, 3, 4, 5}); }) ==
          ErrorKind::undefined);
}

TEST_CASE("simple regression") {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
        x.push_back(i);
        y.push_back(2.0 * i + 1.0);
    }
    const auto exact = ols_simple(x, y);
    CHECK(exact.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(exact.intercept == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(exact.r_squared == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(exact.p_slope < 1e-12);

    std::mt19937_64 rng(15);
    std::normal_distribution<double> z;
    std::vector<double> nx(25), ny(25);
    for (auto& v : nx) v = z(rng);
    for (std::size_t i = 0; i < 25; ++i) ny[i] = 0.4 * nx[i] + z(rng);
    const auto fit = ols_simple(nx, ny);
    const double r = correlation(nx, ny);
    CHECK(std::abs(fit.r_squared - r * r) <= 1e-12);

    CHECK(kind_of([] { ols_simple(std::vector<double>{1, 2}, std::vector<double>{1, 2}); }) ==
          ErrorKind::insufficient_data);
    CHECK(kind_of([] { ols_simple(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) == ErrorKind::rank);
}

TEST_CASE("regression p-values are uniform under the null") {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> z;
    std::vector<double> p;
    for (int rep = 0; rep < 2000; ++rep) {
        std::vector<double> x(20), y(20);
        for (auto& v : x) v = z(rng);
        for (auto& v : y) v = z(rng);
        p.push_back(ols_simple(x, y).p_slope);
    }
    CHECK(ks_uniform(p) < 0.05);
}

TEST_CASE("KS statistic") {
    CHECK(ks_uniform(std::vector<double>{0.5}) == doctest::Approx(0.5));
    CHECK(ks_uniform(std::vector<double>{0.125, 0.375, 0.625, 0.875}) == doctest::Approx(0.125));
}

TEST_CASE("special functions") {
    CHECK(special::normal_upper_tail(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(special::normal_upper_tail(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(special::incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(special::incomplete_beta(2.0, 3.0, 0.4) ==
          doctest::Approx(0.5248).epsilon(1e-12)); // closed form 1 - (1-x)^3 (1 + 3x) = 0.5248
    // t with 1 df is Cauchy: P(|T| > 1) = 1/2.
    CHECK(special::student_t_two_sided(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(special::kolmogorov_upper_tail(1.3580986393225505) == doctest::Approx(0.05).epsilon(1e-6));
#if MFPCA_HAVE_BOOST_ORACLE
    for (double a : {0.5, 1.5, 4.0, 12.5})
        for (double b : {0.5, 2.0, 9.0, 40.0})
            for (double x : {0.001, 0.1, 0.37, 0.5, 0.8, 0.999})
                CHECK(std::abs(special::incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-10);
    const boost::math::normal n;
    for (double q : {-3.0, -0.5, 0.7, 2.5, 6.0})
        CHECK(std::abs(special::normal_upper_tail(q) - boost::math::cdf(boost::math::complement(n, q))) <= 1e-10);
#endif
}
