#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "mfpca/error.hpp"
#include "mfpca/model.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

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

Eigen::MatrixXd outer_sum(const Eigen::MatrixXd& phi, const Eigen::VectorXd& lambda) {
    return phi * lambda.asDiagonal() * phi.transpose();
}

double signed_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Grid& g) {
    double s = 0.0;
    for (Eigen::Index l = 0; l < a.size(); ++l) s += a[l] * b[l] * g.weights[static_cast<std::size_t>(l)];
    return s;
}

// Balanced noiseless design whose sample moments are exact: subject scores
// (+-2, +-1) have zero mean and orthogonal columns; the four within patterns
// (a,a), (a,-a), (-a,-a), (-a,a) cancel in the mean, in the cross terms and in
// the pooled within-subject cross-products. The level-2 direction is taken
// orthogonal to level 1 so that subject averages see no level-2 leakage. Hence K_B = phi1 diag(4,1) phi1',
// K_W = a^2 phi2 phi2', and reconstruction is exact.
struct ExactDesign {
    oracle::KnownModel model;
    CurveSet curves;
    double a2;
};

ExactDesign exact_design() {
    auto m = oracle::oracle_model(64, 0.0);
    Eigen::MatrixXd joint(64, 3);
    joint << m.phi1, m.phi2.col(0);
    m.phi2 = oracle::orthonormalize(joint, m.grid).rightCols(1);
    m.lambda2 = Eigen::VectorXd::Constant(1, 0.5);
    const double a = std::sqrt(0.5);
    const double etas[4][2] = {{2, 1}, {2, -1}, {-2, 1}, {-2, -1}};
    const double patterns[4][2] = {{a, a}, {a, -a}, {-a, -a}, {-a, a}};
    std::vector<CurveRecord> records;
    int subject = 0;
    for (const auto& eta : etas)
        for (const auto& pattern : patterns) {
            for (int j = 0; j < 2; ++j) {
                Eigen::VectorXd y = m.mean + eta[0] * m.phi1.col(0) + eta[1] * m.phi1.col(1) + pattern[j] * m.phi2.col(0);
                records.push_back({"s" + std::to_string(subject), "1", "c" + std::to_string(j),
                                   std::vector<double>(y.data(), y.data() + y.size()), ""});
            }
            ++subject;
        }
    return {m, CurveSet(m.grid, records), 0.5};
}

} // namespace

TEST_CASE("component selection by cumulative fraction") {
    CHECK(select_components(Eigen::Vector4d(4, 3, 2, 1), 0.70) == 2);
    CHECK(select_components(Eigen::Vector4d(4, 3, 2, 1), 0.40) == 1);
    CHECK(select_components(Eigen::Vector4d(4, 3, 2, 1), 1.0) == 4);
    // A decaying spectrum calibrated so that three components explain 88.1%
    // and four explain 95.6%: the 0.95 rule selects four.
    Eigen::VectorXd exemplar(6);
    exemplar << 48.73, 25.38, 14.0, 7.5, 2.5, 1.89;
    CHECK(select_components(exemplar, 0.95) == 4);
}

TEST_CASE("weighted eigendecomposition") {
    const Grid g = Grid::uniform(50);
    Eigen::MatrixXd p(50, 1);
    for (Eigen::Index l = 0; l < 50; ++l) p(l, 0) = -oracle::bump(g.points[static_cast<std::size_t>(l)], 0.4, 0.1);
    const Eigen::VectorXd phi = oracle::orthonormalize(p, g).col(0);

    SUBCASE("rank one") {
        const auto es = eigendecompose_operator(3.0 * phi * phi.transpose(), g);
        CHECK(es.values[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(es.values.tail(49).cwiseAbs().maxCoeff() <= 1e-9);
        // Sign convention flips the all-negative bump.
        CHECK((es.functions.col(0) + phi).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(orthonormality_error(es.functions, g) <= 1e-8);
    }
    SUBCASE("zero operator") {
        const auto es = eigendecompose_operator(Eigen::MatrixXd::Zero(50, 50), g);
        CHECK(es.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("tiny negative eigenvalue is clipped") {
        Eigen::MatrixXd p2(50, 1);
        for (Eigen::Index l = 0; l < 50; ++l) p2(l, 0) = oracle::bump(g.points[static_cast<std::size_t>(l)], 0.8, 0.05);
        Eigen::MatrixXd both(50, 2);
        both << phi, p2;
        const auto basis = oracle::orthonormalize(both, g);
        const Eigen::MatrixXd k = 2.0 * basis.col(0) * basis.col(0).transpose() -
                                  1e-12 * basis.col(1) * basis.col(1).transpose();
        const auto es = eigendecompose_operator(k, g);
        CHECK(es.values.minCoeff() >= 0.0);
        CHECK(es.values[0] == doctest::Approx(2.0).epsilon(1e-12));
        for (Eigen::Index i = 1; i < es.values.size(); ++i) CHECK(es.values[i] <= es.values[i - 1]);
    }
    SUBCASE("asymmetric input") {
        Eigen::MatrixXd k = phi * phi.transpose();
        k(0, 1) += 1e-6;
        CHECK(kind_of([&] { eigendecompose_operator(k, g); }) == ErrorKind::symmetry);
    }
}

TEST_CASE("sign convention picks the earliest index on ties") {
    Eigen::MatrixXd f(3, 2);
    f << -1, 0.5, 1, -2, 0.2, 1;
    apply_sign_convention(f);
    CHECK(f(0, 0) == 1.0);
    CHECK(f(1, 0) == -1.0);
    CHECK(f(1, 1) == 2.0);
}

TEST_CASE("covariance estimation") {
    const Grid g = Grid::uniform(8);
    SUBCASE("identical curves within subject give a zero within operator") {
        std::vector<CurveRecord> r;
        for (int s = 0; s < 5; ++s)
            for (int j = 0; j < 3; ++j) {
                std::vector<double> v(8);
                for (std::size_t l = 0; l < 8; ++l) v[l] = std::sin(static_cast<double>(s * 8 + static_cast<int>(l)));
                r.push_back({"s" + std::to_string(s), "1", std::to_string(j), v, ""});
            }
        const CurveSet cs(g, r);
        const Eigen::VectorXd mean = cs.matrix().colwise().mean();
        const auto cov = estimate_covariances(cs, mean);
        CHECK(cov.within.norm() <= 1e-10 * cov.total.norm());
        CHECK((cov.total - cov.total.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((cov.between - cov.between.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((cov.within - (cov.total - cov.between)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("globally identical curves") {
        std::vector<CurveRecord> r;
        for (int s = 0; s < 3; ++s)
            for (int j = 0; j < 2; ++j) r.push_back({"s" + std::to_string(s), "1", std::to_string(j), std::vector<double>(8, 2.0), ""});
        const auto cov = estimate_covariances(CurveSet(g, r), Eigen::VectorXd::Constant(8, 2.0));
        CHECK(cov.total.cwiseAbs().maxCoeff() == 0.0);
        CHECK(cov.between.cwiseAbs().maxCoeff() == 0.0);
        CHECK(cov.within.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single-curve subjects") {
        std::vector<CurveRecord> r;
        for (int s = 0; s < 3; ++s) r.push_back({"s" + std::to_string(s), "1", "1", std::vector<double>(8, s), ""});
        CHECK(kind_of([&] { estimate_covariances(CurveSet(g, r), Eigen::VectorXd::Zero(8)); }) == ErrorKind::unidentifiable);
    }
}

TEST_CASE("oracle recovery on a known two-level model") {
    // N = 200 subjects, 20 curves each, L = 128, Gaussian scores; seed fixed in advance.
    const auto m = oracle::oracle_model(128, 0.04);
    const auto data = oracle::generate(m, 200, 20, 20240601);
    const CurveSet cs(m.grid, data.records);
    const Eigen::VectorXd mean = cs.matrix().colwise().mean();

    const auto cov = estimate_covariances(cs, mean);
    const Eigen::MatrixXd kb = outer_sum(m.phi1, m.lambda1);
    CHECK((cov.between - kb).norm() / kb.norm() <= 0.15);

    FitOptions options;
    options.k1 = 2;
    options.k2 = 2;
    const auto model = fit_mfpca(cs, options);
    CHECK(orthonormality_error(model.level1.eigenfunctions, m.grid) <= 1e-8);
    CHECK(orthonormality_error(model.level2.eigenfunctions, m.grid) <= 1e-8);
    for (Eigen::Index k = 0; k < 2; ++k) {
        INFO("component " << k);
        CHECK(std::abs(model.level1.eigenvalues[k] / m.lambda1[k] - 1.0) <= 0.15);
        CHECK(std::abs(model.level2.eigenvalues[k] / m.lambda2[k] - 1.0) <= 0.15);
        CHECK(oracle::abs_inner(model.level1.eigenfunctions.col(k), m.phi1.col(k), m.grid) >= 0.95);
        CHECK(oracle::abs_inner(model.level2.eigenfunctions.col(k), m.phi2.col(k), m.grid) >= 0.95);
    }
    CHECK(model.metadata.n_subjects == 200);
    CHECK(model.metadata.n_curves == 4000);
}

TEST_CASE("noiseless data inside a K1 = 2, K2 = 1 model") {
    const auto d = exact_design();
    const auto model = fit_mfpca(d.curves);
    REQUIRE(model.level1.size() == 2);
    REQUIRE(model.level2.size() == 1);
    CHECK(model.sigma_e <= 1e-8);
    CHECK(std::abs(model.level1.eigenvalues[0] / 4.0 - 1.0) <= 1e-6);
    CHECK(std::abs(model.level1.eigenvalues[1] / 1.0 - 1.0) <= 1e-6);
    CHECK(std::abs(model.level2.eigenvalues[0] / d.a2 - 1.0) <= 1e-6);
    CHECK((model.mean - d.model.mean).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index k = 0; k < 2; ++k)
        CHECK(oracle::abs_inner(model.level1.eigenfunctions.col(k), d.model.phi1.col(k), d.model.grid) >=
              1.0 - 1e-9);
    CHECK(oracle::abs_inner(model.level2.eigenfunctions.col(0), d.model.phi2.col(0), d.model.grid) >= 1.0 - 1e-9);

    SUBCASE("eigenvalues are nonnegative and ordered, functions follow the sign convention") {
        for (const Level* level : {&model.level1, &model.level2})
            for (Eigen::Index k = 0; k < level->size(); ++k) {
                CHECK(level->eigenvalues[k] >= 0.0);
                if (k) CHECK(level->eigenvalues[k] <= level->eigenvalues[k - 1]);
                Eigen::Index at = 0;
                level->eigenfunctions.col(k).cwiseAbs().maxCoeff(&at);
                CHECK(level->eigenfunctions(at, k) > 0.0);
            }
    }
}

TEST_CASE("fit is equivariant under adding a fixed function") {
    const auto m = oracle::oracle_model(48, 0.01);
    const auto data = oracle::generate(m, 30, 6, 99);
    const CurveSet cs(m.grid, data.records);
    auto shifted_records = data.records;
    Eigen::VectorXd f(48);
    for (Eigen::Index l = 0; l < 48; ++l) f[l] = 3.0 * std::cos(5.0 * m.grid.points[static_cast<std::size_t>(l)]);
    for (auto& r : shifted_records)
        for (std::size_t l = 0; l < r.values.size(); ++l) r.values[l] += f[static_cast<Eigen::Index>(l)];
    FitOptions options;
    options.k1 = 2;
    options.k2 = 2;
    const auto a = fit_mfpca(cs, options);
    const auto b = fit_mfpca(CurveSet(m.grid, shifted_records), options);
    CHECK((b.mean - a.mean - f).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((b.level1.eigenvalues - a.level1.eigenvalues).cwiseAbs().maxCoeff() <= 1e-8 * a.level1.eigenvalues[0]);
    CHECK((b.level1.eigenfunctions - a.level1.eigenfunctions).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((b.level2.eigenfunctions - a.level2.eigenfunctions).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(b.sigma_e == doctest::Approx(a.sigma_e).epsilon(1e-8));
}

TEST_CASE("fit options are validated") {
    const auto d = exact_design();
    FitOptions bad;
    bad.pve1 = 0.0;
    CHECK(kind_of([&] { fit_mfpca(d.curves, bad); }) == ErrorKind::config);
    bad.pve1 = 1.2;
    CHECK(kind_of([&] { fit_mfpca(d.curves, bad); }) == ErrorKind::config);
}

TEST_CASE("single-level FPCA") {
    const Grid g = Grid::uniform(40);
    Eigen::MatrixXd p(40, 1);
    for (Eigen::Index l = 0; l < 40; ++l) p(l, 0) = oracle::bump(g.points[static_cast<std::size_t>(l)], 0.5, 0.1);
    const Eigen::VectorXd phi = oracle::orthonormalize(p, g).col(0);
    const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(40, 1.0, 2.0);

    SUBCASE("two subjects at mu +- phi") {
        const Eigen::VectorXd plus = mu + phi, minus = mu - phi;
        const CurveSet cs(g, {{"a", "*", "*", std::vector<double>(plus.data(), plus.data() + 40), ""},
                              {"b", "*", "*", std::vector<double>(minus.data(), minus.data() + 40), ""}});
        const auto model = fit_fpca(cs);
        REQUIRE(model.level1.size() >= 1);
        // Scores +-1 with denominator N give variance 1.
        CHECK(model.level1.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(signed_inner(model.level1.eigenfunctions.col(0), phi, g)) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(model.level2.size() == 0);
        CHECK(model.sigma_e <= 1e-20);
    }
    SUBCASE("identical subjects") {
        std::vector<double> v(mu.data(), mu.data() + 40);
        const auto model = fit_fpca(CurveSet(g, {{"a", "*", "*", v, ""}, {"b", "*", "*", v, ""}, {"c", "*", "*", v, ""}}));
        CHECK(model.level1.eigenvalues.cwiseAbs().maxCoeff() <= 1e-20);
    }
    SUBCASE("multiple curves per subject") {
        std::vector<double> v(mu.data(), mu.data() + 40);
        CHECK(kind_of([&] { fit_fpca(CurveSet(g, {{"a", "1", "1", v, ""}, {"a", "1", "2", v, ""}})); }) ==
              ErrorKind::precondition);
    }
    SUBCASE("agrees with the between covariance of one-curve subjects") {
        const auto m = oracle::oracle_model(40, 0.0);
        const auto data = oracle::generate(m, 25, 1, 17);
        const CurveSet cs(m.grid, data.records);
        FitOptions options;
        options.k1 = 3;
        const auto model = fit_fpca(cs, options);
        const Eigen::MatrixXd y = cs.matrix();
        const Eigen::RowVectorXd mean = y.colwise().mean();
        const Eigen::MatrixXd centered = y.rowwise() - mean;
        const auto es = eigendecompose_operator(centered.transpose() * centered / 25.0, m.grid);
        for (Eigen::Index k = 0; k < 3; ++k) {
            CHECK(model.level1.eigenvalues[k] == doctest::Approx(es.values[k]).epsilon(1e-10).scale(1e-12));
            if (es.values[k] > 1e-8)
                CHECK((model.level1.eigenfunctions.col(k) - es.functions.col(k)).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("model serialization") {
    const auto model = fit_mfpca(exact_design().curves);
    TempDir dir;
    save_model(model, dir.path / "m.json");
    const auto back = load_model(dir.path / "m.json");
    CHECK(back.grid == model.grid);
    CHECK((back.mean - model.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.level1.eigenvalues - model.level1.eigenvalues).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.level1.eigenfunctions - model.level1.eigenfunctions).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.level2.eigenvalues - model.level2.eigenvalues).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.level2.eigenfunctions - model.level2.eigenfunctions).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(back.sigma_e == model.sigma_e);
    CHECK(back.metadata.selection == model.metadata.selection);
    CHECK(back.metadata.n_curves == model.metadata.n_curves);

    const auto doc = nlohmann::json::parse(format_model(model));
    SUBCASE("eigenfunction of the wrong length") {
        auto bad = doc;
        bad["level1"]["eigenfunctions"][0].erase(0);
        CHECK(kind_of([&] { parse_model(bad.dump()); }) == ErrorKind::corrupt_model);
    }
    SUBCASE("missing sigma_e") {
        auto bad = doc;
        bad.erase("sigma_e");
        CHECK(kind_of([&] { parse_model(bad.dump()); }) == ErrorKind::corrupt_model);
    }
    SUBCASE("version mismatch") {
        auto bad = doc;
        bad["version"] = model_format_version + 1;
        CHECK(kind_of([&] { parse_model(bad.dump()); }) == ErrorKind::version);
    }
    SUBCASE("increasing eigenvalues") {
        auto bad = doc;
        bad["level1"]["eigenvalues"][1] = 100.0;
        CHECK(kind_of([&] { parse_model(bad.dump()); }) == ErrorKind::corrupt_model);
    }
    SUBCASE("not JSON") { CHECK(kind_of([&] { parse_model("{"); }) == ErrorKind::corrupt_model); }
    SUBCASE("reals carry 17 significant digits") {
        CHECK(format_model(model).find("0.10000000000000001") == std::string::npos);
        MfpcaModel tenth = model;
        tenth.sigma_e = 0.1;
        CHECK(format_model(tenth).find("0.10000000000000001") != std::string::npos);
    }
}
