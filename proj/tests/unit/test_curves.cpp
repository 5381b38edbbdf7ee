#include <doctest.h>

#include <cmath>
#include <random>

#include "mfpca/curves.hpp"
#include "mfpca/error.hpp"
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

CurveRecord rec(std::string s, std::string o, std::string c, std::vector<double> v) {
    return {std::move(s), std::move(o), std::move(c), std::move(v), ""};
}

} // namespace

TEST_CASE("uniform grid weights sum to the domain length") {
    const Grid g = Grid::uniform(256);
    double sum = 0.0;
    for (double w : g.weights) sum += w;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(g.points.front() == 0.0);
    CHECK(g.points.back() == 1.0);
    const Grid g3 = Grid::uniform(5, 3.0);
    double sum3 = 0.0;
    for (double w : g3.weights) sum3 += w;
    CHECK(sum3 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("grid validation rejects bad grids") {
    CHECK(kind_of([] { Grid::uniform(1); }) == ErrorKind::domain);
    CHECK(kind_of([] { Grid::from_points({0.0, 0.5, 0.5, 1.0}); }) == ErrorKind::domain);
    Grid g = Grid::uniform(4);
    g.weights[1] = 0.0;
    CHECK(kind_of([&] { g.validate(); }) == ErrorKind::domain);
}

TEST_CASE("curve set invariants") {
    const Grid g = Grid::uniform(3);
    CHECK(kind_of([&] { CurveSet(g, {}); }) != ErrorKind::io);
    CHECK(kind_of([&] { CurveSet(g, {rec("a", "1", "1", {1, 2})}); }) == ErrorKind::dimension);
    CHECK(kind_of([&] { CurveSet(g, {rec("a", "1", "1", {1, NAN, 2})}); }) != ErrorKind::io);
    CHECK(kind_of([&] {
              CurveSet(g, {rec("a", "1", "1", {1, 2, 3}), rec("a", "1", "1", {1, 2, 3})});
          }) == ErrorKind::uniqueness);
}

TEST_CASE("load_curves on the structural example") {
    TempDir dir;
    const auto path = dir.write("c.csv", "subject_id,occasion_id,curve_id,v0,v1,v2\n"
                                          "s1,1,a,1,2,3\n"
                                          "s1,1,b,4,5,6\n"
                                          "s2,1,a,7,8,9\n"
                                          "s2,1,b,10,11,12\n");
    const CurveSet cs = load_curves(path);
    CHECK(cs.size() == 4);
    CHECK(cs.length() == 3);
    CHECK(cs.grid().points == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(cs[2].subject_id == "s2");
    CHECK(cs[3].values[2] == 12.0);
}

TEST_CASE("load_curves errors cite the row") {
    TempDir dir;
    const auto short_row = dir.write("a.csv", "subject_id,occasion_id,curve_id,v0,v1,v2\ns1,1,a,1,2,3\ns1,1,b,4,5\n");
    try {
        load_curves(short_row);
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    const auto junk = dir.write("b.csv", "subject_id,occasion_id,curve_id,v0,v1\ns1,1,a,1,x\n");
    CHECK(kind_of([&] { load_curves(junk); }) == ErrorKind::parse);
    const auto dup = dir.write("c.csv", "subject_id,occasion_id,curve_id,v0,v1\ns1,1,a,1,2\ns1,1,a,3,4\n");
    CHECK(kind_of([&] { load_curves(dup); }) == ErrorKind::uniqueness);
    CHECK(kind_of([&] { load_curves(dir.path / "missing.csv"); }) == ErrorKind::io);
}

TEST_CASE("grid sidecar overrides the uniform grid") {
    TempDir dir;
    const auto grid = dir.write("g.csv", "t\n0\n0.2\n1\n");
    const auto curves = dir.write("c.csv", "subject_id,occasion_id,curve_id,v0,v1,v2\ns1,1,a,1,2,3\n");
    CsvOptions options;
    options.grid_path = grid;
    const CurveSet cs = load_curves(curves, options);
    CHECK(cs.grid().points == std::vector<double>{0.0, 0.2, 1.0});
    const auto wrong = dir.write("g2.csv", "t\n0\n1\n");
    options.grid_path = wrong;
    CHECK(kind_of([&] { load_curves(curves, options); }) == ErrorKind::dimension);
}

TEST_CASE("save then load is bit-exact") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 1e3);
    std::vector<CurveRecord> records;
    for (int s = 0; s < 4; ++s)
        for (int j = 0; j < 3; ++j) {
            std::vector<double> v(17);
            for (auto& x : v) x = z(rng) * std::pow(10.0, (s - 2) * 40);
            records.push_back(rec("s" + std::to_string(s), "1", "c" + std::to_string(j), v));
        }
    records[0].values[0] = 5e-324;
    records[0].values[1] = -0.0;
    const CurveSet original(Grid::uniform(17), records);
    TempDir dir;
    save_curves(original, dir.path / "rt.csv");
    const CurveSet back = load_curves(dir.path / "rt.csv");
    REQUIRE(back.size() == original.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].key() == original[i].key());
        for (std::size_t l = 0; l < 17; ++l)
            CHECK(std::bit_cast<std::uint64_t>(back[i].values[l]) == std::bit_cast<std::uint64_t>(original[i].values[l]));
    }
}

TEST_CASE("subject means") {
    const CurveSet cs(Grid::uniform(3), {rec("a", "1", "1", {0, 0, 0}), rec("a", "2", "1", {2, 2, 2}),
                                         rec("b", "1", "1", {1, 5, 9})});
    const CurveSet m = subject_mean_curves(cs);
    REQUIRE(m.size() == 2);
    CHECK(m[0].values == std::vector<double>{1, 1, 1});
    CHECK(m[0].occasion_id == pooled_token);
    CHECK(m[0].curve_id == pooled_token);
    CHECK(m[1].values == std::vector<double>{1, 5, 9});

    SUBCASE("idempotent") {
        const CurveSet twice = subject_mean_curves(m);
        for (std::size_t i = 0; i < m.size(); ++i) CHECK(twice[i].values == m[i].values);
    }
    SUBCASE("59 subjects give 59 records") {
        std::vector<CurveRecord> r;
        for (int s = 0; s < 59; ++s)
            for (int j = 0; j < 1 + s % 4; ++j) r.push_back(rec("s" + std::to_string(s), "1", std::to_string(j), {1.0 * s, 2.0}));
        CHECK(subject_mean_curves(CurveSet(Grid::uniform(2), r)).size() == 59);
    }
}

TEST_CASE("groups follow first appearance") {
    const CurveSet cs(Grid::uniform(2), {rec("b", "2", "1", {0, 0}), rec("a", "1", "1", {0, 0}),
                                         rec("b", "1", "1", {0, 0}), rec("b", "2", "2", {0, 0})});
    const auto pooled = cs.groups(false);
    REQUIRE(pooled.size() == 2);
    CHECK(pooled[0].subject_id == "b");
    CHECK(pooled[0].members == std::vector<std::size_t>{0, 2, 3});
    const auto per = cs.groups(true);
    REQUIRE(per.size() == 3);
    CHECK(per[0].occasion_id == "2");
    CHECK(per[0].members == std::vector<std::size_t>{0, 3});
}

TEST_CASE("resample_to_grid") {
    const Grid two = Grid::from_points({0.0, 1.0});
    const Grid three = Grid::uniform(3);
    CHECK(resample_to_grid(std::vector<double>{0.0, 1.0}, two, three) == std::vector<double>{0.0, 0.5, 1.0});

    const std::vector<double> v{3.0, -1.0, 4.0};
    CHECK(resample_to_grid(v, three, three) == v);

    const Grid fine = Grid::uniform(512);
    const Grid coarse = Grid::uniform(256);
    auto bump = [](double t) { return std::exp(-0.5 * std::pow((t - 0.4) / 0.05, 2)); };
    std::vector<double> values;
    for (double t : fine.points) values.push_back(bump(t));
    const auto out = resample_to_grid(values, fine, coarse);
    double sup = 0.0;
    for (std::size_t l = 0; l < out.size(); ++l) sup = std::max(sup, std::abs(out[l] - bump(coarse.points[l])));
    CHECK(sup <= 1e-3);

    const Grid wider = Grid::from_points({0.0, 0.5, 1.1});
    CHECK(kind_of([&] { resample_to_grid(v, three, wider); }) == ErrorKind::domain);
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.125})
        CHECK(parse_double(format_double(x)).value() == x);
    CHECK_FALSE(parse_double("1.5abc").has_value());
    CHECK_FALSE(parse_double("").has_value());
}
