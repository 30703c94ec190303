#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "../support/fixtures.hpp"
#include "gbl/errors.hpp"
#include "gbl/value_model.hpp"

using namespace gbl;
using gbl::testing::node;

TEST_CASE("scalar lookups") {
    ScalarQTable t(3);
    CHECK(t.q(node(0), 1) == 0.0);
    CHECK(t.size() == 0);
    t.set(node(0), 1, 2.5);
    CHECK(t.q(node(0), 1) == 2.5);
    CHECK(t.q(node(0), 0) == 0.0);
}

TEST_CASE("categorical defaults") {
    CategoricalQTable t(2, {51, 0.0, 1.0});
    auto d = t.dist(node(0), 0);
    REQUIRE(d.size() == 51);
    for (double p : d) CHECK(p == doctest::Approx(1.0 / 51));
    CHECK(t.size() == 0);
    for (std::size_t i = 0; i < 51; ++i) CHECK(t.atoms()[i] == 0.0 + static_cast<double>(i) * (1.0 / 50));
}

TEST_CASE("expected_value") {
    std::vector<double> atoms{0, 1, 2, 3, 4};
    std::vector<double> point{0, 0, 0, 1, 0};
    CHECK(expected_value(point, atoms) == 3.0);
    std::vector<double> two_atoms{0, 1}, half{0.5, 0.5};
    CHECK(expected_value(half, two_atoms) == 0.5);
    std::vector<double> a{0, 4}, p{0.25, 0.75};
    CHECK(expected_value(p, a) == 3.0);
}

TEST_CASE("greedy_action tie-breaks to the lowest index") {
    ScalarQTable t(3);
    t.set(node(0), 1, 1.0);
    CHECK(greedy_action(t, node(0)) == 1);
    CHECK(greedy_action(t, node(1)) == 0);
    t.set(node(2), 0, 2.0);
    t.set(node(2), 1, 2.0);
    t.set(node(2), 2, 1.0);
    CHECK(greedy_action(t, node(2)) == 0);
}

TEST_CASE("greedy_action is invariant to shifting a row") {
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        ScalarQTable t(4), shifted(4);
        double c = rng.uniform() * 10 - 5;
        for (Action a = 0; a < 4; ++a) {
            double v = static_cast<double>(rng.below(5));
            t.set(node(0), a, v);
            shifted.set(node(0), a, v + c);
        }
        CHECK(greedy_action(t, node(0)) == greedy_action(shifted, node(0)));
    }
}

TEST_CASE("scalar_update") {
    ScalarQTable t(1);
    t.update(node(0), 0, 1.0, 1.0);
    CHECK(t.q(node(0), 0) == 1.0);
    t.set(node(1), 0, 0.0);
    t.update(node(1), 0, 1.0, 0.5);
    CHECK(t.q(node(1), 0) == 0.5);
    t.set(node(2), 0, 2.0);
    t.update(node(2), 0, 2.0, 0.3);
    CHECK(t.q(node(2), 0) == 2.0);

    CHECK_THROWS(t.update(node(0), 0, std::nan(""), 0.5));
    CHECK_THROWS(t.update(node(0), 0, INFINITY, 0.5));
    CHECK_THROWS(t.update(node(0), 0, 1.0, 0.0));
    CHECK_THROWS(t.update(node(0), 0, 1.0, 1.5));
}

TEST_CASE("scalar_update contracts toward the target") {
    Rng rng(8);
    ScalarQTable t(1);
    for (int i = 0; i < 1000; ++i) {
        double q = t.q(node(0), 0), g = rng.uniform() * 4 - 2, alpha = 0.01 + 0.99 * rng.uniform();
        t.update(node(0), 0, g, alpha);
        CHECK(std::abs(t.q(node(0), 0) - g) == doctest::Approx((1 - alpha) * std::abs(q - g)).epsilon(1e-12));
    }
}

TEST_CASE("categorical_update") {
    CategoricalQTable t(1, {2, 0.0, 1.0});
    std::vector<double> m{0.2, 0.8};
    t.update(node(0), 0, m, 1.0);
    CHECK(t.dist(node(0), 0)[0] == doctest::Approx(0.2));

    std::vector<double> p{1.0, 0.0}, target{0.0, 1.0};
    t.set_dist(node(1), 0, p);
    t.update(node(1), 0, target, 0.5);
    CHECK(t.dist(node(1), 0)[0] == 0.5);
    CHECK(t.dist(node(1), 0)[1] == 0.5);

    std::vector<double> same(t.dist(node(1), 0).begin(), t.dist(node(1), 0).end());
    t.update(node(1), 0, same, 0.7);
    CHECK(t.dist(node(1), 0)[0] == doctest::Approx(0.5).epsilon(1e-15));

    std::vector<double> invalid{0.5, 0.6};
    CHECK_THROWS(t.update(node(0), 0, invalid, 0.5));
    std::vector<double> negative{-0.1, 1.1};
    CHECK_THROWS(t.update(node(0), 0, negative, 0.5));
}

TEST_CASE("categorical_update keeps normalization") {
    Rng rng(4);
    CategoricalQTable t(2, {51, 0.0, 1.0});
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> m(51);
        for (double& x : m) x = rng.uniform();
        double s = std::accumulate(m.begin(), m.end(), 0.0);
        for (double& x : m) x /= s;
        Action a = static_cast<Action>(rng.below(2));
        t.update(node(0), a, m, 0.01 + 0.99 * rng.uniform());
        auto d = t.dist(node(0), a);
        CHECK(std::abs(std::accumulate(d.begin(), d.end(), 0.0) - 1.0) < 1e-9);
    }
}

TEST_CASE("snapshots are frozen copies") {
    ScalarQTable t(2);
    t.set(node(0), 0, 1.0);
    auto snap = t.snapshot();
    t.update(node(0), 0, 5.0, 1.0);
    CHECK(snap->q(node(0), 0) == 1.0);
    auto snap2 = t.snapshot();
    auto snap3 = t.snapshot();
    CHECK(snap2->q(node(0), 0) == snap3->q(node(0), 0));
    ScalarQTable empty(2);
    CHECK(empty.snapshot()->q(node(3), 1) == 0.0);

    CategoricalQTable c(1, {3, 0.0, 1.0});
    auto csnap = c.snapshot();
    std::vector<double> m{1, 0, 0};
    c.update(node(0), 0, m, 1.0);
    CHECK(csnap->dist(node(0), 0)[0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("table persistence") {
    Rng rng(1);
    auto t = gbl::testing::random_table(rng, 10, 3);
    auto path = std::filesystem::temp_directory_path() / "gbl_test_table.vtbl";
    t.save(path);
    CHECK(ScalarQTable::load(path) == t);

    CategoricalQTable c(2, {5, -1.0, 1.0});
    std::vector<double> m{0.1, 0.2, 0.3, 0.4, 0.0};
    c.set_dist(node(4), 1, m);
    c.save(path);
    CHECK(CategoricalQTable::load(path) == c);
    CHECK_THROWS_AS(ScalarQTable::load(path), ParseError);
    std::filesystem::remove(path);
}
