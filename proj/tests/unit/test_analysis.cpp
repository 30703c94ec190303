#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <regex>
#include <sstream>

#include "../support/fixtures.hpp"
#include "gbl/analysis.hpp"

using namespace gbl;
using gbl::testing::node;

namespace {

TransitionGraph chain_graph(int first, int length) {
    TransitionGraph g;
    g.observe_initial(node(first));
    for (int i = 0; i < length - 1; ++i) g.insert({node(first + i), 0, 0.0, node(first + i + 1), false});
    return g;
}

std::size_t count_matches(const std::string& text, const std::string& pattern) {
    std::regex re(pattern);
    return static_cast<std::size_t>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), {}));
}

}  // namespace

TEST_CASE("crossover_probability") {
    CHECK(std::abs(crossover_probability(0.927, 10) - 0.5314) < 0.0005);
    CHECK(crossover_probability(1.0, 7) == 0.0);
    CHECK(crossover_probability(0.5, 1) == 0.5);
    CHECK_THROWS(crossover_probability(0.0, 3));
    CHECK_THROWS(crossover_probability(0.5, 0));
}

TEST_CASE("crossover_probability is monotone") {
    double prev = 1.0;
    for (double r = 0.05; r <= 1.0; r += 0.05) {
        double p = crossover_probability(r, 10);
        CHECK(p <= prev);
        prev = p;
    }
    prev = 0.0;
    for (std::uint32_t h = 1; h <= 30; ++h) {
        double p = crossover_probability(0.9, h);
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("pearson_correlation") {
    std::vector<double> x{1, 2, 3}, y{2, 4, 7};
    CHECK(pearson_correlation(x, x) == doctest::Approx(1.0));
    std::vector<double> neg{-1, -2, -3};
    CHECK(pearson_correlation(x, neg) == doctest::Approx(-1.0));
    CHECK(pearson_correlation(x, y) == doctest::Approx(0.9934).epsilon(1e-4));
    std::vector<double> flat{1, 1, 1}, one{1};
    CHECK_THROWS(pearson_correlation(x, flat));
    CHECK_THROWS(pearson_correlation(one, one));
    CHECK_THROWS(pearson_correlation(x, one));
}

TEST_CASE("stability_report") {
    EstimateWindows w(10);
    CHECK_THROWS(stability_report(w));
    for (int i = 0; i < 10; ++i) w.record(node(0), 0, 0.5);
    auto constant = stability_report(w);
    CHECK(constant.mean_of_stds == 0.0);
    CHECK(constant.mean_of_means == 0.5);

    EstimateWindows alt(10);
    for (int i = 0; i < 10; ++i) alt.record(node(0), 0, i % 2);
    CHECK(stability_report(alt).mean_of_stds == doctest::Approx(0.527).epsilon(1e-3));
    for (int i = 0; i < 10; ++i) alt.record(node(1), 0, 1.0);
    CHECK(stability_report(alt).mean_of_stds == doctest::Approx(0.2635).epsilon(1e-3));
    CHECK(stability_report(alt).pairs == 2);

    // partial windows are skipped; older values fall out
    alt.record(node(2), 0, 5.0);
    CHECK(stability_report(alt).pairs == 2);
    for (int i = 0; i < 10; ++i) alt.record(node(0), 0, 0.0);
    CHECK(stability_report(alt).mean_of_stds == 0.0);
}

TEST_CASE("stability from the raw log equals the incremental report") {
    auto env = make_empty_grid(4);
    auto data = random_walk_dataset(*env, 400, 3);
    LearnerConfig cfg;
    cfg.total_steps = 300;
    cfg.batch_size = 8;
    BackupConfig b;
    b.op = BackupOperator::graph;
    auto r = offline_training(data, 4, cfg, b);
    auto inc = stability_report(r.metrics);
    auto raw = stability_report_from_log(r.metrics.estimate_log, 10);
    CHECK(inc.pairs == raw.pairs);
    CHECK(inc.mean_of_stds == raw.mean_of_stds);
    CHECK(inc.mean_of_means == raw.mean_of_means);
}

TEST_CASE("radial layout of a chain") {
    auto g = chain_graph(0, 3);
    auto layout = compute_radial_layout(g, g.initial_states());
    for (int i = 0; i < 3; ++i) CHECK(layout.positions[*g.find(node(i))].radius == i + 1);
    CHECK(layout.edges.size() == 2);
    CHECK(layout.self_loops.empty());
    CHECK(layout.outer_ring == 4);
}

TEST_CASE("two chains hang off the meta-root") {
    auto g = chain_graph(0, 3);
    g.observe_initial(node(10));
    g.insert({node(10), 0, 0.0, node(11), false});
    auto layout = compute_radial_layout(g, g.initial_states());
    CHECK(layout.positions[*g.find(node(0))].radius == 1);
    CHECK(layout.positions[*g.find(node(10))].radius == 1);
    CHECK(layout.roots.size() == 2);
    // disjoint sectors, split by leaf count (1:1)
    CHECK(layout.positions[*g.find(node(0))].angle == doctest::Approx(std::numbers::pi / 2));
    CHECK(layout.positions[*g.find(node(10))].angle == doctest::Approx(3 * std::numbers::pi / 2));
}

TEST_CASE("sector widths follow leaf counts") {
    TransitionGraph g;
    g.observe_initial(node(0));
    g.insert({node(0), 0, 0.0, node(1), false});
    g.insert({node(0), 1, 0.0, node(2), false});
    g.insert({node(1), 0, 0.0, node(3), false});
    g.insert({node(1), 1, 0.0, node(4), false});
    g.insert({node(1), 2, 0.0, node(5), false});
    auto layout = compute_radial_layout(g, g.initial_states());
    // node 1 has 3 leaves, node 2 has 1 -> sectors [0, 1.5pi) and [1.5pi, 2pi)
    CHECK(layout.positions[*g.find(node(1))].angle == doctest::Approx(0.75 * std::numbers::pi));
    CHECK(layout.positions[*g.find(node(2))].angle == doctest::Approx(1.75 * std::numbers::pi));
    for (int c : {3, 4, 5}) {
        double angle = layout.positions[*g.find(node(c))].angle;
        CHECK(angle >= 0.0);
        CHECK(angle < 1.5 * std::numbers::pi);
    }
}

TEST_CASE("self-loops are flagged separately and unreached states sit outside") {
    auto env = make_loop_mdp();
    std::vector<Action> actions{0, 0, 1, 0, 0};
    auto log = rollout(*env, actions, 0);
    auto g = gbl::testing::graph_from(std::span<const LoggedStep>(log));
    auto layout = compute_radial_layout(g, g.initial_states());
    REQUIRE(layout.self_loops.size() == 1);
    CHECK(layout.self_loops[0].first == *g.find(TableMdp::key(0)));
    CHECK(layout.self_loops[0].second == 2);
    for (const auto& [e, f] : layout.edges) CHECK(e.first != e.second);

    auto none = compute_radial_layout(g, std::span<const StateId>{});
    for (StateId s = 0; s < g.state_count(); ++s) CHECK(layout.reached[s]);
    for (StateId s = 0; s < g.state_count(); ++s) CHECK(none.positions[s].radius == none.outer_ring);
}

TEST_CASE("layout is deterministic") {
    auto env = make_environment("SlipperyGrid:5:0.2");
    auto log = random_walk_dataset(*env, 1000, 3);
    auto g = gbl::testing::graph_from(std::span<const LoggedStep>(log));
    std::ostringstream a, b;
    write_dot(a, g, compute_radial_layout(g, g.initial_states()));
    write_dot(b, g, compute_radial_layout(g, g.initial_states()));
    CHECK(a.str() == b.str());
}

TEST_CASE("DOT export") {
    auto g = chain_graph(0, 3);
    std::ostringstream os;
    write_dot(os, g, compute_radial_layout(g, g.initial_states()));
    std::string dot = os.str();
    CHECK(count_matches(dot, R"(\n  (root|s\d+) \[)") == 4);
    CHECK(count_matches(dot, " -> ") == 3);

    TransitionGraph empty;
    std::ostringstream sink;
    CHECK_THROWS(write_dot(sink, empty, RadialLayout{}));

    TransitionGraph heavy;
    heavy.observe_initial(node(0));
    for (int i = 0; i < 3; ++i) heavy.insert({node(0), 0, 0.0, node(1), false});
    std::ostringstream hs;
    write_dot(hs, heavy, compute_radial_layout(heavy, heavy.initial_states()));
    char expected[64];
    std::snprintf(expected, sizeof expected, "s0 -> s1 [penwidth=%.4f]", 1.0 + std::log(3.0));
    CHECK(hs.str().find(expected) != std::string::npos);
}

TEST_CASE("SVG chart") {
    std::ostringstream os;
    write_svg_chart(os, "returns", {{"graph", {{0, 0}, {1, 1}}}, {"tree", {{0, 0}, {1, 0.5}}}});
    CHECK(count_matches(os.str(), "<polyline") == 2);
}
