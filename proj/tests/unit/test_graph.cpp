#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "../support/fixtures.hpp"
#include "gbl/errors.hpp"
#include "gbl/transition_graph.hpp"

using namespace gbl;
using gbl::testing::node;

namespace {

void check_counters(const TransitionGraph& g) {
    std::uint64_t total = 0;
    for (StateId s = 0; s < g.state_count(); ++s) {
        std::uint64_t cs = 0;
        for (PairId p : g.pairs_of(s)) {
            std::uint64_t csa = 0;
            for (const auto& t : g.pair(p).out) {
                CHECK(t.frequency >= 1);
                csa += t.frequency;
            }
            CHECK(csa == g.pair(p).count);
            cs += csa;
        }
        CHECK(cs == g.count(s));
        total += cs;
    }
    CHECK(total == g.total_transitions());
}

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / (std::string("gbl_test_") + name);
}

}  // namespace

TEST_CASE("insert examples") {
    TransitionGraph g;
    g.insert({node(0), 0, 0.0, node(1), false});
    CHECK(g.count(*g.find(node(0)), 0) == 1);
    CHECK(g.state_count() == 2);

    g.insert({node(0), 0, 0.0, node(1), false});
    auto out = g.outgoing(node(0), 0);
    REQUIRE(out.size() == 1);
    CHECK(out[0].frequency == 2);
    CHECK(g.count(*g.find(node(0)), 0) == 2);

    TransitionGraph h;
    h.insert({node(0), 0, 0.0, node(1), false});
    h.insert({node(0), 0, 0.0, node(2), false});
    auto branches = h.outgoing(node(0), 0);
    REQUIRE(branches.size() == 2);
    CHECK(branches[0].next_state == node(1));
    CHECK(branches[1].next_state == node(2));
    CHECK(branches[0].frequency == 1);
    CHECK(branches[1].frequency == 1);
    CHECK(h.count(*h.find(node(0)), 0) == 2);
}

TEST_CASE("outgoing of unseen pairs is empty") {
    TransitionGraph g;
    CHECK(g.outgoing(node(0), 0).empty());
    for (int i = 0; i < 3; ++i) g.insert({node(0), 1, 0.5, node(1), false});
    CHECK(g.outgoing(node(0), 0).empty());
    auto out = g.outgoing(node(0), 1);
    REQUIRE(out.size() == 1);
    CHECK(out[0].frequency == 3);
}

TEST_CASE("rewards and terminal flags are part of the merge key") {
    TransitionGraph g;
    g.insert({node(0), 0, 0.1, node(1), false});
    g.insert({node(0), 0, 0.1 + 1e-18, node(1), false});  // rounds to the same double
    g.insert({node(0), 0, 0.2, node(1), false});
    g.insert({node(0), 0, 0.1, node(1), true});
    CHECK(g.outgoing(node(0), 0).size() == 3);
    CHECK(g.distinct_transitions() == 3);
    CHECK(g.total_transitions() == 4);
}

TEST_CASE("counter consistency on random insert sequences") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        TransitionGraph g;
        for (int i = 0; i < 300; ++i)
            g.insert({node(static_cast<int>(rng.below(20))), static_cast<Action>(rng.below(3)),
                      static_cast<double>(rng.below(2)), node(static_cast<int>(rng.below(20))), rng.bernoulli(0.1)});
        check_counters(g);
    }
}

TEST_CASE("weighted_sample") {
    Rng rng(1);
    std::vector<std::uint64_t> w{1, 1};
    CHECK(weighted_sample(w, 2, rng) == std::vector<std::size_t>{0, 1});
    CHECK(weighted_sample(std::span<const std::uint64_t>{}, 5, rng).empty());

    std::vector<std::uint64_t> skew{3, 1};
    int first = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) first += weighted_sample(skew, 1, rng)[0] == 0;
    CHECK(std::abs(static_cast<double>(first) / draws - 0.75) < 0.01);
}

TEST_CASE("weighted_sample is without replacement and deterministic") {
    std::vector<std::uint64_t> w{5, 1, 2, 9, 1, 1, 4};
    Rng a(3), b(3);
    for (int i = 0; i < 200; ++i) {
        auto x = weighted_sample(w, 4, a);
        CHECK(x == weighted_sample(w, 4, b));
        CHECK(std::set<std::size_t>(x.begin(), x.end()).size() == 4);
    }
    Rng c(4);
    auto all = weighted_sample(w, 100, c);
    CHECK(all.size() == w.size());
}

TEST_CASE("sequential-draw law for the second pick") {
    // P(second pick = 2 | weights 1,1,2) = sum over first picks
    // = 1/4*2/3 + 1/4*2/3 = 1/3; P(set contains 2) = 1/2 + 1/3.
    std::vector<std::uint64_t> w{1, 1, 2};
    Rng rng(99);
    int hits = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        auto pick = weighted_sample(w, 2, rng);
        hits += std::find(pick.begin(), pick.end(), 2u) != pick.end();
    }
    CHECK(std::abs(static_cast<double>(hits) / draws - 5.0 / 6.0) < 0.01);
}

TEST_CASE("novel_state_ratio") {
    TransitionGraph empty;
    CHECK_THROWS(empty.novel_state_ratio());

    // 10 observations, 7 distinct
    TransitionGraph g;
    g.observe_initial(node(0));
    int nexts[] = {1, 2, 3, 1, 4, 5, 6, 2, 0};
    int prev = 0;
    for (int n : nexts) {
        g.insert({node(prev), 0, 0.0, node(n), false});
        prev = n;
    }
    CHECK(g.state_observations() == 10);
    CHECK(g.state_count() == 7);
    CHECK(g.novel_state_ratio() == doctest::Approx(0.7));

    TransitionGraph distinct;
    distinct.observe_initial(node(0));
    for (int i = 0; i < 5; ++i) distinct.insert({node(i), 0, 0.0, node(i + 1), false});
    CHECK(distinct.novel_state_ratio() == 1.0);

    TransitionGraph single;
    single.observe_initial(node(0));
    for (int i = 0; i < 3; ++i) single.insert({node(0), 0, 0.0, node(0), false});
    CHECK(single.novel_state_ratio() == 0.25);
}

TEST_CASE("novel_state_ratio matches a recount over the log") {
    auto env = make_environment("SlipperyGrid:4:0.3");
    auto log = random_walk_dataset(*env, 2000, 5);
    auto g = gbl::testing::graph_from(std::span<const LoggedStep>(log));
    std::set<std::string> unique;
    std::size_t total = 0;
    for (const auto& step : log) {
        if (step.step == 0) {
            unique.insert(step.record.state.hex());
            ++total;
        }
        unique.insert(step.record.next_state.hex());
        ++total;
    }
    CHECK(g.novel_state_ratio() == static_cast<double>(unique.size()) / static_cast<double>(total));
    CHECK(g.total_transitions() == log.size());
}

TEST_CASE("graph is invariant to episode order") {
    auto env = make_environment("SlipperyGrid:4:0.2");
    auto log = random_walk_dataset(*env, 1500, 9);
    auto episodes = split_episodes(log);
    std::reverse(episodes.begin(), episodes.end());
    TrajectoryLog permuted;
    for (auto ep : episodes) permuted.insert(permuted.end(), ep.begin(), ep.end());
    auto a = gbl::testing::graph_from(std::span<const LoggedStep>(log));
    auto b = gbl::testing::graph_from(std::span<const LoggedStep>(permuted));
    CHECK(a.sorted_entries() == b.sorted_entries());
    CHECK(a.novel_state_ratio() == b.novel_state_ratio());
}

TEST_CASE("save/load round trip") {
    TransitionGraph g;
    g.observe_initial(node(0));
    g.insert({node(0), 0, 0.0, node(1), false});
    g.insert({node(0), 0, 0.0, node(1), false});
    g.insert({node(0), 0, 0.3, node(2), true});
    auto path = temp_path("roundtrip.tgph");
    g.save(path);
    auto back = TransitionGraph::load(path);
    CHECK(back == g);
    CHECK(back.novel_state_ratio() == g.novel_state_ratio());
    std::filesystem::remove(path);
}

TEST_CASE("load errors and empty files") {
    TransitionGraph g;
    g.observe_initial(node(0));
    g.insert({node(0), 1, 0.25, node(1), false});
    std::ostringstream os;
    g.write_binary(os);
    std::string bytes = os.str();

    for (std::size_t cut : {bytes.size() - 1, bytes.size() - 9, std::size_t{7}}) {
        std::istringstream is(bytes.substr(0, cut));
        CHECK_THROWS_AS(TransitionGraph::read_binary(is), ParseError);
    }
    std::istringstream bad("XXXXX");
    CHECK_THROWS_AS(TransitionGraph::read_binary(bad), ParseError);

    std::ostringstream empty_os;
    TransitionGraph{}.write_binary(empty_os);
    std::istringstream empty_is(empty_os.str());
    CHECK(TransitionGraph::read_binary(empty_is).empty());

    std::istringstream header_only("TGPH1");
    CHECK(TransitionGraph::read_binary(header_only).empty());
}

TEST_CASE("edge list export") {
    TransitionGraph g;
    g.insert({node(0), 1, 0.5, node(1), false});
    g.insert({node(0), 1, 0.5, node(1), false});
    std::ostringstream os;
    g.write_edge_list(os);
    CHECK(os.str() == "00000000 1 0.5 01000000 0 2\n");
}
