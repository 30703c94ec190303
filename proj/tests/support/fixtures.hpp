#pragma once

// Random dataset builders shared by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "gbl/env.hpp"
#include "gbl/rng.hpp"
#include "gbl/trajectory.hpp"
#include "gbl/transition_graph.hpp"
#include "gbl/value_model.hpp"

namespace gbl::testing {

inline StateKey node(int i) { return TableMdp::key(i); }

/// Random DAG over up to `max_states` nodes: edges only go from lower to
/// higher node ids, some end terminally, some are inserted repeatedly.
inline TransitionGraph random_acyclic_graph(Rng& rng, int max_states, Action actions) {
    TransitionGraph g;
    int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_states - 1)));
    g.observe_initial(node(0));
    for (int s = 0; s < n - 1; ++s) {
        std::uint64_t tries = 1 + rng.below(4);
        for (std::uint64_t k = 0; k < tries; ++k) {
            Action a = static_cast<Action>(rng.below(actions));
            int next = s + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1 - s)));
            double r = rng.uniform();
            bool terminal = rng.bernoulli(0.15);
            std::uint64_t copies = 1 + rng.below(3);
            for (std::uint64_t c = 0; c < copies; ++c) g.insert({node(s), a, r, node(next), terminal});
        }
    }
    return g;
}

/// A single trajectory through distinct states with random actions and
/// rewards; optionally ends terminally.
inline std::vector<TransitionRecord> random_trajectory(Rng& rng, int length, Action actions, bool terminal_end) {
    std::vector<TransitionRecord> traj;
    for (int i = 0; i < length; ++i) {
        bool last = i + 1 == length;
        traj.push_back({node(i), static_cast<Action>(rng.below(actions)), rng.bernoulli(0.3) ? rng.uniform() : 0.0,
                        node(i + 1), last && terminal_end});
    }
    return traj;
}

/// Table with random values in [lo, hi) for nodes [0, states).
inline ScalarQTable random_table(Rng& rng, int states, Action actions, double lo = 0.0, double hi = 1.0) {
    ScalarQTable t(actions);
    for (int s = 0; s < states; ++s)
        for (Action a = 0; a < actions; ++a) t.set(node(s), a, lo + (hi - lo) * rng.uniform());
    return t;
}

inline TransitionGraph graph_from(std::span<const TransitionRecord> records) {
    TransitionGraph g;
    if (!records.empty()) g.observe_initial(records.front().state);
    for (const auto& r : records) g.insert(r);
    return g;
}

inline TransitionGraph graph_from(std::span<const LoggedStep> log) {
    TransitionGraph g;
    for (const auto& step : log) {
        if (step.step == 0) g.observe_initial(step.record.state);
        g.insert(step.record);
    }
    return g;
}

/// Every (state, action) pair stored in the graph.
inline std::vector<std::pair<StateKey, Action>> stored_pairs(const TransitionGraph& g) {
    std::vector<std::pair<StateKey, Action>> out;
    for (std::size_t p = 0; p < g.pair_count(); ++p) {
        const auto& node = g.pair(static_cast<PairId>(p));
        out.emplace_back(g.key(node.state), node.action);
    }
    return out;
}

}  // namespace gbl::testing
