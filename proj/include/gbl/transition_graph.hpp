#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gbl/env.hpp"
#include "gbl/rng.hpp"
#include "gbl/state_key.hpp"

namespace gbl {

using StateId = std::uint32_t;
using PairId = std::uint32_t;

/// A distinct (s, a, r, s', terminal) tuple stored under its action node,
/// with multiplicity f(T).
struct Transition {
    double reward = 0.0;
    StateId next = 0;
    bool terminal = false;
    std::uint64_t frequency = 0;
};

/// Handle to one stored transition: the action node plus its index in
/// that node's out-list.
struct TransitionRef {
    PairId pair = 0;
    std::uint32_t index = 0;

    friend bool operator==(const TransitionRef&, const TransitionRef&) = default;
};

struct ActionNode {
    StateId state = 0;
    Action action = 0;
    std::uint64_t count = 0;  // c(s,a)
    std::vector<Transition> out;
};

/// Transition with keys resolved, as returned by the key-based queries.
struct OutgoingEntry {
    double reward = 0.0;
    StateKey next_state;
    bool terminal = false;
    std::uint64_t frequency = 0;
};

/// Bipartite multigraph of seen states and (state, action) nodes.
///
/// State nodes own the list of action nodes tried from them; action nodes
/// own the distinct outgoing transitions with their frequencies. Identical
/// tuples are merged, comparing rewards bit-exactly. All const members are
/// safe for concurrent readers; writers need exclusive access.
class TransitionGraph {
public:
    /// Records an episode start state as an observation.
    void observe_initial(const StateKey& state);

    /// Adds one observed transition. The next state counts as an
    /// observation; the source state counts only if it was never seen.
    void insert(const TransitionRecord& record);

    std::optional<StateId> find(const StateKey& state) const;
    std::optional<PairId> find_pair(StateId state, Action action) const;
    const StateKey& key(StateId id) const { return states_.at(id).key; }

    std::span<const Transition> outgoing(StateId state, Action action) const;
    std::vector<OutgoingEntry> outgoing(const StateKey& state, Action action) const;
    std::span<const PairId> pairs_of(StateId state) const { return states_.at(state).pairs; }
    const ActionNode& pair(PairId id) const { return pairs_.at(id); }
    const Transition& transition(TransitionRef ref) const { return pairs_.at(ref.pair).out.at(ref.index); }

    std::uint64_t count(StateId state, Action action) const;
    std::uint64_t count(StateId state) const { return states_.at(state).count; }

    std::size_t state_count() const noexcept { return states_.size(); }
    std::size_t pair_count() const noexcept { return pairs_.size(); }
    std::size_t distinct_transitions() const noexcept { return distinct_; }
    std::uint64_t total_transitions() const noexcept { return total_; }
    std::uint64_t state_observations() const noexcept { return observations_; }
    bool empty() const noexcept { return states_.empty(); }

    /// Distinct episode start states in first-seen order.
    std::span<const StateId> initial_states() const noexcept { return initial_; }

    /// Unique states seen divided by all state observations. Throws on an
    /// empty graph.
    double novel_state_ratio() const;

    /// Stable, order-independent listing used for content comparison.
    struct Entry {
        StateKey state;
        Action action;
        double reward;
        StateKey next_state;
        bool terminal;
        std::uint64_t frequency;
        friend bool operator==(const Entry&, const Entry&) = default;
    };
    std::vector<Entry> sorted_entries() const;

    /// Structural equality including insertion order and counters.
    friend bool operator==(const TransitionGraph& a, const TransitionGraph& b);

    void save(const std::filesystem::path& path) const;
    static TransitionGraph load(const std::filesystem::path& path);
    void write_binary(std::ostream& os) const;
    static TransitionGraph read_binary(std::istream& is);

    /// One line per stored transition: `hex(s) action reward hex(s') terminal f`.
    void write_edge_list(std::ostream& os) const;

private:
    struct StateNode {
        StateKey key;
        std::uint64_t count = 0;  // c(s)
        std::vector<PairId> pairs;
    };

    StateId intern(const StateKey& key, bool& created);
    PairId intern_pair(StateId state, Action action);
    void add_transition(StateId s, Action a, double reward, StateId next, bool terminal, std::uint64_t f);

    static std::uint64_t pair_key(StateId s, Action a) { return (std::uint64_t(s) << 32) | a; }

    std::vector<StateNode> states_;
    std::vector<ActionNode> pairs_;
    std::unordered_map<StateKey, StateId, StateKeyHash> index_;
    std::unordered_map<std::uint64_t, PairId> pair_index_;
    std::vector<StateId> initial_;
    std::vector<std::uint64_t> initial_counts_;
    std::uint64_t total_ = 0;
    std::uint64_t observations_ = 0;
    std::size_t distinct_ = 0;
};

/// Draws min(budget, weights.size()) distinct indices without replacement,
/// each draw proportional to weight among the remaining items. Uses
/// exponential keys (Efraimidis-Spirakis), which has the same law as
/// sequential weighted draws. When everything fits in the budget all
/// indices are returned without consuming randomness. Output is sorted.
std::vector<std::size_t> weighted_sample(std::span<const std::uint64_t> weights, std::size_t budget, Rng& rng);

/// Frequency-weighted sample over stored transitions.
std::vector<TransitionRef> weighted_sample(const TransitionGraph& graph, std::span<const TransitionRef> candidates,
                                           std::size_t budget, Rng& rng);

}  // namespace gbl
