#include "gbl/transition_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace gbl {

StateId TransitionGraph::intern(const StateKey& key, bool& created) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<StateId>(states_.size()));
    created = inserted;
    if (inserted) states_.push_back(StateNode{key, 0, {}});
    return it->second;
}

PairId TransitionGraph::intern_pair(StateId state, Action action) {
    auto [it, inserted] = pair_index_.try_emplace(pair_key(state, action), static_cast<PairId>(pairs_.size()));
    if (inserted) {
        pairs_.push_back(ActionNode{state, action, 0, {}});
        states_[state].pairs.push_back(it->second);
    }
    return it->second;
}

void TransitionGraph::add_transition(StateId s, Action a, double reward, StateId next, bool terminal,
                                     std::uint64_t f) {
    auto& node = pairs_[intern_pair(s, a)];
    auto same = [&](const Transition& t) {
        return t.next == next && t.terminal == terminal &&
               std::bit_cast<std::uint64_t>(t.reward) == std::bit_cast<std::uint64_t>(reward);
    };
    auto it = std::find_if(node.out.begin(), node.out.end(), same);
    if (it != node.out.end()) {
        it->frequency += f;
    } else {
        node.out.push_back(Transition{reward, next, terminal, f});
        ++distinct_;
    }
    node.count += f;
    states_[s].count += f;
    total_ += f;
}

void TransitionGraph::observe_initial(const StateKey& state) {
    bool created = false;
    StateId id = intern(state, created);
    ++observations_;
    auto it = std::find(initial_.begin(), initial_.end(), id);
    if (it == initial_.end()) {
        initial_.push_back(id);
        initial_counts_.push_back(1);
    } else {
        ++initial_counts_[it - initial_.begin()];
    }
}

void TransitionGraph::insert(const TransitionRecord& record) {
    bool created = false;
    StateId s = intern(record.state, created);
    if (created) ++observations_;
    StateId next = intern(record.next_state, created);
    ++observations_;
    add_transition(s, record.action, record.reward, next, record.terminal, 1);
}

std::optional<StateId> TransitionGraph::find(const StateKey& state) const {
    auto it = index_.find(state);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<PairId> TransitionGraph::find_pair(StateId state, Action action) const {
    auto it = pair_index_.find(pair_key(state, action));
    if (it == pair_index_.end()) return std::nullopt;
    return it->second;
}

std::span<const Transition> TransitionGraph::outgoing(StateId state, Action action) const {
    auto p = find_pair(state, action);
    if (!p) return {};
    return pairs_[*p].out;
}

std::vector<OutgoingEntry> TransitionGraph::outgoing(const StateKey& state, Action action) const {
    std::vector<OutgoingEntry> out;
    auto s = find(state);
    if (!s) return out;
    for (const auto& t : outgoing(*s, action))
        out.push_back(OutgoingEntry{t.reward, states_[t.next].key, t.terminal, t.frequency});
    return out;
}

std::uint64_t TransitionGraph::count(StateId state, Action action) const {
    auto p = find_pair(state, action);
    return p ? pairs_[*p].count : 0;
}

double TransitionGraph::novel_state_ratio() const {
    if (observations_ == 0) throw std::logic_error("novel state ratio of an empty graph is undefined");
    return static_cast<double>(states_.size()) / static_cast<double>(observations_);
}

std::vector<TransitionGraph::Entry> TransitionGraph::sorted_entries() const {
    std::vector<Entry> out;
    out.reserve(distinct_);
    for (const auto& node : pairs_) {
        for (const auto& t : node.out)
            out.push_back(Entry{states_[node.state].key, node.action, t.reward, states_[t.next].key, t.terminal,
                                t.frequency});
    }
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.state, a.action, a.reward, a.next_state, a.terminal, a.frequency) <
               std::tie(b.state, b.action, b.reward, b.next_state, b.terminal, b.frequency);
    });
    return out;
}

bool operator==(const TransitionGraph& a, const TransitionGraph& b) {
    if (a.states_.size() != b.states_.size() || a.pairs_.size() != b.pairs_.size() || a.total_ != b.total_ ||
        a.observations_ != b.observations_ || a.distinct_ != b.distinct_ || a.initial_ != b.initial_ ||
        a.initial_counts_ != b.initial_counts_)
        return false;
    for (std::size_t i = 0; i < a.states_.size(); ++i) {
        const auto& x = a.states_[i];
        const auto& y = b.states_[i];
        if (!(x.key == y.key) || x.count != y.count || x.pairs != y.pairs) return false;
    }
    for (std::size_t i = 0; i < a.pairs_.size(); ++i) {
        const auto& x = a.pairs_[i];
        const auto& y = b.pairs_[i];
        if (x.state != y.state || x.action != y.action || x.count != y.count || x.out.size() != y.out.size())
            return false;
        for (std::size_t j = 0; j < x.out.size(); ++j) {
            const auto& t = x.out[j];
            const auto& u = y.out[j];
            if (std::bit_cast<std::uint64_t>(t.reward) != std::bit_cast<std::uint64_t>(u.reward) ||
                t.next != u.next || t.terminal != u.terminal || t.frequency != u.frequency)
                return false;
        }
    }
    return true;
}

std::vector<std::size_t> weighted_sample(std::span<const std::uint64_t> weights, std::size_t budget, Rng& rng) {
    std::vector<std::size_t> picked(weights.size());
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    if (weights.size() <= budget) return picked;
    if (budget == 0) return {};

    // Key log(u)/w; the largest keys are the selected items.
    std::vector<double> keys(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double u = rng.uniform();
        while (u == 0.0) u = rng.uniform();
        keys[i] = std::log(u) / static_cast<double>(weights[i]);
    }
    std::nth_element(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(budget), picked.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] > keys[b] || (keys[a] == keys[b] && a < b); });
    picked.resize(budget);
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::vector<TransitionRef> weighted_sample(const TransitionGraph& graph, std::span<const TransitionRef> candidates,
                                           std::size_t budget, Rng& rng) {
    if (candidates.size() <= budget) return {candidates.begin(), candidates.end()};
    std::vector<std::uint64_t> weights;
    weights.reserve(candidates.size());
    for (const auto& ref : candidates) weights.push_back(graph.transition(ref).frequency);
    std::vector<TransitionRef> out;
    for (auto i : weighted_sample(weights, budget, rng)) out.push_back(candidates[i]);
    return out;
}

}  // namespace gbl
