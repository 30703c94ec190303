#include <algorithm>
#include <optional>
#include <stdexcept>
#include <unordered_set>

#include "backup_detail.hpp"
#include "gbl/errors.hpp"

namespace gbl {

using detail::memo_key;

std::size_t ExpansionList::pair_count() const {
    if (levels.empty()) return 1;
    std::size_t n = 0;
    for (const auto& l : levels) n += l.pairs.size();
    return n;
}

namespace {

// Distinct non-terminal next states of the selected transitions.
std::vector<StateId> next_boundary(const TransitionGraph& graph, std::span<const TransitionRef> selected) {
    std::vector<StateId> boundary;
    std::unordered_set<StateId> seen;
    for (const auto& ref : selected) {
        const auto& t = graph.transition(ref);
        if (!t.terminal && seen.insert(t.next).second) boundary.push_back(t.next);
    }
    return boundary;
}

void append_refs(const TransitionGraph& graph, PairId p, std::vector<TransitionRef>& out) {
    const auto& node = graph.pair(p);
    for (std::uint32_t i = 0; i < node.out.size(); ++i) out.push_back(TransitionRef{p, i});
}

ExpansionLevel make_level(const TransitionGraph& graph, std::vector<TransitionRef> selected) {
    ExpansionLevel level;
    for (const auto& ref : selected) {
        const auto& node = graph.pair(ref.pair);
        ExpandedPair ep{node.state, node.action};
        if (level.pairs.empty() || !(level.pairs.back() == ep)) level.pairs.push_back(ep);
    }
    level.selected = std::move(selected);
    return level;
}

}  // namespace

ExpansionList expand_local_graph(const TransitionGraph& graph, const StateKey& source_state, Action source_action,
                                 std::uint32_t depth, std::uint32_t breadth, Rng& rng, bool per_pair_cap) {
    if (depth == 0 || breadth == 0) throw std::invalid_argument("depth and breadth limits must be positive");
    ExpansionList list;
    list.source_state = source_state;
    list.source_action = source_action;
    list.source_id = graph.find(source_state);
    if (!list.source_id) return list;

    // Level 0 only considers transitions of the source pair itself.
    std::vector<TransitionRef> candidates;
    if (auto p = graph.find_pair(*list.source_id, source_action)) append_refs(graph, *p, candidates);
    auto level = make_level(graph, weighted_sample(graph, candidates, breadth, rng));
    if (level.pairs.empty()) level.pairs.push_back(ExpandedPair{*list.source_id, source_action});
    list.levels.push_back(std::move(level));

    for (std::uint32_t i = 1; i < depth; ++i) {
        auto boundary = next_boundary(graph, list.levels.back().selected);
        std::vector<TransitionRef> selected;
        if (per_pair_cap) {
            for (StateId s : boundary) {
                for (PairId p : graph.pairs_of(s)) {
                    candidates.clear();
                    append_refs(graph, p, candidates);
                    auto chosen = weighted_sample(graph, candidates, breadth, rng);
                    selected.insert(selected.end(), chosen.begin(), chosen.end());
                }
            }
        } else {
            candidates.clear();
            for (StateId s : boundary)
                for (PairId p : graph.pairs_of(s)) append_refs(graph, p, candidates);
            selected = weighted_sample(graph, candidates, breadth, rng);
        }
        if (selected.empty()) break;
        list.levels.push_back(make_level(graph, std::move(selected)));
    }
    return list;
}

namespace {

/// Memo of refined G values, falling back to a leaf model. Rows are
/// copied from the leaf on first touch so each state costs one lookup.
class ScalarMemo {
public:
    ScalarMemo(const TransitionGraph& graph, const ValueEstimator& leaf)
        : graph_(graph), leaf_(leaf), actions_(leaf.action_count()) {}

    double get(StateId s, Action a) { return row(s)[a]; }
    void put(StateId s, Action a, double v) { row(s)[a] = v; }

    std::pair<Action, double> best(StateId s) {
        const double* r = row(s);
        Action best = 0;
        for (Action a = 1; a < actions_; ++a)
            if (r[a] > r[best]) best = a;
        return {best, r[best]};
    }

private:
    double* row(StateId s) {
        auto [it, fresh] = offsets_.try_emplace(s, values_.size());
        if (fresh) {
            const StateKey& key = graph_.key(s);
            for (Action a = 0; a < actions_; ++a) values_.push_back(leaf_.q(key, a));
        }
        return values_.data() + it->second;
    }

    const TransitionGraph& graph_;
    const ValueEstimator& leaf_;
    Action actions_;
    std::unordered_map<StateId, std::size_t> offsets_;
    std::vector<double> values_;
};

/// Reverse-order evaluation of an expansion. With `online`, a selector
/// memo seeded from the online model is refined in lockstep; the action at
/// each next state is its argmax, and the target memo supplies the value.
ScalarMemo evaluate_expansion(const TransitionGraph& graph, const ExpansionList& expansion,
                              const ValueEstimator& leaf, const BackupConfig& cfg, const ValueEstimator* online) {
    ScalarMemo memo(graph, leaf);
    std::optional<ScalarMemo> selector;
    if (online) selector.emplace(graph, *online);

    auto policy_value = [&](ScalarMemo& m, StateId s) {
        auto pi = cfg.policy->probs(graph.key(s));
        double v = 0.0;
        for (Action a = 0; a < pi.size(); ++a)
            if (pi[a] != 0.0) v += pi[a] * m.get(s, a);
        return v;
    };
    auto pair_of = [](const TransitionGraph&, const TransitionRef& r) { return r.pair; };

    for (auto level = expansion.levels.rbegin(); level != expansion.levels.rend(); ++level) {
        std::span<const TransitionRef> selected = level->selected;
        detail::for_each_group_reversed(graph, selected, pair_of, [&](std::size_t begin, std::size_t end) {
            double sum = 0.0, sel_sum = 0.0, weight = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto& t = graph.transition(selected[i]);
                const double f = static_cast<double>(t.frequency);
                weight += f;
                if (t.terminal) {
                    sum += f * t.reward;
                    sel_sum += f * t.reward;
                    continue;
                }
                if (cfg.policy_mode == PolicyMode::explicit_table) {
                    sum += f * (t.reward + cfg.gamma * policy_value(memo, t.next));
                } else if (selector) {
                    auto [a_star, sel_v] = selector->best(t.next);
                    sum += f * (t.reward + cfg.gamma * memo.get(t.next, a_star));
                    sel_sum += f * (t.reward + cfg.gamma * sel_v);
                } else {
                    sum += f * (t.reward + cfg.gamma * memo.best(t.next).second);
                }
            }
            const auto& node = graph.pair(selected[begin].pair);
            memo.put(node.state, node.action, sum / weight);
            if (selector) selector->put(node.state, node.action, sel_sum / weight);
        });
    }
    return memo;
}

}  // namespace

double graph_backup_target(const TransitionGraph& graph, const ExpansionList& expansion, const Models& models,
                           const BackupConfig& cfg) {
    if (!expansion.source_id) return models.target.q(expansion.source_state, expansion.source_action);
    const bool use_double = cfg.double_q && cfg.policy_mode == PolicyMode::greedy;
    if (!use_double) {
        auto memo = evaluate_expansion(graph, expansion, models.target, cfg, nullptr);
        return memo.get(*expansion.source_id, expansion.source_action);
    }
    auto memo = evaluate_expansion(graph, expansion, models.target, cfg, &models.online);
    return memo.get(*expansion.source_id, expansion.source_action);
}

double graph_backup_target(const TransitionGraph& graph, const StateKey& state, Action action, const Models& models,
                           const BackupConfig& cfg, Rng& rng) {
    auto expansion = expand_local_graph(graph, state, action, cfg.depth, cfg.breadth, rng, cfg.per_pair_cap);
    return graph_backup_target(graph, expansion, models, cfg);
}

double mixed_graph_backup_target(const TransitionGraph& graph, const ExpansionList& expansion, const Models& models,
                                 const BackupConfig& cfg) {
    if (!expansion.source_id) return models.target.q(expansion.source_state, expansion.source_action);

    std::unordered_map<StateId, double> state_value;
    auto value_of = [&](StateId s) {
        auto it = state_value.find(s);
        return it != state_value.end() ? it->second : detail::leaf_value(graph.key(s), models, cfg);
    };
    auto weighted_mean = [&](std::span<const TransitionRef> refs) {
        double sum = 0.0, weight = 0.0;
        for (const auto& ref : refs) {
            const auto& t = graph.transition(ref);
            const double f = static_cast<double>(t.frequency);
            sum += f * (t.terminal ? t.reward : t.reward + cfg.gamma * value_of(t.next));
            weight += f;
        }
        return sum / weight;
    };
    auto state_of = [](const TransitionGraph& g, const TransitionRef& r) { return g.pair(r.pair).state; };

    for (std::size_t i = expansion.levels.size(); i-- > 1;) {
        std::span<const TransitionRef> selected = expansion.levels[i].selected;
        detail::for_each_group_reversed(graph, selected, state_of, [&](std::size_t begin, std::size_t end) {
            state_value.insert_or_assign(graph.pair(selected[begin].pair).state,
                                         weighted_mean(selected.subspan(begin, end - begin)));
        });
    }
    const auto& root = expansion.levels.front().selected;
    if (root.empty()) return models.target.q(expansion.source_state, expansion.source_action);
    return weighted_mean(root);
}

double mixed_graph_backup_target(const TransitionGraph& graph, const StateKey& state, Action action,
                                 const Models& models, const BackupConfig& cfg, Rng& rng) {
    auto expansion = expand_local_graph(graph, state, action, cfg.depth, cfg.breadth, rng, cfg.per_pair_cap);
    return mixed_graph_backup_target(graph, expansion, models, cfg);
}

}  // namespace gbl
