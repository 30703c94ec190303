#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "backup_detail.hpp"
#include "gbl/errors.hpp"

namespace gbl {

using detail::memo_key;

void project_categorical(std::span<double> out, double weight, double reward, double gamma, bool terminal,
                         std::span<const double> child, const CategoricalSupport& support) {
    const double dz = support.delta();
    const double top = static_cast<double>(support.atoms - 1);
    auto place = [&](double z, double mass) {
        z = std::clamp(z, support.v_min, support.v_max);
        double b = std::clamp((z - support.v_min) / dz, 0.0, top);
        double l = std::floor(b), u = std::ceil(b);
        auto li = static_cast<std::size_t>(l), ui = static_cast<std::size_t>(u);
        if (li == ui) {
            out[li] += mass;
        } else {
            out[li] += mass * (u - b);
            out[ui] += mass * (b - l);
        }
    };
    if (terminal) {
        place(reward, weight);
        return;
    }
    for (std::size_t j = 0; j < support.atoms; ++j) {
        if (child[j] != 0.0) place(reward + gamma * support.atom(j), weight * child[j]);
    }
}

namespace {

class DistMemo {
public:
    DistMemo(const TransitionGraph& graph, const CategoricalQTable& leaf) : graph_(graph), leaf_(leaf) {}

    std::span<const double> get(StateId s, Action a) const {
        auto it = memo_.find(memo_key(s, a));
        return it != memo_.end() ? std::span<const double>(it->second) : leaf_.dist(graph_.key(s), a);
    }
    double mean(StateId s, Action a) const { return expected_value(get(s, a), leaf_.atoms()); }
    Action best(StateId s) const {
        Action best = 0;
        double best_v = mean(s, 0);
        for (Action a = 1; a < leaf_.action_count(); ++a) {
            double v = mean(s, a);
            if (v > best_v) {
                best = a;
                best_v = v;
            }
        }
        return best;
    }
    void put(StateId s, Action a, std::vector<double> m) { memo_.insert_or_assign(memo_key(s, a), std::move(m)); }

private:
    const TransitionGraph& graph_;
    const CategoricalQTable& leaf_;
    std::unordered_map<std::uint64_t, std::vector<double>> memo_;
};

/// Reverse-order categorical evaluation. With `online`, a selector memo
/// seeded from the online table is refined in lockstep and picks a* at
/// every next state; the target memo supplies the distribution.
DistMemo evaluate_dist(const TransitionGraph& graph, const ExpansionList& expansion, const CategoricalQTable& leaf,
                       const CategoricalSupport& support, const BackupConfig& cfg, const CategoricalQTable* online) {
    DistMemo memo(graph, leaf);
    std::optional<DistMemo> selector;
    if (online) selector.emplace(graph, *online);
    std::vector<double> mixture(support.atoms);

    // Child distribution at a next state under the target policy.
    auto child = [&](const DistMemo& m, StateId s, Action greedy) -> std::span<const double> {
        if (cfg.policy_mode == PolicyMode::explicit_table) {
            auto pi = cfg.policy->probs(graph.key(s));
            std::fill(mixture.begin(), mixture.end(), 0.0);
            for (Action a = 0; a < pi.size(); ++a) {
                if (pi[a] == 0.0) continue;
                auto d = m.get(s, a);
                for (std::size_t j = 0; j < mixture.size(); ++j) mixture[j] += pi[a] * d[j];
            }
            return mixture;
        }
        return m.get(s, greedy);
    };
    auto project_group = [&](std::span<const TransitionRef> group, const DistMemo& m, const DistMemo& chooser) {
        double c_hat = 0.0;
        for (const auto& ref : group) c_hat += static_cast<double>(graph.transition(ref).frequency);
        std::vector<double> out(support.atoms, 0.0);
        for (const auto& ref : group) {
            const auto& t = graph.transition(ref);
            const double w = static_cast<double>(t.frequency) / c_hat;
            std::span<const double> d = t.terminal ? std::span<const double>() : child(m, t.next, chooser.best(t.next));
            project_categorical(out, w, t.reward, cfg.gamma, t.terminal, d, support);
        }
        double total = std::accumulate(out.begin(), out.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-6)
            throw ConsistencyError("projected target distribution sums to " + std::to_string(total));
        return out;
    };
    auto pair_of = [](const TransitionGraph&, const TransitionRef& r) { return r.pair; };

    for (auto level = expansion.levels.rbegin(); level != expansion.levels.rend(); ++level) {
        std::span<const TransitionRef> selected = level->selected;
        detail::for_each_group_reversed(graph, selected, pair_of, [&](std::size_t begin, std::size_t end) {
            auto group = selected.subspan(begin, end - begin);
            const auto& node = graph.pair(selected[begin].pair);
            auto m = project_group(group, memo, selector ? *selector : memo);
            if (selector) selector->put(node.state, node.action, project_group(group, *selector, *selector));
            memo.put(node.state, node.action, std::move(m));
        });
    }
    return memo;
}

}  // namespace

std::vector<double> distributional_graph_backup(const TransitionGraph& graph, const ExpansionList& expansion,
                                                const CategoricalModels& models, const BackupConfig& cfg) {
    const auto& support = models.target.support();
    if (!(models.online.support() == support)) throw std::invalid_argument("online and target supports differ");
    auto source = [&](const DistMemo& memo) {
        auto d = memo.get(*expansion.source_id, expansion.source_action);
        return std::vector<double>(d.begin(), d.end());
    };
    if (!expansion.source_id) {
        auto d = models.target.dist(expansion.source_state, expansion.source_action);
        return {d.begin(), d.end()};
    }
    if (cfg.double_q && cfg.policy_mode == PolicyMode::greedy) {
        return source(evaluate_dist(graph, expansion, models.target, support, cfg, &models.online));
    }
    return source(evaluate_dist(graph, expansion, models.target, support, cfg, nullptr));
}

std::vector<double> distributional_one_step(const TransitionRecord& t, const CategoricalModels& models,
                                            const BackupConfig& cfg) {
    const auto& support = models.target.support();
    std::vector<double> m(support.atoms, 0.0);
    if (t.terminal) {
        project_categorical(m, 1.0, t.reward, cfg.gamma, true, {}, support);
        return m;
    }
    const auto& s = t.next_state;
    if (cfg.policy_mode == PolicyMode::explicit_table) {
        auto pi = cfg.policy->probs(s);
        for (Action a = 0; a < pi.size(); ++a)
            if (pi[a] != 0.0) project_categorical(m, pi[a], t.reward, cfg.gamma, false, models.target.dist(s, a), support);
        return m;
    }
    Action a = greedy_action(cfg.double_q ? static_cast<const ValueEstimator&>(models.online) : models.target, s);
    project_categorical(m, 1.0, t.reward, cfg.gamma, false, models.target.dist(s, a), support);
    return m;
}

}  // namespace gbl
