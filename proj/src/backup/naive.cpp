#include <algorithm>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "backup_detail.hpp"
#include "gbl/errors.hpp"

namespace gbl {

double naive_recursive_target(const TransitionGraph& graph, const StateKey& state, Action action,
                              const ValueEstimator& target, double gamma, std::optional<std::uint32_t> depth_cap) {
    auto source = graph.find(state);
    if (!source) return target.q(state, action);

    // Memo key carries the remaining depth when capped.
    auto key = [](StateId s, Action a, std::uint32_t depth) {
        return std::tuple<StateId, Action, std::uint32_t>{s, a, depth};
    };
    struct Hash {
        std::size_t operator()(const std::tuple<StateId, Action, std::uint32_t>& k) const noexcept {
            auto [s, a, d] = k;
            return std::hash<std::uint64_t>()((std::uint64_t(s) << 32 | a) * 0x9e3779b97f4a7c15ULL ^ d);
        }
    };
    std::unordered_map<std::tuple<StateId, Action, std::uint32_t>, double, Hash> memo;
    std::unordered_set<std::uint64_t> on_stack;

    std::function<double(StateId, Action, std::uint32_t)> value = [&](StateId s, Action a, std::uint32_t depth) {
        auto outs = graph.outgoing(s, a);
        if (outs.empty() || (depth_cap && depth == 0)) return target.q(graph.key(s), a);
        auto k = key(s, a, depth_cap ? depth : 0);
        if (auto it = memo.find(k); it != memo.end()) return it->second;
        const auto sk = detail::memo_key(s, a);
        if (!depth_cap && !on_stack.insert(sk).second)
            throw CycleError("transition graph has a cycle through state " + graph.key(s).hex());

        double sum = 0.0, weight = 0.0;
        for (const auto& t : outs) {
            const double f = static_cast<double>(t.frequency);
            double g = t.reward;
            if (!t.terminal) {
                double best = value(t.next, 0, depth - 1);
                for (Action b = 1; b < target.action_count(); ++b) best = std::max(best, value(t.next, b, depth - 1));
                g = t.reward + gamma * best;
            }
            sum += f * g;
            weight += f;
        }
        on_stack.erase(sk);
        double g = sum / weight;
        memo.emplace(k, g);
        return g;
    };
    return value(*source, action, depth_cap ? *depth_cap : 0);
}

std::uint32_t longest_path(const TransitionGraph& graph) {
    enum Mark : std::uint8_t { unvisited, active, finished };
    std::vector<Mark> mark(graph.state_count(), unvisited);
    std::vector<std::uint32_t> length(graph.state_count(), 0);
    std::function<std::uint32_t(StateId)> visit = [&](StateId s) -> std::uint32_t {
        if (mark[s] == finished) return length[s];
        if (mark[s] == active) throw CycleError("transition graph has a cycle through state " + graph.key(s).hex());
        mark[s] = active;
        std::uint32_t best = 0;
        for (PairId p : graph.pairs_of(s)) {
            for (const auto& t : graph.pair(p).out)
                best = std::max(best, 1 + (t.terminal ? 0 : visit(t.next)));
        }
        mark[s] = finished;
        length[s] = best;
        return best;
    };
    std::uint32_t best = 0;
    for (StateId s = 0; s < graph.state_count(); ++s) best = std::max(best, visit(s));
    return best;
}

}  // namespace gbl
