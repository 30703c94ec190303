#include "gbl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbl/errors.hpp"

namespace gbl {

double OptimalQ::q(const StateKey& s, Action a) const {
    auto it = values.find(s);
    return it == values.end() ? 0.0 : it->second.at(a);
}

double OptimalQ::v(const StateKey& s) const {
    auto it = values.find(s);
    return it == values.end() ? 0.0 : *std::max_element(it->second.begin(), it->second.end());
}

Action OptimalQ::greedy(const StateKey& s) const {
    auto it = values.find(s);
    if (it == values.end()) return 0;
    return static_cast<Action>(std::max_element(it->second.begin(), it->second.end()) - it->second.begin());
}

OptimalQ optimal_q_oracle(const Environment& env, double gamma) {
    if (!env.enumerable()) throw UnsupportedError(env.spec().name + " has no enumerable state space");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");

    const auto states = enumerate_states(env);
    const Action na = env.action_count();

    // Kernel is cached with next states as indices; -1 marks a terminal branch.
    struct Branch {
        double p, r;
        long next;
    };
    std::unordered_map<StateKey, long, StateKeyHash> index;
    for (std::size_t i = 0; i < states.size(); ++i) index.emplace(states[i], static_cast<long>(i));
    std::vector<std::vector<Branch>> kernel(states.size() * na);
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (Action a = 0; a < na; ++a) {
            for (const auto& o : env.outcomes(states[i], a)) {
                long next = o.terminal ? -1 : index.at(o.next_state);
                kernel[i * na + a].push_back({o.probability, o.reward, next});
            }
        }
    }

    std::vector<double> q(states.size() * na, 0.0), v(states.size(), 0.0);
    OptimalQ result;
    for (;;) {
        double delta = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) {
            double backed = 0.0;
            for (const auto& b : kernel[k]) backed += b.p * (b.r + (b.next < 0 ? 0.0 : gamma * v[b.next]));
            delta = std::max(delta, std::abs(backed - q[k]));
            q[k] = backed;
        }
        for (std::size_t i = 0; i < states.size(); ++i)
            v[i] = *std::max_element(q.begin() + i * na, q.begin() + (i + 1) * na);
        ++result.sweeps;
        if (delta < 1e-12) {
            result.residual = delta;
            break;
        }
        if (result.sweeps > 1'000'000) throw std::runtime_error("value iteration failed to converge");
    }
    for (std::size_t i = 0; i < states.size(); ++i)
        result.values.emplace(states[i], std::vector<double>(q.begin() + i * na, q.begin() + (i + 1) * na));
    return result;
}

}  // namespace gbl
