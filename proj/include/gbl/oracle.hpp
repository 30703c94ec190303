#pragma once

#include <unordered_map>
#include <vector>

#include "gbl/env.hpp"

namespace gbl {

/// Exact q* of an enumerable environment.
struct OptimalQ {
    std::unordered_map<StateKey, std::vector<double>, StateKeyHash> values;
    double residual = 0.0;
    int sweeps = 0;

    /// Zero for states outside the enumerated set (terminal markers).
    double q(const StateKey& s, Action a) const;
    double v(const StateKey& s) const;
    Action greedy(const StateKey& s) const;
};

/// Value iteration on the environment's known kernel until the Bellman
/// optimality residual is below 1e-10. Throws UnsupportedError for
/// non-enumerable environments.
OptimalQ optimal_q_oracle(const Environment& env, double gamma);

}  // namespace gbl
